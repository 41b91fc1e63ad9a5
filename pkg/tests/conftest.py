"""Shared fixtures: trained models are expensive, so they are session-scoped."""
import numpy as np
import pytest

from abigx.data import Dataset
from abigx.indices import calibrate_classification, calibrate_detection
from abigx.models import fit_pca, train_ae, train_classifier
from abigx.synthetic import ToySpec, gen_correlated_normal, gen_toy


@pytest.fixture(scope="session")
def pca_testbed():
    """Correlated normal data with a 3-D latent structure, PCA(3), index."""
    x = gen_correlated_normal(500, 10, seed=42)
    model = fit_pca(x, 3)
    index = calibrate_detection(model, x)
    return x, model, index


@pytest.fixture(scope="session")
def toy_data():
    return gen_toy(ToySpec(n_variables=10, n_fault_types=5, magnitude=1.0,
                           sigma=0.1, samples_per_class=100, seed=7))


@pytest.fixture(scope="session")
def toy_classifier(toy_data):
    clf = train_classifier(toy_data, (16,), epochs=800, lr=0.5, rng=3)
    index = calibrate_classification(clf, toy_data)
    return clf, index


@pytest.fixture(scope="session")
def small_ae():
    x = gen_correlated_normal(300, 8, seed=15)
    model = train_ae(Dataset(x), (6, 2, 6), epochs=1500, lr=0.05, rng=9)
    index = calibrate_detection(model, x)
    return x, model, index
