"""Toy data, the closed-form linear classifier, and smearing degrees."""
import numpy as np
import pytest

from abigx.afr import AfrConfig
from abigx.data import Dataset
from abigx.exceptions import ParameterError
from abigx.explainers import abigx, integrated_gradients, saliency
from abigx.indices import ClassLogitField, calibrate_classification
from abigx.synthetic import (
    FisherModel,
    ToySpec,
    fcs_empirical,
    fcs_theoretical,
    fisher_closed_form,
    fisher_fit,
    fisher_gram_entries,
    gen_correlated_normal,
    gen_toy,
    inject_faults,
    onestep_abigx,
)
from abigx.numerics import Rng


def _spec(**kw):
    base = dict(n_variables=10, n_fault_types=5, magnitude=1.0, sigma=0.1,
                samples_per_class=100, seed=7)
    base.update(kw)
    return ToySpec(**base)


class TestGenToy:
    def test_balanced_classes(self):
        ds = gen_toy(_spec())
        for c in range(6):
            assert (ds.labels == c).sum() == 100

    def test_class_means(self):
        ds = gen_toy(_spec(sigma=0.01, samples_per_class=400))
        for y in range(1, 6):
            block = ds.of_class(y)
            assert abs(block[:, y - 1].mean() - 1.0) < 5 * 0.01 / np.sqrt(400)
            other = [i for i in range(10) if i != y - 1]
            assert np.abs(block[:, other].mean(axis=0)).max() < 5 * 0.01 / np.sqrt(400)

    def test_roots_recorded(self):
        ds = gen_toy(_spec())
        assert ds.ground_truth_roots == {y: frozenset({y - 1}) for y in range(1, 6)}

    def test_deterministic(self):
        a, b = gen_toy(_spec()), gen_toy(_spec())
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.labels, b.labels)

    def test_spec_validation(self):
        with pytest.raises(ParameterError):
            _spec(n_fault_types=10)
        with pytest.raises(ParameterError):
            _spec(sigma=0.0)
        with pytest.raises(ParameterError):
            _spec(magnitude=-1.0)


class TestFisherClosedForm:
    def test_two_fault_types(self):
        model = fisher_closed_form(2, 5)
        assert model.weights[0, 0] == pytest.approx(-0.5)
        assert model.weights[1, 0] == pytest.approx(2.0 / 3.0)
        assert model.weights[1, 1] == pytest.approx(-1.0 / 3.0)
        assert np.abs(model.weights[:, 2:]).max() == 0.0

    def test_five_fault_types(self):
        model = fisher_closed_form(5, 10)
        assert model.weights[1, 0] == pytest.approx(5.0 / 9.0)
        assert model.weights[1, 1] == pytest.approx(-1.0 / 9.0)
        assert model.weights[0, 0] == pytest.approx(-0.2)

    def test_rows_l1_normalized(self):
        for n in (2, 3, 5, 7):
            model = fisher_closed_form(n, n + 3)
            assert np.abs(np.abs(model.weights).sum(axis=1) - 1.0).max() < 1e-10

    def test_gram_entries_match_weights(self):
        for n in (2, 5):
            model = fisher_closed_form(n, n + 2)
            gram = model.weights.T @ model.weights
            diag, off = fisher_gram_entries(n)
            assert gram[0, 0] == pytest.approx(diag)
            assert gram[0, 1] == pytest.approx(off)

    def test_classifies_toy_data(self):
        ds = gen_toy(_spec())
        model = fisher_closed_form(5, 10)
        acc = (model.predict(ds.samples) == ds.labels).mean()
        assert acc >= 0.99


class TestFisherFit:
    def test_matches_closed_form_large_sample(self):
        ds = gen_toy(_spec(samples_per_class=10_000, seed=4))
        fitted = fisher_fit(ds)
        reference = fisher_closed_form(5, 10)
        assert np.abs(fitted.weights - reference.weights).max() < 1e-2

    def test_mean_difference_direction(self):
        # class-mean offset from the grand mean: its own variable carries N
        # times the (opposite-signed) weight of the other discriminative ones
        ds = gen_toy(_spec(samples_per_class=10_000, seed=4))
        mus = {c: ds.of_class(c).mean(axis=0) for c in range(6)}
        mu_bar = np.mean(list(mus.values()), axis=0)
        d = mus[2] - mu_bar
        expected = np.zeros(10)
        expected[1] = 1.0
        expected[[0, 2, 3, 4]] = -1.0 / 5.0
        got = d / np.abs(d).sum()
        want = expected / np.abs(expected).sum()
        assert np.abs(got - want).max() < 5e-3

    def test_single_fault_type_degenerate(self):
        ds = gen_toy(ToySpec(n_variables=4, n_fault_types=1, magnitude=1.0,
                             sigma=0.05, samples_per_class=3000, seed=2))
        fitted = fisher_fit(ds)
        assert fitted.weights[1, 0] == pytest.approx(1.0, abs=1e-2)
        assert np.abs(fitted.weights[1, 1:]).max() < 1e-2

    def test_needs_labels(self):
        with pytest.raises(ParameterError):
            fisher_fit(Dataset(np.zeros((4, 2)) + Rng(0).normal(0, 1, 8).reshape(4, 2)))


class TestSmearingDegrees:
    def test_saliency_exact(self):
        for n in (2, 5):
            ds = gen_toy(_spec(n_fault_types=n, samples_per_class=50))
            model = fisher_closed_form(n, 10)

            def attr(x, y, model=model):
                return saliency(ClassLogitField(model, y), x)

            assert fcs_empirical(attr, ds, 1) == pytest.approx((n - 1) / n, abs=1e-6)

    def test_theoretical_values(self):
        assert fcs_theoretical("saliency", 2) == pytest.approx(0.5)
        assert fcs_theoretical("saliency", 5) == pytest.approx(0.8)
        assert fcs_theoretical("ig", 2, magnitude=1.0, sigma=1.0) == pytest.approx(
            0.5 * np.sqrt(2.0 / np.pi), rel=1e-12)
        with pytest.raises(ParameterError):
            fcs_theoretical("abigx", 5)
        with pytest.raises(ParameterError):
            fcs_theoretical("ig", 5)

    def test_ig_below_saliency_condition(self):
        # holds whenever sigma*sqrt(2) < magnitude*sqrt(pi)
        for mag, sig in [(1.0, 0.1), (1.0, 1.0), (2.0, 1.5)]:
            if sig * np.sqrt(2.0) < mag * np.sqrt(np.pi):
                assert (fcs_theoretical("ig", 5, magnitude=mag, sigma=sig)
                        < fcs_theoretical("saliency", 5))

    def test_ig_empirical_matches_theory(self):
        ds = gen_toy(_spec(samples_per_class=1000, seed=11))
        model = fisher_closed_form(5, 10)
        zero = np.zeros(10)

        def attr(x, y):
            return integrated_gradients(ClassLogitField(model, y), x, zero, 200)

        measured = fcs_empirical(attr, ds, 1)
        expected = fcs_theoretical("ig", 5, magnitude=1.0, sigma=0.1)
        assert abs(measured - expected) / expected < 0.15

    def test_ordering_with_sparse_reconstruction(self):
        ds = gen_toy(_spec(samples_per_class=40))
        model = fisher_closed_form(5, 10)
        index = calibrate_classification(model, ds)
        zero = np.zeros(10)

        def a_sal(x, y):
            return saliency(ClassLogitField(model, y), x)

        def a_ig(x, y):
            return integrated_gradients(ClassLogitField(model, y), x, zero, 100)

        def a_ab(x, y):
            return abigx(index, x, AfrConfig(norm="l1"), steps=60, class_id=y)

        v_ab = fcs_empirical(a_ab, ds, 2)
        v_ig = fcs_empirical(a_ig, ds, 2)
        v_sal = fcs_empirical(a_sal, ds, 2)
        assert v_ab < v_ig < v_sal

    def test_onestep_scale_invariant(self):
        ds = gen_toy(_spec(samples_per_class=10))
        model = fisher_closed_form(5, 10)
        index = calibrate_classification(model, ds)
        x = ds.of_class(1)[0]
        a = onestep_abigx(index, x, 1, scale=0.5, steps=100).contributions
        b = onestep_abigx(index, x, 1, scale=2.0, steps=100).contributions
        ra = np.abs(a[[1, 2, 3, 4]]).sum() / abs(a[0])
        rb = np.abs(b[[1, 2, 3, 4]]).sum() / abs(b[0])
        assert ra == pytest.approx(rb, rel=1e-9)

    def test_requires_single_root(self):
        ds = gen_toy(_spec(samples_per_class=10))
        merged = Dataset(ds.samples, labels=ds.labels,
                         ground_truth_roots={1: {0, 1}, 2: {1}})
        with pytest.raises(ParameterError):
            fcs_empirical(lambda x, y: np.ones(10), merged, 1)


class TestGenerators:
    def test_correlated_normal_rank_structure(self):
        x = gen_correlated_normal(2000, 10, seed=3, n_latent=3, noise=0.05)
        eigvals = np.linalg.eigvalsh(np.cov(x.T))[::-1]
        assert eigvals[2] > 20 * eigvals[3]  # three dominant directions

    def test_inject_faults_reports_support(self):
        x = gen_correlated_normal(50, 6, seed=5)
        faulty, supports = inject_faults(x, Rng(1), n_faulty_vars=2)
        assert len(supports) == 50
        changed = np.nonzero((faulty != x).any(axis=0))[0]
        for sup in supports:
            assert len(sup) == 2
            assert set(sup) <= set(changed.tolist())

    def test_inject_deterministic(self):
        x = gen_correlated_normal(20, 5, seed=5)
        a, sa = inject_faults(x, Rng(9), n_faulty_vars=1)
        b, sb = inject_faults(x, Rng(9), n_faulty_vars=1)
        assert np.array_equal(a, b) and sa == sb
