"""Correctness and consistency metric behavior."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abigx.exceptions import ParameterError
from abigx.indices import FaultConfidenceField, ScalarField
from abigx.metrics import (
    MetricsReport,
    consistency_add,
    consistency_del,
    correctness_auc,
    correctness_sum,
    deletion_curve,
    insertion_curve,
)
from abigx.models import Standardizer
from abigx.numerics import Rng


class _QuadField(ScalarField):
    """Sum of squares of selected coordinates (test stand-in for a model)."""

    name = "quad"

    def __init__(self, n, active):
        from types import SimpleNamespace

        super().__init__(SimpleNamespace(standardizer=Standardizer.identity(n)))
        self.active = list(active)

    def value_batch(self, z):
        return (np.atleast_2d(z)[:, self.active] ** 2).sum(axis=1)

    def grad_batch(self, z):
        z = np.atleast_2d(z)
        g = np.zeros_like(z)
        g[:, self.active] = 2.0 * z[:, self.active]
        return g


class _ConstField(ScalarField):
    name = "const"
    unit_interval = True

    def __init__(self, n, value):
        from types import SimpleNamespace

        super().__init__(SimpleNamespace(standardizer=Standardizer.identity(n)))
        self.value_ = value

    def value_batch(self, z):
        return np.full(np.atleast_2d(z).shape[0], self.value_)

    def grad_batch(self, z):
        return np.zeros_like(np.atleast_2d(z))


class TestCorrectnessAuc:
    def test_perfect_indicator(self):
        scores = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
        assert correctness_auc(scores, {1, 3}) == 1.0

    def test_reversed(self):
        scores = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
        assert correctness_auc(scores, {1, 3}) == 0.0

    def test_random_mean_near_half(self):
        rng = Rng(2024)
        vals = [correctness_auc(rng.spawn(k).uniform(10), {2, 7})
                for k in range(1000)]
        assert 0.45 <= float(np.mean(vals)) <= 0.55

    def test_ties_averaged(self):
        scores = np.ones(4)
        assert correctness_auc(scores, {0}) == 0.5

    def test_all_roots_rejected(self):
        with pytest.raises(ParameterError):
            correctness_auc(np.ones(3), {0, 1, 2})

    def test_empty_roots_rejected(self):
        with pytest.raises(ParameterError):
            correctness_auc(np.ones(3), set())

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=30, deadline=None)
    def test_invariant_to_monotone_transform(self, seed):
        scores = Rng(seed).uniform(12)
        base = correctness_auc(scores, {1, 5, 9})
        assert correctness_auc(np.exp(3.0 * scores) + 7.0, {1, 5, 9}) == base


class TestCorrectnessSum:
    def test_all_mass_on_roots(self):
        scores = np.array([0.0, 2.0, 0.0, -3.0])
        assert correctness_sum(scores, {1, 3}) == 1.0

    def test_uniform(self):
        assert abs(correctness_sum(np.ones(10), {0, 1, 2}) - 0.3) < 1e-15

    def test_zero_attribution_flagged(self):
        with pytest.warns(UserWarning):
            assert correctness_sum(np.zeros(5), {0}) == 0.0


class TestConsistency:
    def test_endpoints(self):
        fn = _QuadField(4, [0, 1, 2, 3])
        x_fault = np.array([2.0, -1.0, 0.5, 1.0])
        x_normal = np.zeros(4)
        attr = np.array([4.0, 3.0, 2.0, 1.0])
        curve = insertion_curve(fn, x_fault, x_normal, attr, normalize="none")
        assert curve[0] == fn.value(x_normal)
        assert curve[-1] == fn.value(x_fault)
        dcurve = deletion_curve(fn, x_fault, x_normal, attr, normalize="none")
        assert dcurve[0] == fn.value(x_fault)
        assert dcurve[-1] == fn.value(x_normal)

    def test_constant_model(self):
        fn = _ConstField(3, 0.42)
        val = consistency_add(fn, np.ones(3), np.zeros(3), np.array([3.0, 2.0, 1.0]))
        assert abs(val - 0.42) < 1e-12
        val = consistency_del(fn, np.ones(3), np.zeros(3), np.array([3.0, 2.0, 1.0]))
        assert abs(val - 0.42) < 1e-12

    def test_perfect_ranking_is_permutation_optimum(self):
        n = 5
        fn = _QuadField(n, [2])
        x_fault = np.array([0.3, -0.1, 3.0, 0.2, -0.4])
        x_normal = np.zeros(n)
        perfect = np.zeros(n)
        perfect[2] = 1.0
        add_best = consistency_add(fn, x_fault, x_normal, perfect)
        del_best = consistency_del(fn, x_fault, x_normal, perfect)
        for perm in itertools.permutations(range(n)):
            contrib = np.empty(n)
            contrib[list(perm)] = np.arange(n, 0, -1)
            assert consistency_add(fn, x_fault, x_normal, contrib) <= add_best + 1e-12
            assert consistency_del(fn, x_fault, x_normal, contrib) >= del_best - 1e-12

    def test_deletion_mirrors_reversed_insertion(self):
        fn = _QuadField(4, [0, 2])
        x_fault = np.array([1.5, 0.2, -2.0, 0.7])
        x_normal = np.array([0.1, 0.0, 0.2, -0.1])
        attr = np.array([5.0, 1.0, 7.0, 3.0])
        order = np.argsort(-np.abs(attr), kind="stable")
        reversed_attr = np.empty(4)
        reversed_attr[order] = np.arange(1, 5)  # ascending: reversed ranking
        del_curve = deletion_curve(fn, x_fault, x_normal, attr, normalize="none")
        add_rev = insertion_curve(fn, x_fault, x_normal, reversed_attr,
                                  normalize="none")
        assert np.allclose(del_curve, add_rev[::-1], atol=1e-14)

    def test_minmax_normalization_bounds(self, small_ae):
        from abigx.indices import DetectionSpeField

        x, model, _ = small_ae
        fn = DetectionSpeField(model)
        x_fault = x[0] + 3.0 * x.std(axis=0)
        curve = insertion_curve(fn, x_fault, x.mean(axis=0), np.arange(8.0))
        assert curve.min() >= 0.0 and curve.max() <= 1.0

    def test_classifier_confidence_not_renormalized(self, toy_classifier, toy_data):
        clf, _ = toy_classifier
        fn = FaultConfidenceField(clf, 1)
        x_fault = toy_data.of_class(1)[0]
        x_normal = toy_data.normals().mean(axis=0)
        attr = np.arange(10.0)
        val = consistency_add(fn, x_fault, x_normal, attr)
        assert 0.0 <= val <= 1.0


class TestReport:
    def test_text_and_json(self):
        report = MetricsReport(
            per_method={
                "cp": {"correctness_auc": 0.9, "correctness_sum": 0.5,
                       "consistency_add": 0.8, "consistency_del": 0.2},
                "ig": {"correctness_auc": None, "correctness_sum": None,
                       "consistency_add": 0.7, "consistency_del": 0.3},
            },
            sample_count=12,
        )
        text = report.to_text()
        assert "cp" in text and "n/a" in text and "|" in text
        doc = report.to_dict()
        assert doc["sample_count"] == 12

    def test_deterministic(self):
        kwargs = dict(
            per_method={"cp": {k: 0.5 for k in
                               ("correctness_auc", "correctness_sum",
                                "consistency_add", "consistency_del")}},
            sample_count=1,
        )
        assert MetricsReport(**kwargs).to_json() == MetricsReport(**kwargs).to_json()
