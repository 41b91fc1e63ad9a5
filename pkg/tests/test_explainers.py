"""Attribution methods and their exact relationships on linear detectors."""
import json

import numpy as np
import pytest

from abigx.afr import AfrConfig
from abigx.exceptions import IncompatibleMethodError, ParameterError
from abigx.explainers import (
    abigx,
    abigx_onevar,
    cp,
    integrated_gradients,
    path_diagnostics,
    rbc,
    saliency,
)
from abigx.indices import ClassLogitField, DetectionSpeField
from abigx.numerics import Rng
from abigx.synthetic import fisher_closed_form, inject_faults


@pytest.fixture(scope="module")
def fault_sample(pca_testbed):
    x, _, _ = pca_testbed
    faulty, _ = inject_faults(x[:1], Rng(321), n_faulty_vars=2,
                              magnitude_range=(3.0, 5.0), scale=x.std(axis=0))
    return faulty[0]


class TestCp:
    def test_zero_on_principal_subspace(self, pca_testbed):
        _, model, idx = pca_testbed
        z = model.loading @ np.array([1.0, 2.0, -1.0])
        x = model.standardizer.inverse(z)
        assert np.abs(cp(idx, x).contributions).max() < 1e-20

    def test_closed_form(self, pca_testbed, fault_sample):
        _, model, idx = pca_testbed
        z = model.standardizer.transform(fault_sample)
        rz = model.residual_projector @ z
        assert np.abs(cp(idx, fault_sample).contributions - rz**2).max() < 1e-12

    def test_sums_to_spe(self, pca_testbed, fault_sample):
        _, _, idx = pca_testbed
        attr = cp(idx, fault_sample)
        assert abs(attr.contributions.sum() - idx.spe(fault_sample)) < 1e-10

    def test_works_on_ae(self, small_ae):
        x, _, idx = small_ae
        attr = cp(idx, x[0])
        assert attr.contributions.shape == (8,)
        assert abs(attr.contributions.sum() - idx.spe(x[0])) < 1e-10


class TestRbc:
    def test_zero_on_normal(self, pca_testbed):
        _, model, idx = pca_testbed
        z = model.loading @ np.array([0.4, -0.2, 0.9])
        x = model.standardizer.inverse(z)
        assert np.abs(rbc(idx, x).contributions).max() < 1e-18

    def test_equals_spe_drop(self, pca_testbed, fault_sample):
        # value of removing each variable's best reconstruction
        from abigx.afr import afr_onevar_all

        _, _, idx = pca_testbed
        contributions = rbc(idx, fault_sample).contributions
        drops = [r.spe_before - r.spe_after
                 for r in afr_onevar_all(idx, fault_sample)]
        assert np.abs(contributions - drops).max() < 1e-8

    def test_dominates_cp(self, pca_testbed):
        x, _, idx = pca_testbed
        rng = Rng(17)
        for k in range(1000):
            z = rng.spawn(k).normal(0.0, 1.5, 10)
            sample = idx.model.standardizer.inverse(z)
            gap = rbc(idx, sample).contributions - cp(idx, sample).contributions
            assert gap.min() > -1e-12

    def test_rejected_on_ae(self, small_ae):
        x, _, idx = small_ae
        with pytest.raises(IncompatibleMethodError):
            rbc(idx, x[0])


class TestSaliency:
    def test_pca_gradient(self, pca_testbed, fault_sample):
        _, model, idx = pca_testbed
        attr = saliency(DetectionSpeField(model), fault_sample)
        z = model.standardizer.transform(fault_sample)
        assert np.array_equal(attr.contributions, 2.0 * model.residual_projector @ z)

    def test_linear_classifier_constant(self):
        model = fisher_closed_form(3, 8)
        fn = ClassLogitField(model, 2)
        a = saliency(fn, Rng(1).normal(0.0, 1.0, 8))
        b = saliency(fn, Rng(2).normal(0.0, 1.0, 8))
        assert np.array_equal(a.contributions, b.contributions)
        assert np.array_equal(a.contributions, model.weights[2])

    def test_matches_finite_differences(self, small_ae):
        from abigx.numerics import finite_diff_grad

        x, model, _ = small_ae
        fn = DetectionSpeField(model)
        sample = x[4] + 0.4
        attr = saliency(fn, sample)
        z = model.standardizer.transform(sample)
        numeric = finite_diff_grad(fn.value, z)
        assert np.linalg.norm(attr.contributions - numeric) < 1e-4 * np.linalg.norm(numeric)


class TestIntegratedGradients:
    def test_degenerate_path_is_zero(self, pca_testbed, fault_sample):
        _, model, _ = pca_testbed
        attr = integrated_gradients(DetectionSpeField(model), fault_sample,
                                    fault_sample, steps=50)
        assert np.abs(attr.contributions).max() < 1e-12

    def test_quadratic_closed_form_any_steps(self, pca_testbed, fault_sample):
        # straight-path integration of the quadratic residual: x_i * (C x)_i
        _, model, _ = pca_testbed
        fn = DetectionSpeField(model)
        baseline = model.standardizer.inverse(np.zeros(10))
        z = model.standardizer.transform(fault_sample)
        expected = z * (model.residual_projector @ z)
        for steps in (2, 7, 200):
            attr = integrated_gradients(fn, fault_sample, baseline, steps)
            assert np.abs(attr.contributions - expected).max() < 1e-10

    def test_completeness(self, small_ae):
        x, model, _ = small_ae
        fn = DetectionSpeField(model)
        faulty, _ = inject_faults(x[:10], Rng(77), n_faulty_vars=1,
                                  magnitude_range=(2.0, 4.0), scale=x.std(axis=0))
        base = x.mean(axis=0)
        residuals = {}
        for steps in (50, 200, 400):
            residuals[steps] = max(
                integrated_gradients(fn, s, base, steps).completeness_residual
                for s in faulty
            )
        assert residuals[200] < 1e-3
        assert residuals[400] <= residuals[50]

    def test_baseline_shape_checked(self, pca_testbed, fault_sample):
        _, model, _ = pca_testbed
        with pytest.raises(ParameterError):
            integrated_gradients(DetectionSpeField(model), fault_sample,
                                 np.zeros(3), 10)


class TestAbigx:
    def test_equals_cp_on_pca(self, pca_testbed, fault_sample):
        _, model, idx = pca_testbed
        reference = cp(idx, fault_sample).contributions
        spe0 = idx.spe(fault_sample)
        cfg = AfrConfig(target=1e-10, eta=2.0 * float(np.sqrt(spe0)) + 1.0)
        attr = abigx(idx, fault_sample, cfg, steps=200)
        assert np.abs(attr.contributions - reference).mean() < 1e-6
        assert attr.afr_converged

    def test_normal_input_zero(self, pca_testbed):
        x, _, idx = pca_testbed
        attr = abigx(idx, x.mean(axis=0))
        assert np.abs(attr.contributions).max() < 1e-12

    def test_classification_needs_class_id(self, toy_classifier, toy_data):
        _, idx = toy_classifier
        with pytest.raises(ParameterError):
            abigx(idx, toy_data.samples[600])

    def test_classification_attribution_targets_root(self, toy_classifier, toy_data):
        _, idx = toy_classifier
        y = 2
        sample = toy_data.of_class(y)[0]
        attr = abigx(idx, sample, AfrConfig(norm="l1"), steps=100, class_id=y)
        assert int(np.argmax(np.abs(attr.contributions))) == y - 1

    def test_adv_objective_runs(self, toy_classifier, toy_data):
        _, idx = toy_classifier
        y = 1
        sample = toy_data.of_class(y)[1]
        attr = abigx(idx, sample, AfrConfig(norm="l2"), steps=60, class_id=y,
                     afr_objective="adv")
        assert attr.contributions.shape == (10,)

    def test_spe_fc_integrand_switch(self, toy_classifier, toy_data):
        _, idx = toy_classifier
        y = 1
        sample = toy_data.of_class(y)[2]
        attr = abigx(idx, sample, AfrConfig(norm="l2"), steps=60, class_id=y,
                     integrate="spe_fc")
        assert attr.target_functional == "spe_fc"

    def test_deterministic(self, pca_testbed, fault_sample):
        _, _, idx = pca_testbed
        a = abigx(idx, fault_sample, steps=50)
        b = abigx(idx, fault_sample, steps=50)
        assert np.array_equal(a.contributions, b.contributions)


class TestAbigxOneVar:
    def test_equals_rbc_closed_form(self, pca_testbed, fault_sample):
        _, _, idx = pca_testbed
        reference = rbc(idx, fault_sample).contributions
        attr = abigx_onevar(idx, fault_sample, steps=200)
        assert np.abs(attr.contributions - reference).mean() < 1e-5

    def test_close_to_rbc_with_line_search(self, pca_testbed, fault_sample):
        _, _, idx = pca_testbed
        reference = rbc(idx, fault_sample).contributions
        attr = abigx_onevar(idx, fault_sample, steps=200, mode="search")
        assert np.abs(attr.contributions - reference).mean() < 1e-2

    def test_normal_input_zero(self, pca_testbed):
        x, model, idx = pca_testbed
        z = model.loading @ np.array([0.2, 0.4, -0.6])
        sample = model.standardizer.inverse(z)
        attr = abigx_onevar(idx, sample, steps=50)
        assert np.abs(attr.contributions).max() < 1e-12


class TestPathDiagnostics:
    def test_endpoint_reproduces_confidence(self, toy_classifier, toy_data):
        clf, idx = toy_classifier
        y = 3
        sample = toy_data.of_class(y)[0]
        points = path_diagnostics(idx, sample, toy_data.normals()[0], 20, y, y - 1)
        probs = clf.softmax_std(clf.standardizer.transform(sample).reshape(1, -1))[0]
        assert abs(points[-1].confidence_ratio - (probs[y] + probs[0])) < 1e-12
        assert abs(points[0].alpha) < 1e-15 and abs(points[-1].alpha - 1.0) < 1e-15

    def test_cosine_bounded(self, toy_classifier, toy_data):
        _, idx = toy_classifier
        y = 1
        sample = toy_data.of_class(y)[5]
        points = path_diagnostics(idx, sample, np.zeros(10), 40, y, y - 1)
        assert all(-1.0 <= p.cosine_to_root <= 1.0 for p in points)

    def test_reconstruction_path_keeps_higher_confidence_ratio(
            self, toy_classifier, toy_data):
        clf, idx = toy_classifier
        y = 3
        normals = toy_data.normals()
        picks = Rng(55).integers(0, len(normals), 50)
        ratios_rec, ratios_rand = [], []
        for k, sample in enumerate(toy_data.of_class(y)[:50]):
            attr = abigx(idx, sample, AfrConfig(norm="l2"), steps=50, class_id=y)
            rec_base = clf.standardizer.inverse(attr.baseline)
            pts = path_diagnostics(idx, sample, rec_base, 50, y, y - 1)
            ratios_rec.append(np.mean([p.confidence_ratio for p in pts]))
            pts = path_diagnostics(idx, sample, normals[picks[k]], 50, y, y - 1)
            ratios_rand.append(np.mean([p.confidence_ratio for p in pts]))
        assert np.mean(ratios_rec) >= np.mean(ratios_rand)


class TestAttributionContainer:
    def test_json_round_trip(self, pca_testbed, fault_sample):
        _, _, idx = pca_testbed
        attr = cp(idx, fault_sample)
        doc = json.loads(attr.to_json())
        assert doc["method"] == "cp"
        assert len(doc["contributions"]) == 10

    def test_ranking_stable(self):
        from abigx.explainers import Attribution

        attr = Attribution(method="x", contributions=np.array([1.0, -1.0, 0.5]),
                           target_functional="spe")
        assert attr.ranking().tolist() == [0, 1, 2]

    def test_csv_rows(self, pca_testbed, fault_sample):
        _, _, idx = pca_testbed
        rows = cp(idx, fault_sample).csv_rows(["v" + str(i) for i in range(10)])
        assert rows[0][0] == "v0" and len(rows) == 10
