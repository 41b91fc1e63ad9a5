"""Command-line workflows, manifests, and exit codes."""
import json
from pathlib import Path

import numpy as np
import pytest

from abigx.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Toy dataset plus trained pca/mlp models, built once via the CLI."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "toy.csv"
    assert run("gen-data", "-M", 10, "-N", 5, "--per-class", 50, "--seed", 7,
               "--out", data) == 0
    pca = root / "pca.json"
    assert run("train", "pca", "--data", data, "--components", 3, "--out", pca) == 0
    mlp = root / "mlp.json"
    assert run("train", "mlp", "--data", data, "--hidden", "16", "--epochs", 600,
               "--lr", 0.5, "--seed", 3, "--out", mlp) == 0
    return root, data, pca, mlp


class TestGenData:
    def test_row_count_and_manifest(self, workspace):
        root, data, _, _ = workspace
        lines = data.read_text().splitlines()
        assert len(lines) == 1 + 6 * 50
        manifest = json.loads((root / "toy.csv.manifest.json").read_text())
        assert manifest["config"]["seed"] == 7
        assert manifest["config"]["ground_truth_roots"]["1"] == [0]

    def test_rerun_byte_identical(self, workspace, tmp_path):
        _, data, _, _ = workspace
        again = tmp_path / "again.csv"
        assert run("gen-data", "-M", 10, "-N", 5, "--per-class", 50, "--seed", 7,
                   "--out", again) == 0
        assert again.read_bytes() == data.read_bytes()

    def test_fault_types_must_be_fewer_than_variables(self, tmp_path):
        out = tmp_path / "bad.csv"
        assert run("gen-data", "-M", 10, "-N", 10, "--out", out) == 1
        assert not out.exists()


class TestTrain:
    def test_pca_outputs(self, workspace):
        root, _, pca, _ = workspace
        doc = json.loads(pca.read_text())
        assert doc["kind"] == "pca"
        loading = np.asarray(doc["loading"])
        assert loading.shape == (10, 3)
        assert np.abs(loading.T @ loading - np.eye(3)).max() < 1e-8
        assert doc["calibration"]["type"] == "detection"
        assert (root / "pca.json.train.json").exists()

    def test_mlp_accuracy_logged(self, workspace):
        root, _, _, mlp = workspace
        log = json.loads((root / "mlp.json.train.json").read_text())
        assert log["training_accuracy"] >= 0.99

    def test_ae_epochs_zero_saves_model(self, workspace, tmp_path):
        _, data, _, _ = workspace
        out = tmp_path / "ae0.json"
        assert run("train", "ae", "--data", data, "--hidden", "4,1,4",
                   "--epochs", 0, "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "ae"

    def test_missing_data_is_usage_error(self, tmp_path):
        assert run("train", "pca", "--data", tmp_path / "nope.csv",
                   "--out", tmp_path / "m.json") == 1


class TestExplain:
    def test_cp_equals_abigx_on_pca(self, workspace, tmp_path):
        _, data, pca, _ = workspace
        out_cp = tmp_path / "cp"
        out_ab = tmp_path / "ab"
        assert run("explain", "--model", pca, "--data", data, "--method", "cp",
                   "--sample", 70, "--out-dir", out_cp) == 0
        assert run("explain", "--model", pca, "--data", data, "--method", "abigx",
                   "--sample", 70, "--out-dir", out_ab) == 0
        c = json.loads((out_cp / "sample_00070_cp.json").read_text())
        a = json.loads((out_ab / "sample_00070_abigx.json").read_text())
        diff = np.abs(np.asarray(c["contributions"])
                      - np.asarray(a["contributions"])).mean()
        assert diff < 1e-6

    def test_rbc_on_classifier_rejected(self, workspace, tmp_path):
        _, data, _, mlp = workspace
        assert run("explain", "--model", mlp, "--data", data, "--method", "rbc",
                   "--sample", 70, "--out-dir", tmp_path / "x") == 1

    def test_svg_top8_with_outlined_roots(self, workspace, tmp_path):
        _, data, _, mlp = workspace
        out = tmp_path / "svg"
        assert run("explain", "--model", mlp, "--data", data, "--method", "abigx",
                   "--norm", "l1", "--sample", 70, "--out-dir", out) == 0
        svg = (out / "sample_00070_abigx.svg").read_text()
        assert svg.count("<rect") == 1 + 8  # background + one bar per variable
        assert "stroke=\"#c22f2f\"" in svg  # the root bar is outlined

    def test_csv_format(self, workspace, tmp_path):
        _, data, pca, _ = workspace
        out = tmp_path / "csv"
        assert run("explain", "--model", pca, "--data", data, "--method", "saliency",
                   "--sample", 60, "--out-dir", out, "--format", "csv",
                   "--no-svg") == 0
        lines = (out / "sample_00060_saliency.csv").read_text().splitlines()
        assert lines[0] == "variable,contribution"
        assert len(lines) == 11

    def test_all_faults_capped(self, workspace, tmp_path):
        _, data, pca, _ = workspace
        out = tmp_path / "many"
        assert run("explain", "--model", pca, "--data", data, "--method", "cp",
                   "--max-samples", 5, "--out-dir", out, "--no-svg") == 0
        assert len(list(out.glob("sample_*.json"))) == 5

    def test_sample_out_of_range(self, workspace, tmp_path):
        _, data, pca, _ = workspace
        assert run("explain", "--model", pca, "--data", data, "--method", "cp",
                   "--sample", 999, "--out-dir", tmp_path / "x") == 1


class TestEvaluate:
    def test_report_table(self, workspace, tmp_path):
        _, data, _, mlp = workspace
        out = tmp_path / "report.txt"
        assert run("evaluate", "--model", mlp, "--data", data,
                   "--methods", "saliency,abigx", "--max-samples", 8,
                   "--norm", "l1", "--out", out) == 0
        text = out.read_text()
        assert "saliency" in text and "abigx" in text
        assert (tmp_path / "report.txt.manifest.json").exists()

    def test_known_perfect_method_scores_auc_one(self, workspace, tmp_path):
        _, data, _, mlp = workspace
        out = tmp_path / "report.json"
        assert run("evaluate", "--model", mlp, "--data", data,
                   "--methods", "abigx", "--max-samples", 6, "--norm", "l1",
                   "--format", "json", "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["per_method"]["abigx"]["correctness_auc"] == 1.0

    def test_reproducible(self, workspace, tmp_path):
        _, data, _, mlp = workspace
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert run("evaluate", "--model", mlp, "--data", data,
                       "--methods", "saliency,ig", "--max-samples", 5,
                       "--format", "json", "--out", out) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_method(self, workspace, tmp_path):
        _, data, _, mlp = workspace
        assert run("evaluate", "--model", mlp, "--data", data,
                   "--methods", "shapley", "--out", tmp_path / "r.txt") == 1


class TestVerify:
    def test_single_check_runs(self, tmp_path, capsys):
        out = tmp_path / "verify.json"
        assert run("verify", "--only", "metric-sanity", "--format", "json",
                   "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["all_passed"] is True
        assert doc["checks"][0]["name"] == "metric-sanity"

    def test_unknown_check_is_usage_error(self):
        assert run("verify", "--only", "no-such-check") == 1

    def test_failure_exit_code(self, monkeypatch):
        from abigx import cli as cli_mod
        from abigx.verify import CheckResult

        def fake(only=None):
            return [CheckResult(name="x", passed=False, expected="e",
                                measured="m", tolerance="t", seconds=0.0)]

        monkeypatch.setattr(cli_mod, "run_checks", fake)
        assert run("verify") == 3


class TestUsage:
    def test_unknown_command(self):
        assert run("frobnicate") == 1

    def test_help_exits_zero(self):
        assert run("--help") == 0
