"""Command-line entry point.

Subcommands: gen-data, train, explain, evaluate, verify. Every run writes a
manifest JSON echoing the resolved configuration and seed next to its output.
Exit codes: 0 success, 1 usage error, 2 numeric/convergence failure,
3 verification failure.
"""
from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .afr import AfrConfig
from .data import Dataset, load_csv, save_csv
from .exceptions import (
    AbigxError,
    ConvergenceError,
    EvaluationError,
    IncompatibleMethodError,
    NotCalibratedError,
    ParameterError,
    ShapeError,
    SingularDirectionError,
)
from .explainers import abigx, abigx_onevar, cp, integrated_gradients, rbc, saliency
from .indices import (
    ClassificationIndex,
    ClassLogitField,
    DetectionIndex,
    DetectionSpeField,
    FaultConfidenceField,
    calibrate_classification,
    calibrate_detection,
)
from .metrics import (
    METRIC_COLUMNS,
    MetricsReport,
    consistency_add,
    consistency_del,
    correctness_auc,
    correctness_sum,
)
from .models import fit_pca, load_model, save_model, train_ae, train_classifier
from .plots import attribution_svg
from .synthetic import ToySpec, gen_toy
from .verify import report_json, report_text, run_checks

METHODS = ("cp", "rbc", "saliency", "ig", "abigx", "abigx-onevar")


class VerificationFailure(AbigxError):
    """One or more verification checks failed."""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ABIGX_WORKERS", "4")))
    except ValueError:
        return 4


def _write_manifest(out_path, config: dict) -> None:
    doc = {"version": __version__, "config": config}
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n"
    )


def _load_roots(data_path, roots_json: str | None) -> dict | None:
    if roots_json:
        raw = json.loads(roots_json)
        return {int(k): frozenset(int(i) for i in v) for k, v in raw.items()}
    manifest = Path(str(data_path) + ".manifest.json")
    if manifest.exists():
        doc = json.loads(manifest.read_text())
        roots = doc.get("config", {}).get("ground_truth_roots")
        if roots:
            return {int(k): frozenset(int(i) for i in v) for k, v in roots.items()}
    return None


def _rebuild_index(model, calibration: dict | None):
    if calibration is None:
        return None
    if calibration.get("type") == "detection":
        return DetectionIndex(
            model=model,
            control_limit=calibration["control_limit"],
            calibration_quantile=calibration.get("quantile"),
        )
    if calibration.get("type") == "classification":
        return ClassificationIndex(
            classifier=model,
            barycenter=np.asarray(calibration["barycenter"], dtype=np.float64),
            normality_limit=calibration["normality_limit"],
            calibration_quantile=calibration.get("quantile"),
        )
    raise ParameterError(f"unknown calibration type {calibration.get('type')!r}")


@click.group()
@click.version_option(__version__)
def cli():
    """Explainable fault detection and classification toolbox."""


@cli.command("gen-data")
@click.option("--variables", "-M", type=int, required=True, help="Variable count.")
@click.option("--fault-types", "-N", type=int, required=True, help="Fault class count.")
@click.option("--magnitude", "-f", type=float, default=1.0, show_default=True)
@click.option("--sigma", type=float, default=0.1, show_default=True)
@click.option("--per-class", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def cmd_gen_data(variables, fault_types, magnitude, sigma, per_class, seed, out):
    """Generate the toy fault-classification dataset as CSV."""
    spec = ToySpec(
        n_variables=variables,
        n_fault_types=fault_types,
        magnitude=magnitude,
        sigma=sigma,
        samples_per_class=per_class,
        seed=seed,
    )
    dataset = gen_toy(spec)
    save_csv(dataset, out)
    _write_manifest(out, {
        "command": "gen-data",
        "n_variables": variables,
        "n_fault_types": fault_types,
        "magnitude": magnitude,
        "sigma": sigma,
        "samples_per_class": per_class,
        "seed": seed,
        "ground_truth_roots": {
            str(k): sorted(v) for k, v in dataset.ground_truth_roots.items()
        },
    })
    click.echo(f"wrote {dataset.n_samples} rows x {dataset.n_variables} variables to {out}")


@cli.command("train")
@click.argument("kind", type=click.Choice(["pca", "ae", "mlp"]))
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--components", type=int, default=3, show_default=True,
              help="PCA components.")
@click.option("--hidden", default="8,2,8", show_default=True,
              help="Hidden layer sizes, comma separated.")
@click.option("--epochs", type=int, default=2000, show_default=True)
@click.option("--lr", type=float, default=0.1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--quantile", type=float, default=0.99, show_default=True,
              help="Calibration quantile for the control limit.")
def cmd_train(kind, data, out, components, hidden, epochs, lr, seed, quantile):
    """Train a model and calibrate its fault index."""
    dataset = load_csv(data)
    log: dict = {"kind": kind}
    if kind == "pca":
        model = fit_pca(dataset, components)
        index = calibrate_detection(model, dataset, quantile)
        calibration = {
            "type": "detection",
            "control_limit": index.control_limit,
            "quantile": quantile,
        }
        log["explained_variance_ratio"] = model.explained_variance_ratio.tolist()
    elif kind == "ae":
        hidden_dims = tuple(int(h) for h in hidden.split(","))
        normals = Dataset(dataset.normals())
        if normals.n_samples < dataset.n_samples:
            click.echo(
                f"training on {normals.n_samples} normal rows "
                f"of {dataset.n_samples}", err=True,
            )
        if epochs == 0:
            click.echo("epochs=0: saving the initialized model", err=True)
        model = train_ae(normals, hidden_dims, epochs, lr, seed)
        index = calibrate_detection(model, normals, quantile)
        calibration = {
            "type": "detection",
            "control_limit": index.control_limit,
            "quantile": quantile,
        }
        log["loss_initial"] = model.loss_curve[0]
        log["loss_final"] = model.loss_curve[-1]
    else:
        hidden_dims = tuple(int(h) for h in hidden.split(","))
        model = train_classifier(dataset, hidden_dims, epochs, lr, seed)
        index = calibrate_classification(model, dataset, quantile)
        calibration = {
            "type": "classification",
            "barycenter": index.barycenter.tolist(),
            "normality_limit": index.normality_limit,
            "quantile": quantile,
        }
        log["training_accuracy"] = model.meta["training_accuracy"]
        log["loss_final"] = model.loss_curve[-1]
    save_model(model, out, calibration=calibration)
    Path(str(out) + ".train.json").write_text(json.dumps(log, indent=2) + "\n")
    _write_manifest(out, {
        "command": "train", "kind": kind, "data": str(data),
        "components": components, "hidden": hidden, "epochs": epochs,
        "lr": lr, "seed": seed, "quantile": quantile,
    })
    click.echo(f"saved {kind} model to {out}")
    for key, value in log.items():
        if key != "kind":
            click.echo(f"  {key}: {value}")


def _resolve_class_id(dataset, row: int, class_id):
    if class_id is not None:
        return int(class_id)
    if dataset.labels is None:
        raise ParameterError("unlabeled data: pass --class-id for classifier methods")
    return int(dataset.labels[row])


def _build_attribution(method, model, index, dataset, row, *, steps, norm, eta,
                       class_id, baseline):
    x = dataset.samples[row]
    cfg = AfrConfig(norm=norm, eta=eta)
    if method in ("cp", "rbc"):
        if not isinstance(index, DetectionIndex):
            raise IncompatibleMethodError(
                f"{method} applies to detection models, not {model.kind}"
            )
        return (cp if method == "cp" else rbc)(index, x)
    if method == "saliency":
        if isinstance(index, DetectionIndex):
            return saliency(DetectionSpeField(model), x)
        return saliency(ClassLogitField(model, _resolve_class_id(dataset, row, class_id)), x)
    if method == "ig":
        if isinstance(index, DetectionIndex):
            fn = DetectionSpeField(model)
        else:
            fn = ClassLogitField(model, _resolve_class_id(dataset, row, class_id))
        return integrated_gradients(fn, x, baseline, steps)
    if method == "abigx":
        kwargs = {}
        if isinstance(index, ClassificationIndex):
            kwargs["class_id"] = _resolve_class_id(dataset, row, class_id)
        return abigx(index, x, cfg, steps, **kwargs)
    if method == "abigx-onevar":
        kwargs = {}
        if isinstance(index, ClassificationIndex):
            kwargs["class_id"] = _resolve_class_id(dataset, row, class_id)
        return abigx_onevar(index, x, steps, **kwargs)
    raise ParameterError(f"unknown method {method!r}")


@cli.command("explain")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--sample", type=int, default=None,
              help="Row index; default: every fault row (capped).")
@click.option("--max-samples", type=int, default=25, show_default=True)
@click.option("--class-id", type=int, default=None,
              help="Explained class (classifiers); default: the row's label.")
@click.option("--steps", type=int, default=200, show_default=True)
@click.option("--norm", type=click.Choice(["l0", "l1", "l2"]), default="l2",
              show_default=True)
@click.option("--eta", type=float, default=None, help="Distance budget (default auto).")
@click.option("--baseline", type=click.Choice(["normal-mean", "zero"]),
              default="normal-mean", show_default=True, help="IG baseline.")
@click.option("--roots", "roots_json", default=None,
              help='Root causes as JSON, e.g. \'{"1": [0]}\'.')
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--svg/--no-svg", default=True, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True)
def cmd_explain(model_path, data_path, method, sample, max_samples, class_id, steps,
                norm, eta, baseline, roots_json, out_dir, svg, fmt):
    """Explain samples with one attribution method; write files per sample."""
    model, calibration = load_model(model_path)
    index = _rebuild_index(model, calibration)
    if index is None:
        raise ParameterError(f"{model_path} carries no calibration; re-train")
    dataset = load_csv(data_path)
    roots_map = _load_roots(data_path, roots_json) or {}

    if sample is not None:
        rows = [sample]
    elif dataset.labels is not None:
        rows = [int(i) for i in np.nonzero(dataset.labels != 0)[0][:max_samples]]
    else:
        rows = list(range(min(dataset.n_samples, max_samples)))
    if not rows:
        raise ParameterError("no samples selected")
    for row in rows:
        if not 0 <= row < dataset.n_samples:
            raise ParameterError(f"sample {row} out of range")

    base_vec = (dataset.normals().mean(axis=0) if baseline == "normal-mean"
                else np.zeros(dataset.n_variables))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def explain_row(row: int):
        return row, _build_attribution(
            method, model, index, dataset, row, steps=steps, norm=norm, eta=eta,
            class_id=class_id, baseline=base_vec,
        )

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(explain_row, rows))

    for row, attr in results:
        label = None if dataset.labels is None else int(dataset.labels[row])
        roots = sorted(roots_map.get(label, ())) if label is not None else []
        stem = out / f"sample_{row:05d}_{method}"
        if fmt == "json":
            doc = attr.to_dict()
            doc["sample_row"] = row
            if label is not None:
                doc["label"] = label
            stem.with_suffix(".json").write_text(json.dumps(doc, indent=2) + "\n")
        else:
            lines = ["variable,contribution"]
            lines += [f"{name},{value!r}" for name, value in
                      attr.csv_rows(dataset.names())]
            stem.with_suffix(".csv").write_text("\n".join(lines) + "\n")
        if svg:
            stem.with_suffix(".svg").write_text(attribution_svg(
                attr, variable_names=dataset.names(), roots=roots,
                title=f"{method} on row {row}",
            ) + "\n")
    _write_manifest(out / "run", {
        "command": "explain", "model": str(model_path), "data": str(data_path),
        "method": method, "rows": rows, "steps": steps, "norm": norm, "eta": eta,
        "class_id": class_id, "baseline": baseline, "format": fmt,
    })
    click.echo(f"explained {len(rows)} sample(s) with {method} into {out_dir}")


@cli.command("evaluate")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--methods", default="cp,saliency,ig,abigx", show_default=True,
              help="Comma-separated method list.")
@click.option("--max-samples", type=int, default=40, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--norm", type=click.Choice(["l0", "l1", "l2"]), default="l2",
              show_default=True)
@click.option("--roots", "roots_json", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text",
              show_default=True)
def cmd_evaluate(model_path, data_path, methods, max_samples, steps, norm,
                 roots_json, seed, out, fmt):
    """Score attribution methods with correctness and consistency metrics."""
    model, calibration = load_model(model_path)
    index = _rebuild_index(model, calibration)
    if index is None:
        raise ParameterError(f"{model_path} carries no calibration; re-train")
    dataset = load_csv(data_path)
    roots_map = _load_roots(data_path, roots_json)
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    for m in method_list:
        if m not in METHODS:
            raise ParameterError(f"unknown method {m!r}; choose from {METHODS}")

    if dataset.labels is not None:
        rows = [int(i) for i in np.nonzero(dataset.labels != 0)[0][:max_samples]]
    else:
        flags = [index.detect(dataset.samples[i]) if isinstance(index, DetectionIndex)
                 else 1 for i in range(dataset.n_samples)]
        rows = [i for i, f in enumerate(flags) if f][:max_samples]
    if not rows:
        raise ParameterError("no fault samples to evaluate")

    x_normal = dataset.normals().mean(axis=0)
    if isinstance(index, DetectionIndex):
        consistency_field = DetectionSpeField(model)
    else:
        consistency_field = None  # per-row confidence field built below

    def metrics_for(method: str) -> dict:
        per_metric: dict[str, list[float]] = {k: [] for k in METRIC_COLUMNS}
        for row in rows:
            attr = _build_attribution(
                method, model, index, dataset, row, steps=steps, norm=norm,
                eta=None, class_id=None, baseline=x_normal,
            )
            label = None if dataset.labels is None else int(dataset.labels[row])
            roots = roots_map.get(label) if (roots_map and label is not None) else None
            if roots:
                per_metric["correctness_auc"].append(correctness_auc(attr, roots))
                per_metric["correctness_sum"].append(correctness_sum(attr, roots))
            fn = consistency_field
            if fn is None:
                fn = FaultConfidenceField(model, _resolve_class_id(dataset, row, None))
            x_fault = dataset.samples[row]
            per_metric["consistency_add"].append(
                consistency_add(fn, x_fault, x_normal, attr))
            per_metric["consistency_del"].append(
                consistency_del(fn, x_fault, x_normal, attr))
        return {
            k: (float(np.mean(v)) if v else None) for k, v in per_metric.items()
        }

    with ThreadPoolExecutor(max_workers=min(_workers(), len(method_list))) as pool:
        rows_out = list(pool.map(metrics_for, method_list))
    report = MetricsReport(
        per_method=dict(zip(method_list, rows_out)),
        sample_count=len(rows),
        config={"model": str(model_path), "data": str(data_path), "steps": steps,
                "norm": norm, "seed": seed, "max_samples": max_samples},
    )
    text = report.to_json(indent=2) if fmt == "json" else report.to_text()
    Path(out).write_text(text + "\n")
    _write_manifest(out, report.config | {"command": "evaluate",
                                          "methods": method_list})
    click.echo(text)


@cli.command("verify")
@click.option("--only", default=None, help="Run only checks whose name contains this.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_verify(only, fmt, out):
    """Run the numerical verification suite; nonzero exit on any failure."""
    try:
        results = run_checks(only=only)
    except ValueError as exc:
        raise ParameterError(str(exc)) from exc
    text = report_json(results) if fmt == "json" else report_text(results)
    click.echo(text)
    if out:
        Path(out).write_text(text + "\n")
        _write_manifest(out, {"command": "verify", "only": only})
    if not all(r.passed for r in results):
        raise VerificationFailure("one or more checks failed")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except VerificationFailure as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (ConvergenceError, EvaluationError, FloatingPointError) as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return 2
    except (ParameterError, ShapeError, IncompatibleMethodError,
            SingularDirectionError, NotCalibratedError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
