"""Comparator: run the artifact against golden fixtures and diff outputs.

Estimator-level fixtures are exercised through the artifact's CLI and
its documented archive format only. Split-index and standalone-metric
fixtures have no CLI surface (fit/predict/score/search expose neither
raw fold indices nor label-vs-label metrics), so those two families are
checked against the artifact's public library API instead.
"""

from __future__ import annotations

import csv
import json
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archive import EstimatorBlock, read_archive

DEFAULT_CLI = (sys.executable, "-m", "estkit.cli")


@dataclass
class CheckResult:
    fixture: str
    check: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        suffix = f" ({self.detail})" if self.detail and not self.ok else ""
        return f"[{status}] {self.fixture}: {self.check}{suffix}"


@dataclass
class Report:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.results) and all(r.ok for r in self.results)

    def text(self) -> str:
        lines = [r.line() for r in self.results]
        verdict = "all checks passed" if self.ok else "FAILURES present"
        return "\n".join(lines + [f"-- {len(self.results)} checks: {verdict}"])

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "results": [
                {"fixture": r.fixture, "check": r.check, "ok": r.ok, "detail": r.detail} for r in self.results
            ],
        }


def _values_close(got, expected, tol: float, mode: str) -> tuple[bool, str]:
    got = np.asarray(got, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    if got.shape != expected.shape:
        return False, f"shape {got.shape} != {expected.shape}"
    if mode == "exact":
        ok = bool(np.array_equal(got, expected))
        return ok, "" if ok else "exact mismatch"
    if mode == "abs":
        diff = float(np.max(np.abs(got - expected))) if got.size else 0.0
        return diff <= tol, f"max abs diff {diff:g} > {tol:g}" if diff > tol else ""
    if mode == "rel":
        scale = np.maximum(np.abs(expected), 1e-300)
        diff = float(np.max(np.abs(got - expected) / scale)) if got.size else 0.0
        return diff <= tol, f"max rel diff {diff:g} > {tol:g}" if diff > tol else ""
    if mode == "abs_sign_rows":
        worst = 0.0
        for g_row, e_row in zip(np.atleast_2d(got), np.atleast_2d(expected)):
            direct = float(np.max(np.abs(g_row - e_row)))
            flipped = float(np.max(np.abs(g_row + e_row)))
            worst = max(worst, min(direct, flipped))
        return worst <= tol, f"max sign-agnostic diff {worst:g} > {tol:g}" if worst > tol else ""
    return False, f"unknown comparison mode {mode!r}"


def _run_cli(cli, args: list[str]) -> subprocess.CompletedProcess:
    return subprocess.run([*cli, *args], capture_output=True, text=True)


def _read_label_csv(path: Path, label_column: str = "label"):
    """Read a generated data file back: features, raw labels, 0/1-encoded labels."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    has_label = header[-1] == label_column
    X = np.asarray([[float(v) for v in row[: len(header) - (1 if has_label else 0)]] for row in body])
    labels = [row[-1] for row in body] if has_label else None
    encoded = None
    if labels is not None:
        seen: dict[str, int] = {}
        for cell in labels:
            seen.setdefault(cell, len(seen))
        encoded = np.asarray([seen[cell] for cell in labels], dtype=np.float64)
    return X, labels, encoded


# -- per-check handlers ----------------------------------------------------


def _check_fit_state(fixture_dir: Path, spec, cli, results, tmp: Path):
    spec_path = tmp / "spec.json"
    spec_path.write_text(json.dumps(spec["spec"]))
    model_path = tmp / "model.estk"
    args = ["fit", "--spec", str(spec_path), "--data", str(fixture_dir / spec["train_data"]), "--model", str(model_path)]
    if spec.get("target_column"):
        args += ["--target-column", spec["target_column"]]
    proc = _run_cli(cli, args)
    if proc.returncode != 0:
        results.append(CheckResult(spec["name"], "cli fit", False, proc.stderr.strip()))
        return
    _, root = read_archive(model_path)
    for name, meta in spec["expected"]["fields"].items():
        if root.fitted is None or name not in root.fitted:
            results.append(CheckResult(spec["name"], f"state {name}", False, "missing from archive"))
            continue
        ok, detail = _values_close(root.fitted[name], meta["value"], meta.get("tol", 0.0), meta["mode"])
        results.append(CheckResult(spec["name"], f"state {name}", ok, detail))


def _check_splits(spec, results):
    from estkit import Splitter, split

    splitter = Splitter(
        spec["splitter"]["scheme"],
        k=int(spec["splitter"].get("k", 5)),
        shuffle=bool(spec["splitter"].get("shuffle", False)),
        random_seed=int(spec["splitter"].get("seed", 0)),
    )
    y = np.asarray(spec["y"], dtype=np.float64) if "y" in spec else None
    folds = split(splitter, int(spec["n_samples"]), y)
    expected = spec["expected"]["folds"]
    if len(folds) != len(expected):
        results.append(CheckResult(spec["name"], "fold count", False, f"{len(folds)} != {len(expected)}"))
        return
    for i, ((train, test), exp) in enumerate(zip(folds, expected)):
        ok = train.tolist() == exp["train"] and test.tolist() == exp["test"]
        results.append(CheckResult(spec["name"], f"fold {i}", ok, "" if ok else "index mismatch"))


def _check_metrics(spec, results):
    from estkit import score_metric

    tol = float(spec.get("tol", 1e-9))
    for name, case in spec["expected"]["metrics"].items():
        got = score_metric(name, np.asarray(case["y_true"], dtype=float), np.asarray(case["y_pred"], dtype=float))
        ok, detail = _values_close(got, case["value"], tol, "abs")
        results.append(CheckResult(spec["name"], f"metric {name}", ok, detail))


def _parse_report(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    fold_cols = [i for i, h in enumerate(header) if h.startswith("fold_")]
    param_cols = [
        (i, h) for i, h in enumerate(header) if h not in ("candidate", "mean_score", "is_best") and i not in fold_cols
    ]
    mean_col = header.index("mean_score")
    out = []
    for row in body:
        params = {}
        for i, name in param_cols:
            if row[i] != "":
                try:
                    params[name] = float(row[i])
                except ValueError:
                    params[name] = row[i]
        out.append(
            {
                "params": params,
                "fold_scores": [float(row[i]) for i in fold_cols],
                "mean_score": float(row[mean_col]),
            }
        )
    return out


def _params_match(report_params: dict, expected_params: dict) -> bool:
    if set(report_params) != set(expected_params):
        return False
    for key, value in expected_params.items():
        got = report_params[key]
        if isinstance(value, str) != isinstance(got, str):
            return False
        if isinstance(value, str):
            if got != value:
                return False
        elif float(got) != float(value):
            return False
    return True


def _check_search_report(fixture_dir: Path, spec, cli, results, tmp: Path):
    spec_path = tmp / "spec.json"
    spec_path.write_text(json.dumps(spec["spec"]))
    report_path = tmp / "report.csv"
    args = [
        "search",
        "--spec",
        str(spec_path),
        "--data",
        str(fixture_dir / spec["train_data"]),
        "--target-column",
        spec["target_column"],
        "--report",
        str(report_path),
    ]
    proc = _run_cli(cli, args)
    if proc.returncode != 0:
        results.append(CheckResult(spec["name"], "cli search", False, proc.stderr.strip()))
        return
    rows = _parse_report(report_path)
    expected = spec["expected"]["candidates"]
    tol = float(spec.get("tol", 1e-12))
    if len(rows) != len(expected):
        results.append(CheckResult(spec["name"], "candidate count", False, f"{len(rows)} != {len(expected)}"))
        return
    for exp in expected:
        label = ", ".join(f"{k}={v}" for k, v in exp["params"].items())
        matches = [row for row in rows if _params_match(row["params"], exp["params"])]
        if len(matches) != 1:
            results.append(CheckResult(spec["name"], f"candidate [{label}]", False, f"{len(matches)} report rows match"))
            continue
        row = matches[0]
        ok_folds, detail_folds = _values_close(row["fold_scores"], exp["fold_scores"], tol, "abs")
        ok_mean, detail_mean = _values_close(row["mean_score"], exp["mean_score"], tol, "abs")
        ok = ok_folds and ok_mean
        results.append(CheckResult(spec["name"], f"candidate [{label}]", ok, detail_folds or detail_mean))


def _check_logistic_pipeline(fixture_dir: Path, spec, cli, results, tmp: Path):
    spec_path = tmp / "spec.json"
    spec_path.write_text(json.dumps(spec["spec"]))
    model_path = tmp / "model.estk"
    pred_path = tmp / "pred.csv"
    train = fixture_dir / spec["train_data"]
    proc = _run_cli(
        cli,
        ["fit", "--spec", str(spec_path), "--data", str(train), "--target-column", spec["target_column"], "--model", str(model_path)],
    )
    if proc.returncode != 0:
        results.append(CheckResult(spec["name"], "cli fit", False, proc.stderr.strip()))
        return
    proc = _run_cli(cli, ["predict", "--model", str(model_path), "--data", str(fixture_dir / spec["test_data"]), "--out", str(pred_path)])
    if proc.returncode != 0:
        results.append(CheckResult(spec["name"], "cli predict", False, proc.stderr.strip()))
        return
    got = pred_path.read_text().strip().splitlines()[1:]
    expected = spec["expected"]["predictions"]
    ok = got == expected
    results.append(CheckResult(spec["name"], "predictions", ok, "" if ok else "label mismatch"))

    # objective at the artifact's coefficients, recomputed independently
    _, root = read_archive(model_path)
    try:
        scaler = root.step("scaler")
        clf = root.step("clf")
        coef = np.asarray(clf.fitted["coef_"])[0]
        intercept = float(np.asarray(clf.fitted["intercept_"]).ravel()[0])
        mean = np.asarray(scaler.fitted["mean_"])
        scale = np.asarray(scaler.fitted["scale_"])
    except (KeyError, TypeError) as exc:
        results.append(CheckResult(spec["name"], "objective", False, f"archive navigation failed: {exc}"))
        return
    X, _, y01 = _read_label_csv(train, spec["target_column"])
    Xs = (X - mean) / scale
    s = np.where(y01 == 1.0, 1.0, -1.0)
    meta = spec["expected"]["objective"]
    z = Xs @ coef + intercept
    objective = 0.5 * float(coef @ coef) + float(meta["C"]) * float(np.logaddexp(0.0, -s * z).sum())
    ok, detail = _values_close(objective, meta["value"], float(meta["tol"]), meta.get("mode", "rel"))
    results.append(CheckResult(spec["name"], "objective", ok, detail))


_HANDLERS = {
    "fit_state": _check_fit_state,
    "search_report": _check_search_report,
    "logistic_pipeline": _check_logistic_pipeline,
}


def compare(fixture_root, artifact_cli=None, report_path=None) -> Report:
    """Check every fixture under ``fixture_root`` against the artifact."""
    cli = tuple(artifact_cli) if artifact_cli else DEFAULT_CLI
    root = Path(fixture_root)
    report = Report()
    for fixture_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        manifest = fixture_dir / "fixture.json"
        if not manifest.exists():
            report.results.append(CheckResult(fixture_dir.name, "manifest", False, "fixture.json missing"))
            continue
        try:
            spec = json.loads(manifest.read_text())
            check = spec["check"]
            if check == "splits":
                _check_splits(spec, report.results)
            elif check == "metrics":
                _check_metrics(spec, report.results)
            elif check in _HANDLERS:
                with tempfile.TemporaryDirectory() as tmp:
                    _HANDLERS[check](fixture_dir, spec, cli, report.results, Path(tmp))
            else:
                report.results.append(CheckResult(fixture_dir.name, check, False, "unknown check type"))
        except KeyError as exc:
            report.results.append(CheckResult(fixture_dir.name, "manifest", False, f"missing fixture field {exc}"))
        except Exception as exc:  # a broken fixture must not abort the whole run
            report.results.append(CheckResult(fixture_dir.name, "error", False, f"{type(exc).__name__}: {exc}"))
    if report_path is not None:
        with open(report_path, "w") as fh:
            json.dump(report.to_json(), fh, indent=1)
            fh.write("\n")
    return report
