"""Batch command-line frontend.

Subcommands: fit, predict, score, search. Estimators are described by a
declarative JSON spec that is validated against the registry before any
data is read. Exit codes: 0 success, 1 spec/validation error, 2 data
error, 3 fit error.

Spec format::

    {"estimator": {"kind": "logistic_regression", "params": {"penalty": "l1"}}}

Composites nest estimator nodes inside ``steps``, ``transformer_list``
or ``estimator`` parameters. A search spec replaces "estimator" at the
top level::

    {"search": {"type": "grid", "estimator": {...},
                "grid": [{"kernel": ["linear"], "C": [1, 10]}],
                "scoring": "f1", "cv": {"scheme": "kfold", "k": 10},
                "refit": true}}

Randomized search uses ``"type": "randomized"`` with ``"distributions"``
mapping parameter paths to one of ``{"choice": [...]}``,
``{"uniform": [a, b]}``, ``{"log_uniform": [a, b]}`` or
``{"integer_uniform": [a, b]}``, plus ``"n_iter"`` and ``"seed"``.

Data files ending in .svm/.svmlight/.libsvm are parsed as svmlight;
anything else is a headered CSV whose target column is named with
--target-column.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .errors import (
    CapabilityError,
    ConstructionError,
    DataError,
    EstkitError,
    NotFittedError,
    PersistenceError,
)
from .estimator import EstimatorHandle, construct
from .matrix import Dataset, load_csv, load_svmlight
from .model_selection import Choice, IntegerUniform, LogUniform, Splitter, Uniform
from .persistence import load_archive, save

__all__ = ["build_estimator", "build_from_spec", "main"]

EXIT_OK = 0
EXIT_SPEC = 1
EXIT_DATA = 2
EXIT_FIT = 3

_SVMLIGHT_SUFFIXES = (".svm", ".svmlight", ".libsvm")


class SpecError(EstkitError):
    """The spec file is malformed."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SpecError(message)


def build_estimator(node) -> EstimatorHandle:
    """Turn an estimator node into a handle, recursing into nested nodes."""
    _require(isinstance(node, dict), "estimator node must be an object")
    _require("kind" in node, 'estimator node needs a "kind"')
    unknown = set(node) - {"kind", "params"}
    _require(not unknown, f"unexpected estimator node keys: {sorted(unknown)}")
    params = dict(node.get("params", {}))
    for name, value in params.items():
        if name in ("steps", "transformer_list"):
            _require(
                isinstance(value, list) and all(isinstance(p, list) and len(p) == 2 for p in value),
                f"{name} must be a list of [name, estimator] pairs",
            )
            params[name] = [(p[0], build_estimator(p[1])) for p in value]
        elif name == "estimator":
            params[name] = build_estimator(value)
        elif name == "cv":
            params[name] = _build_cv(value)
    return construct(node["kind"], params)


def _build_cv(value) -> Splitter | int:
    if isinstance(value, int):
        return value
    _require(isinstance(value, dict) and "scheme" in value, 'cv must be an integer or {"scheme": ...}')
    return Splitter(
        value["scheme"],
        k=int(value.get("k", 5)),
        shuffle=bool(value.get("shuffle", False)),
        random_seed=int(value.get("seed", 0)),
    )


_DISTRIBUTIONS = {
    "choice": Choice,
    "uniform": lambda args: Uniform(*args),
    "log_uniform": lambda args: LogUniform(*args),
    "integer_uniform": lambda args: IntegerUniform(*args),
}


def _build_distributions(node) -> dict:
    _require(isinstance(node, dict) and node, "distributions must be a non-empty object")
    out = {}
    for name, spec in node.items():
        if isinstance(spec, list):
            out[name] = Choice(spec)
            continue
        _require(isinstance(spec, dict) and len(spec) == 1, f"distribution for {name!r} must name one kind")
        kind, args = next(iter(spec.items()))
        _require(kind in _DISTRIBUTIONS, f"unknown distribution {kind!r}")
        try:
            out[name] = _DISTRIBUTIONS[kind](args)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"distribution for {name!r}: {exc}") from exc
    return out


def _build_search(node) -> EstimatorHandle:
    _require(isinstance(node, dict), "search must be an object")
    _require("estimator" in node, 'search needs an "estimator"')
    search_type = node.get("type", "grid")
    _require(search_type in ("grid", "randomized"), f"unknown search type {search_type!r}")
    params = {
        "estimator": build_estimator(node["estimator"]),
        "scoring": node.get("scoring", "estimator_default"),
        "cv": _build_cv(node.get("cv", 5)),
        "refit": bool(node.get("refit", True)),
    }
    if search_type == "grid":
        _require("grid" in node, 'grid search needs a "grid"')
        params["param_grid"] = node["grid"]
        return construct("grid_search", params)
    _require("distributions" in node, 'randomized search needs "distributions"')
    params["param_distributions"] = _build_distributions(node["distributions"])
    params["n_iter"] = int(node.get("n_iter", 10))
    params["random_seed"] = int(node.get("seed", 0))
    return construct("randomized_search", params)


def build_from_spec(spec: dict) -> EstimatorHandle:
    """Validate a parsed spec document and build the described estimator."""
    _require(isinstance(spec, dict), "spec must be a JSON object")
    if "search" in spec:
        return _build_search(spec["search"])
    _require("estimator" in spec, 'spec needs an "estimator" or "search" entry')
    return build_estimator(spec["estimator"])


def _read_spec(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON: {exc}") from exc


def _load_dataset(path, target_column) -> Dataset:
    try:
        if str(path).endswith(_SVMLIGHT_SUFFIXES):
            return load_svmlight(path)
        if isinstance(target_column, str) and target_column.lstrip("-").isdigit():
            target_column = int(target_column)
        return load_csv(path, has_header=True, target_column=target_column)
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None


def _apply_seed(handle: EstimatorHandle, seed) -> EstimatorHandle:
    if seed is None:
        return handle
    try:
        return handle.set_params(random_seed=int(seed))
    except ConstructionError:
        return handle  # kind has no randomness


def _format_value(value) -> str:
    if isinstance(value, EstimatorHandle):
        return value.kind
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode_predictions(pred: np.ndarray, label_names) -> list[str]:
    out = []
    for value in np.asarray(pred).reshape(-1):
        if label_names is not None and float(value).is_integer() and 0 <= int(value) < len(label_names):
            out.append(label_names[int(value)])
        else:
            out.append(repr(float(value)))
    return out


def _cmd_fit(args) -> int:
    handle = _apply_seed(build_from_spec(_read_spec(args.spec)), args.seed)
    data = _load_dataset(args.data, args.target_column)
    handle.fit(data.X, data.y)
    save(handle, args.model, label_names=data.label_names)
    return EXIT_OK


def _cmd_predict(args) -> int:
    archive = load_archive(args.model)
    data = _load_dataset(args.data, args.target_column)
    pred = archive.estimator.predict(data.X)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction"])
        for cell in _decode_predictions(pred, archive.label_names):
            writer.writerow([cell])
    return EXIT_OK


def _cmd_score(args) -> int:
    archive = load_archive(args.model)
    data = _load_dataset(args.data, args.target_column)
    value = archive.estimator.score(data.X, data.y)
    text = repr(float(value))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _write_report(path, state) -> None:
    candidates = state["candidates_"]
    fold_scores = state["fold_scores_"]
    mean_scores = state["mean_scores_"]
    best_index = state["best_index_"]
    param_names: list[str] = []
    for cand in candidates:
        for name in cand:
            if name not in param_names:
                param_names.append(name)
    n_folds = fold_scores.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["candidate", *param_names, *[f"fold_{i}" for i in range(n_folds)], "mean_score", "is_best"]
        )
        for ci, cand in enumerate(candidates):
            row = [ci]
            row += [_format_value(cand[name]) if name in cand else "" for name in param_names]
            row += [repr(float(v)) for v in fold_scores[ci]]
            row.append(repr(float(mean_scores[ci])))
            row.append(1 if ci == best_index else 0)
            writer.writerow(row)


def _cmd_search(args) -> int:
    spec = _read_spec(args.spec)
    if "search" not in spec:
        raise SpecError("search command requires a spec with a search block")
    handle = _apply_seed(build_from_spec(spec), args.seed)
    data = _load_dataset(args.data, args.target_column)
    handle.fit(data.X, data.y)
    state = handle.fitted
    if args.report:
        _write_report(args.report, state)
    if args.model:
        if "best_estimator_" not in state:
            raise SpecError("refit=false search produces no model archive; drop --model or enable refit")
        save(state["best_estimator_"], args.model, label_names=data.label_names)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="estkit", description="Fit, apply, and tune estimators in batch.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the spec'd estimator and write a model archive")
    p_fit.add_argument("--spec", required=True)
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--target-column", default=None)
    p_fit.add_argument("--model", required=True)
    p_fit.add_argument("--seed", default=None)

    p_pred = sub.add_parser("predict", help="write one prediction per input row")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--target-column", default=None)
    p_pred.add_argument("--out", required=True)

    p_score = sub.add_parser("score", help="print the model's default score on labeled data")
    p_score.add_argument("--model", required=True)
    p_score.add_argument("--data", required=True)
    p_score.add_argument("--target-column", default=None)
    p_score.add_argument("--out", default=None)

    p_search = sub.add_parser("search", help="run a hyper-parameter search and write model + report")
    p_search.add_argument("--spec", required=True)
    p_search.add_argument("--data", required=True)
    p_search.add_argument("--target-column", default=None)
    p_search.add_argument("--model", default=None)
    p_search.add_argument("--report", default=None)
    p_search.add_argument("--seed", default=None)

    return parser


_HANDLERS = {"fit": _cmd_fit, "predict": _cmd_predict, "score": _cmd_score, "search": _cmd_search}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (SpecError, ConstructionError, CapabilityError, PersistenceError, NotFittedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # fit-time failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
