"""Cross-validation splitters, scorers, and hyper-parameter search.

Splitters produce deterministic disjoint train/test index partitions.
Scorers are greater-is-better functions over targets and predictions or
ranking scores. Grid search enumerates the cartesian product of each
sub-grid; randomized search draws a fixed number of candidates from
per-parameter distributions. Both are meta-estimators: they clone their
base per candidate and fold, select the best mean score, refit on the
full data, and then delegate prediction methods to the refit estimator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, FitError, NotFittedError
from .estimator import (
    Capabilities,
    EstimatorDef,
    EstimatorHandle,
    Param,
    as_int,
    check_bool,
    check_int,
    construct,
    is_estimator,
    one_of,
    params_equal,
    register,
)
from .matrix import take_rows

__all__ = [
    "Choice",
    "Distribution",
    "GridSearchCV",
    "KFold",
    "IntegerUniform",
    "LeaveOneOut",
    "LogUniform",
    "RandomizedSearchCV",
    "SCORER_NAMES",
    "Splitter",
    "StratifiedKFold",
    "Uniform",
    "expand_grid",
    "roc_auc",
    "sample_params",
    "score_metric",
    "split",
]


# -- splitters ---------------------------------------------------------------


@dataclass(frozen=True)
class Splitter:
    """Cross-validation scheme: kfold, stratified_kfold, or leave_one_out."""

    scheme: str
    k: int = 5
    shuffle: bool = False
    random_seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("kfold", "stratified_kfold", "leave_one_out"):
            raise ValueError(f"unknown cross-validation scheme {self.scheme!r}")
        if self.scheme != "leave_one_out" and self.k < 2:
            raise ValueError("k must be at least 2")


def KFold(n_splits: int = 5, shuffle: bool = False, random_seed: int = 0) -> Splitter:
    return Splitter("kfold", k=n_splits, shuffle=shuffle, random_seed=random_seed)


def StratifiedKFold(n_splits: int = 5, shuffle: bool = False, random_seed: int = 0) -> Splitter:
    return Splitter("stratified_kfold", k=n_splits, shuffle=shuffle, random_seed=random_seed)


def LeaveOneOut() -> Splitter:
    return Splitter("leave_one_out")


def _complement(n: int, test: np.ndarray) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return np.where(mask)[0]


def split(splitter: Splitter, n_samples: int, y=None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Materialize the ordered (train_idx, test_idx) list for n_samples rows."""
    n = int(n_samples)
    if splitter.scheme == "leave_one_out":
        if n < 2:
            raise ValueError("leave_one_out needs at least two samples")
        return [(_complement(n, np.asarray([i])), np.asarray([i], dtype=np.int64)) for i in range(n)]

    k = splitter.k
    if k > n:
        raise ValueError(f"cannot split {n} samples into {k} folds")

    if splitter.scheme == "kfold":
        indices = np.arange(n, dtype=np.int64)
        if splitter.shuffle:
            indices = np.random.default_rng(splitter.random_seed).permutation(n).astype(np.int64)
        sizes = np.full(k, n // k, dtype=np.int64)
        sizes[: n % k] += 1  # the first n mod k folds take the extra sample
        out = []
        start = 0
        for size in sizes:
            test = np.sort(indices[start : start + size])
            out.append((_complement(n, test), test))
            start += size
        return out

    # stratified k-fold
    if y is None:
        raise ValueError("stratified_kfold requires y")
    y = np.asarray(y).reshape(-1)
    if y.shape[0] != n:
        raise ValueError("y length does not match n_samples")
    rng = np.random.default_rng(splitter.random_seed) if splitter.shuffle else None
    fold_tests: list[list[int]] = [[] for _ in range(k)]
    for c in np.unique(y):  # classes in sorted label order
        idx = np.where(y == c)[0]
        if idx.shape[0] < k:
            raise ValueError(f"class {c!r} has {idx.shape[0]} members, fewer than {k} folds")
        if rng is not None:
            idx = rng.permutation(idx)
        for position, sample in enumerate(idx):  # round-robin assignment
            fold_tests[position % k].append(int(sample))
    out = []
    for test_list in fold_tests:
        test = np.sort(np.asarray(test_list, dtype=np.int64))
        out.append((_complement(n, test), test))
    return out


# -- scorers -----------------------------------------------------------------

SCORER_NAMES = (
    "accuracy",
    "f1",
    "precision",
    "recall",
    "roc_auc",
    "r2",
    "neg_mean_squared_error",
    "estimator_default",
)

_NEEDS_SCORES = {"roc_auc"}


def _binary_counts(y_true: np.ndarray, y_pred: np.ndarray):
    tp = float(np.sum((y_true == 1) & (y_pred == 1)))
    fp = float(np.sum((y_true != 1) & (y_pred == 1)))
    fn = float(np.sum((y_true == 1) & (y_pred != 1)))
    return tp, fp, fn


def roc_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney statistic: (#correctly ordered pairs + 0.5 * ties) / (n_pos * n_neg)."""
    y_true = np.asarray(y_true, dtype=np.float64).reshape(-1)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    pos = scores[y_true == 1]
    neg = scores[y_true != 1]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("roc_auc requires both classes present")
    # average ranks over the pooled scores
    pooled = np.concatenate([pos, neg])
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(pooled.shape[0], dtype=np.float64)
    sorted_scores = pooled[order]
    i = 0
    while i < sorted_scores.shape[0]:
        j = i
        while j + 1 < sorted_scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[: pos.size].sum())
    u = rank_sum_pos - pos.size * (pos.size + 1) / 2.0
    return u / (pos.size * neg.size)


def score_metric(name: str, y_true, y_pred_or_scores) -> float:
    """Evaluate a named metric; every metric is greater-is-better."""
    y_true = np.asarray(y_true, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_pred_or_scores, dtype=np.float64).reshape(-1)
    if y_true.shape[0] != y_hat.shape[0]:
        raise ValueError(f"length mismatch: {y_true.shape[0]} vs {y_hat.shape[0]}")
    if name == "accuracy":
        return float(np.mean(y_true == y_hat))
    if name == "precision":
        tp, fp, _ = _binary_counts(y_true, y_hat)
        return tp / (tp + fp) if tp + fp > 0 else 0.0
    if name == "recall":
        tp, _, fn = _binary_counts(y_true, y_hat)
        return tp / (tp + fn) if tp + fn > 0 else 0.0
    if name == "f1":
        tp, fp, fn = _binary_counts(y_true, y_hat)
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        return 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    if name == "roc_auc":
        return roc_auc(y_true, y_hat)
    if name == "r2":
        ss_res = float(((y_true - y_hat) ** 2).sum())
        ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
        if ss_tot == 0.0:
            if ss_res == 0.0:
                return 0.0
            raise ValueError("r2 undefined: constant y_true with nonzero residuals")
        return 1.0 - ss_res / ss_tot
    if name == "neg_mean_squared_error":
        return -float(((y_true - y_hat) ** 2).mean())
    raise ValueError(f"unknown scorer {name!r}")


def _apply_scorer(name: str, est: EstimatorHandle, X_test, y_test) -> float:
    if name == "estimator_default":
        return float(est.score(X_test, y_test))
    if y_test is None:
        raise FitError(f"scorer {name!r} requires y")
    if name in _NEEDS_SCORES:
        caps = est.capabilities
        if caps.decision_function:
            scores = est.decision_function(X_test)
        elif caps.probabilistic:
            scores = est.predict_proba(X_test)[:, 1]
        else:
            raise CapabilityError(f"scorer {name!r} needs decision_function or predict_proba")
        scores = np.asarray(scores)
        if scores.ndim != 1:
            raise ValueError(f"scorer {name!r} is binary-only")
        return score_metric(name, y_test, scores)
    return score_metric(name, y_test, est.predict(X_test))


# -- candidate enumeration ----------------------------------------------------


def expand_grid(grid) -> list[dict]:
    """Expand sub-grids into an ordered, deduplicated candidate list.

    Each sub-grid maps parameter paths to value lists; its cartesian
    product is taken in declaration order with the last key varying
    fastest, sub-grids are concatenated, and exact duplicates keep their
    first position.
    """
    if isinstance(grid, dict):
        grid = [grid]
    if not grid:
        raise ValueError("empty parameter grid")
    candidates: list[dict] = []
    for sub in grid:
        if not sub:
            raise ValueError("empty sub-grid")
        names = list(sub)
        value_lists = []
        for name in names:
            values = sub[name]
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise ValueError(f"parameter {name!r} needs a non-empty value list")
            value_lists.append(list(values))
        for combo in itertools.product(*value_lists):
            candidate = dict(zip(names, combo))
            if not any(params_equal(candidate, seen) for seen in candidates):
                candidates.append(candidate)
    return candidates


@dataclass(frozen=True)
class Distribution:
    """One sampling distribution for randomized search."""

    kind: str  # "choice" | "uniform" | "log_uniform" | "integer_uniform"
    low: float = 0.0
    high: float = 0.0
    choices: tuple = ()

    def __post_init__(self):
        if self.kind == "choice":
            if len(self.choices) == 0:
                raise ValueError("choice distribution needs at least one value")
            return
        if self.kind not in ("uniform", "log_uniform", "integer_uniform"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if not self.low < self.high:
            raise ValueError(f"{self.kind} requires low < high")
        if self.kind == "log_uniform" and self.low <= 0:
            raise ValueError("log_uniform requires a positive lower bound")

    def draw(self, rng: np.random.Generator):
        if self.kind == "choice":
            return self.choices[int(rng.integers(len(self.choices)))]
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "log_uniform":
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        return int(rng.integers(int(self.low), int(self.high) + 1))  # inclusive bounds


def Choice(values) -> Distribution:
    return Distribution("choice", choices=tuple(values))


def Uniform(low: float, high: float) -> Distribution:
    return Distribution("uniform", low=float(low), high=float(high))


def LogUniform(low: float, high: float) -> Distribution:
    return Distribution("log_uniform", low=float(low), high=float(high))


def IntegerUniform(low: int, high: int) -> Distribution:
    return Distribution("integer_uniform", low=int(low), high=int(high))


def sample_params(distributions: dict, n_iter: int, seed: int = 0) -> list[dict]:
    """Draw n_iter candidates, each sampling every parameter once; seeded."""
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    dists = {}
    for name, dist in distributions.items():
        if isinstance(dist, (list, tuple)):
            dist = Choice(dist)
        if not isinstance(dist, Distribution):
            raise ValueError(f"parameter {name!r}: expected a Distribution or a value list")
        dists[name] = dist
    rng = np.random.default_rng(seed)
    return [{name: dist.draw(rng) for name, dist in dists.items()} for _ in range(n_iter)]


# -- search meta-estimators -----------------------------------------------


def _check_cv(v) -> bool:
    return isinstance(v, Splitter)


def _as_cv(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return KFold(n_splits=int(v))
    return v


def _check_grid(v) -> bool:
    if isinstance(v, dict):
        v = [v]
    if not isinstance(v, (list, tuple)) or not v:
        return False
    for sub in v:
        if not isinstance(sub, dict) or not sub:
            return False
        for values in sub.values():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                return False
    return True


def _as_grid(v):
    if isinstance(v, dict):
        return [dict(sub) for sub in [v]]
    if isinstance(v, (list, tuple)):
        return [dict(sub) if isinstance(sub, dict) else sub for sub in v]
    return v


def _check_distributions(v) -> bool:
    if not isinstance(v, dict) or not v:
        return False
    return all(isinstance(d, (Distribution, list, tuple)) for d in v.values())


def _search_caps(params) -> Capabilities:
    base = params["estimator"].capabilities
    return Capabilities(
        predictor=base.predictor,
        transformer=base.transformer,
        probabilistic=base.probabilistic,
        decision_function=base.decision_function,
        supervised=base.supervised,
        default_score=base.default_score,
    )


def _n_samples(X) -> int:
    return int(X.shape[0]) if hasattr(X, "shape") else len(X)


def _subset(X, idx: np.ndarray):
    if hasattr(X, "shape"):
        return take_rows(X, idx)
    return [X[int(i)] for i in idx]


def _evaluate_candidates(handle, X, y, candidates: list[dict]):
    base = handle._params["estimator"]
    scorer = handle._params["scoring"]
    folds = split(handle._params["cv"], _n_samples(X), y)
    fold_scores = np.empty((len(candidates), len(folds)), dtype=np.float64)
    for ci, candidate in enumerate(candidates):
        for fi, (train_idx, test_idx) in enumerate(folds):
            est = base.set_params(candidate)
            y_train = None if y is None else y[train_idx]
            y_test = None if y is None else y[test_idx]
            try:
                est.fit(_subset(X, train_idx), y_train)
            except Exception as exc:
                raise FitError(f"candidate {ci}, fold {fi}: {exc}") from exc
            fold_scores[ci, fi] = _apply_scorer(scorer, est, _subset(X, test_idx), y_test)
    return fold_scores


def _finish_search(handle, X, y, candidates: list[dict], fold_scores: np.ndarray) -> dict:
    mean_scores = fold_scores.mean(axis=1)
    best_index = int(np.argmax(mean_scores))  # ties fall to the earliest candidate
    state = {
        "candidates_": candidates,
        "fold_scores_": fold_scores,
        "mean_scores_": mean_scores,
        "best_index_": best_index,
        "best_params_": dict(candidates[best_index]),
        "best_score_": float(mean_scores[best_index]),
    }
    if handle._params["refit"]:
        best = handle._params["estimator"].set_params(candidates[best_index])
        state["best_estimator_"] = best.fit(X, y)
    return state


def _grid_search_fit(handle, X, y):
    candidates = expand_grid(handle._params["param_grid"])
    return _finish_search(handle, X, y, candidates, _evaluate_candidates(handle, X, y, candidates))


def _randomized_search_fit(handle, X, y):
    candidates = sample_params(
        handle._params["param_distributions"],
        handle._params["n_iter"],
        handle._params["random_seed"],
    )
    return _finish_search(handle, X, y, candidates, _evaluate_candidates(handle, X, y, candidates))


def _best(handle) -> EstimatorHandle:
    st = handle._fitted
    if "best_estimator_" not in st:
        raise NotFittedError("search ran with refit=False; no best_estimator_ to delegate to")
    return st["best_estimator_"]


def _search_predict(handle, Z):
    return _best(handle).predict(Z)


def _search_transform(handle, Z):
    return _best(handle).transform(Z)


def _search_proba(handle, Z):
    return _best(handle).predict_proba(Z)


def _search_decision(handle, Z):
    return _best(handle).decision_function(Z)


def _search_score(handle, Z, y=None):
    return _best(handle).score(Z, y)


def _search_schema(extra: tuple[Param, ...]) -> tuple[Param, ...]:
    return (
        Param("estimator", None, is_estimator, "an estimator handle"),
        *extra,
        Param("scoring", "estimator_default", one_of(*SCORER_NAMES), f"one of {SCORER_NAMES}"),
        Param("cv", Splitter("kfold", k=5), _check_cv, "a Splitter or an integer fold count", _as_cv),
        Param("refit", True, check_bool, "a boolean"),
    )


register(
    EstimatorDef(
        kind="grid_search",
        schema=_search_schema((Param("param_grid", None, _check_grid, "a dict or list of dicts of value lists", _as_grid),)),
        capabilities=_search_caps,
        fit=_grid_search_fit,
        predict=_search_predict,
        transform=_search_transform,
        predict_proba=_search_proba,
        decision_function=_search_decision,
        score=_search_score,
        input_kind="inherit",
    )
)

register(
    EstimatorDef(
        kind="randomized_search",
        schema=_search_schema(
            (
                Param("param_distributions", None, _check_distributions, "a dict of Distributions or value lists"),
                Param("n_iter", 10, lambda v: check_int(v) and v >= 1, "a positive integer", as_int),
                Param("random_seed", 0, check_int, "an integer", as_int),
            )
        ),
        capabilities=_search_caps,
        fit=_randomized_search_fit,
        predict=_search_predict,
        transform=_search_transform,
        predict_proba=_search_proba,
        decision_function=_search_decision,
        score=_search_score,
        input_kind="inherit",
    )
)


def GridSearchCV(estimator, param_grid, scoring: str = "estimator_default", cv=5, refit: bool = True):
    """Exhaustive search over the expanded grid with cross-validated scoring."""
    return construct(
        "grid_search",
        {"estimator": estimator, "param_grid": param_grid, "scoring": scoring, "cv": cv, "refit": refit},
    )


def RandomizedSearchCV(
    estimator,
    param_distributions,
    n_iter: int = 10,
    scoring: str = "estimator_default",
    cv=5,
    refit: bool = True,
    random_seed: int = 0,
):
    """Randomized search drawing n_iter candidates from per-parameter distributions."""
    return construct(
        "randomized_search",
        {
            "estimator": estimator,
            "param_distributions": param_distributions,
            "n_iter": n_iter,
            "scoring": scoring,
            "cv": cv,
            "refit": refit,
            "random_seed": random_seed,
        },
    )
