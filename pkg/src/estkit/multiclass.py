"""Meta-estimators that lift a binary predictor to K classes.

Both schemes clone the supplied base estimator per subproblem, so the
original handle is never fitted. One-vs-one trains K(K-1)/2 pairwise
clones and lets them vote; one-vs-rest trains K clones against the rest
and picks the highest-scoring class.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, FitError
from .estimator import Capabilities, EstimatorDef, Param, clone, construct, is_estimator, register
from .matrix import take_rows

__all__ = ["OneVsOneClassifier", "OneVsRestClassifier"]


def _check_base_predictor(params):
    base = params["estimator"]
    if not base.capabilities.predictor:
        raise CapabilityError(f"base estimator {base.kind!r} is not a predictor")


def _classes(y: np.ndarray) -> np.ndarray:
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise FitError("need at least two classes in y")
    return classes


def _subset(X, idx: np.ndarray):
    if hasattr(X, "shape"):
        return take_rows(X, idx)
    return [X[int(i)] for i in idx]


def _count(X) -> int:
    return int(X.shape[0]) if hasattr(X, "shape") else len(X)


# -- one-vs-one ------------------------------------------------------------


def _ovo_fit(handle, X, y):
    base = handle._params["estimator"]
    classes = _classes(y)
    k = classes.shape[0]
    estimators = []
    for i in range(k):
        for j in range(i + 1, k):  # pairs ordered (i, j) with i < j
            mask = (y == classes[i]) | (y == classes[j])
            idx = np.where(mask)[0]
            pair_y = (y[idx] == classes[j]).astype(np.float64)
            est = clone(base)
            est.fit(_subset(X, idx), pair_y)
            estimators.append(est)
    return {"estimators_": estimators, "classes_": classes}


def _ovo_predict(handle, Z):
    st = handle._fitted
    classes = st["classes_"]
    k = classes.shape[0]
    n = _count(Z)
    votes = np.zeros((n, k))
    conf = np.zeros((n, k))
    has_decision = handle._params["estimator"].capabilities.decision_function
    pair = 0
    for i in range(k):
        for j in range(i + 1, k):
            est = st["estimators_"][pair]
            pair += 1
            pred = est.predict(Z)
            votes[pred == 0.0, i] += 1
            votes[pred == 1.0, j] += 1
            if has_decision:
                d = est.decision_function(Z)
                conf[:, j] += d
                conf[:, i] -= d
    # winner by votes; ties by summed confidence, then by the lowest label
    top = votes == votes.max(axis=1, keepdims=True)
    masked = np.where(top, conf, -np.inf)
    return classes[np.argmax(masked, axis=1)]


register(
    EstimatorDef(
        kind="one_vs_one",
        schema=(Param("estimator", None, is_estimator, "an estimator handle"),),
        capabilities=Capabilities(predictor=True, supervised=True, default_score="accuracy"),
        fit=_ovo_fit,
        predict=_ovo_predict,
        validate=_check_base_predictor,
        input_kind="inherit",
    )
)


def OneVsOneClassifier(estimator):
    """Pairwise voting over K(K-1)/2 clones of a binary predictor."""
    return construct("one_vs_one", {"estimator": estimator})


# -- one-vs-rest ------------------------------------------------------------


def _ovr_validate(params):
    _check_base_predictor(params)
    caps = params["estimator"].capabilities
    if not (caps.decision_function or caps.probabilistic):
        raise CapabilityError(
            f"base estimator {params['estimator'].kind!r} exposes neither decision_function nor predict_proba"
        )


def _ovr_caps(params) -> Capabilities:
    base = params["estimator"].capabilities
    return Capabilities(
        predictor=True,
        probabilistic=base.probabilistic,
        supervised=True,
        default_score="accuracy",
    )


def _ovr_fit(handle, X, y):
    base = handle._params["estimator"]
    classes = _classes(y)
    estimators = []
    for c in classes:
        est = clone(base)
        est.fit(X, (y == c).astype(np.float64))
        estimators.append(est)
    return {"estimators_": estimators, "classes_": classes}


def _ovr_scores(handle, Z) -> np.ndarray:
    st = handle._fitted
    use_decision = handle._params["estimator"].capabilities.decision_function
    columns = []
    for est in st["estimators_"]:
        if use_decision:
            columns.append(est.decision_function(Z))
        else:
            columns.append(est.predict_proba(Z)[:, 1])
    return np.column_stack(columns)


def _ovr_predict(handle, Z):
    return handle._fitted["classes_"][np.argmax(_ovr_scores(handle, Z), axis=1)]


def _ovr_proba(handle, Z):
    st = handle._fitted
    p = np.column_stack([est.predict_proba(Z)[:, 1] for est in st["estimators_"]])
    totals = p.sum(axis=1, keepdims=True)
    k = p.shape[1]
    uniform = np.full_like(p, 1.0 / k)
    return np.where(totals > 0, p / np.where(totals > 0, totals, 1.0), uniform)


register(
    EstimatorDef(
        kind="one_vs_rest",
        schema=(Param("estimator", None, is_estimator, "an estimator handle"),),
        capabilities=_ovr_caps,
        fit=_ovr_fit,
        predict=_ovr_predict,
        predict_proba=_ovr_proba,
        validate=_ovr_validate,
        input_kind="inherit",
    )
)


def OneVsRestClassifier(estimator):
    """One clone per class against the rest; argmax of per-class scores."""
    return construct("one_vs_rest", {"estimator": estimator})
