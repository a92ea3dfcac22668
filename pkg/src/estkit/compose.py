"""Sequential and parallel composition of estimators.

A pipeline chains named steps where all but the last are transformers
and exposes whatever methods its last step exposes; a feature union fits
named transformers side by side and concatenates their outputs
column-wise. Both are ordinary registered kinds, so they clone, persist,
and participate in parameter search like any base estimator.
"""

from __future__ import annotations

from .errors import ConstructionError
from .estimator import (
    Capabilities,
    EstimatorDef,
    Param,
    as_pairs,
    check_named_estimators,
    construct,
    register,
)
from .matrix import hstack

__all__ = ["FeatureUnion", "Pipeline"]


def _reraise_named(exc: Exception, label: str):
    try:
        wrapped = type(exc)(f"{label}: {exc}")
    except Exception:
        wrapped = RuntimeError(f"{label}: {exc}")
    raise wrapped from exc


# -- pipeline -----------------------------------------------------------


def _pipeline_validate(params):
    steps = params["steps"]
    for name, est in steps[:-1]:
        if not est.capabilities.transformer:
            raise ConstructionError(f"pipeline: step {name!r} must be a transformer")


def _pipeline_caps(params) -> Capabilities:
    steps = params["steps"]
    last = steps[-1][1].capabilities
    supervised = any(est.capabilities.supervised for _, est in steps)
    return Capabilities(
        predictor=last.predictor,
        transformer=last.transformer,
        probabilistic=last.probabilistic,
        decision_function=last.decision_function,
        supervised=supervised,
        default_score=last.default_score,
    )


def _pipeline_fit(handle, X, y):
    steps = handle._params["steps"]
    data = X
    for name, est in steps[:-1]:
        try:
            data = est.fit_transform(data, y)
        except Exception as exc:
            _reraise_named(exc, f"step {name!r}")
    name, last = steps[-1]
    try:
        last.fit(data, y)
    except Exception as exc:
        _reraise_named(exc, f"step {name!r}")
    return {}


def _pipeline_apply(handle, Z):
    for _, est in handle._params["steps"][:-1]:
        Z = est.transform(Z)
    return Z


def _pipeline_last(handle):
    return handle._params["steps"][-1][1]


def _pipeline_predict(handle, Z):
    return _pipeline_last(handle).predict(_pipeline_apply(handle, Z))


def _pipeline_transform(handle, Z):
    return _pipeline_last(handle).transform(_pipeline_apply(handle, Z))


def _pipeline_proba(handle, Z):
    return _pipeline_last(handle).predict_proba(_pipeline_apply(handle, Z))


def _pipeline_decision(handle, Z):
    return _pipeline_last(handle).decision_function(_pipeline_apply(handle, Z))


def _pipeline_score(handle, Z, y=None):
    return _pipeline_last(handle).score(_pipeline_apply(handle, Z), y)


register(
    EstimatorDef(
        kind="pipeline",
        schema=(Param("steps", None, check_named_estimators, "a non-empty list of (name, estimator) pairs", as_pairs),),
        capabilities=_pipeline_caps,
        fit=_pipeline_fit,
        predict=_pipeline_predict,
        transform=_pipeline_transform,
        predict_proba=_pipeline_proba,
        decision_function=_pipeline_decision,
        score=_pipeline_score,
        validate=_pipeline_validate,
        input_kind="inherit",
    )
)


def Pipeline(steps):
    """Chain named steps; the first N-1 must be transformers."""
    return construct("pipeline", {"steps": steps})


# -- feature union -------------------------------------------------------


def _union_validate(params):
    for name, est in params["transformer_list"]:
        if not est.capabilities.transformer:
            raise ConstructionError(f"feature_union: member {name!r} must be a transformer")


def _union_caps(params) -> Capabilities:
    supervised = any(est.capabilities.supervised for _, est in params["transformer_list"])
    return Capabilities(transformer=True, supervised=supervised)


def _union_fit(handle, X, y):
    for name, est in handle._params["transformer_list"]:
        try:
            est.fit(X, y)
        except Exception as exc:
            _reraise_named(exc, f"member {name!r}")
    return {}


def _union_transform(handle, Z):
    return hstack([est.transform(Z) for _, est in handle._params["transformer_list"]])


register(
    EstimatorDef(
        kind="feature_union",
        schema=(
            Param(
                "transformer_list",
                None,
                check_named_estimators,
                "a non-empty list of (name, transformer) pairs",
                as_pairs,
            ),
        ),
        capabilities=_union_caps,
        fit=_union_fit,
        transform=_union_transform,
        validate=_union_validate,
        input_kind="inherit",
    )
)


def FeatureUnion(transformer_list):
    """Fit named transformers independently and concatenate their outputs."""
    return construct("feature_union", {"transformer_list": transformer_list})
