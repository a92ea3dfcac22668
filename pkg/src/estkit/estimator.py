"""Uniform estimator contract: registry, parameterized construction, cloning.

An estimator is a string kind registered with a parameter schema,
capability flags, and plain implementation functions. Every estimator,
built-in or third-party, is handled through the same
:class:`EstimatorHandle`; interchangeability comes from the registered
interface, never from inheritance. Learned values live in a fitted-state
mapping whose keys end with a trailing underscore and are exposed as
attributes on the handle.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from .errors import CapabilityError, ConstructionError, DataError, FitError, NotFittedError
from .matrix import is_sparse

__all__ = [
    "Capabilities",
    "EstimatorDef",
    "EstimatorHandle",
    "Param",
    "audit_registry",
    "clone",
    "construct",
    "is_estimator",
    "params_equal",
    "register",
    "registered_kinds",
    "unregister",
]


@dataclass(frozen=True)
class Capabilities:
    """What a kind can do; constant for a given kind and parameter set."""

    predictor: bool = False
    transformer: bool = False
    probabilistic: bool = False
    decision_function: bool = False
    supervised: bool = False
    default_score: str | None = None  # "accuracy" | "r2" | None; None with a score impl is allowed


@dataclass(frozen=True)
class Param:
    """One schema entry: name, default, and a value check."""

    name: str
    default: Any
    check: Callable[[Any], bool]
    expect: str
    convert: Callable[[Any], Any] | None = None


@dataclass(frozen=True)
class EstimatorDef:
    """Registry record: schema plus implementation functions.

    Implementation functions receive the handle and raw data; ``fit``
    returns the fitted-state mapping. ``capabilities`` may be a callable
    of the parameter map for composite kinds whose surface depends on
    their children.
    """

    kind: str
    schema: tuple[Param, ...]
    capabilities: Capabilities | Callable[[dict], Capabilities]
    fit: Callable
    predict: Callable | None = None
    transform: Callable | None = None
    predict_proba: Callable | None = None
    decision_function: Callable | None = None
    score: Callable | None = None
    validate: Callable[[dict], None] | None = None
    input_kind: str = "matrix"  # "matrix" | "docs"

    def param(self, name: str) -> Param | None:
        for p in self.schema:
            if p.name == name:
                return p
        return None


_REGISTRY: dict[str, EstimatorDef] = {}
_AUDIT: list[tuple[str, str]] | None = None


def register(defn: EstimatorDef) -> None:
    if defn.kind in _REGISTRY:
        raise ConstructionError(f"estimator kind {defn.kind!r} already registered")
    _REGISTRY[defn.kind] = defn


def unregister(kind: str) -> None:
    _REGISTRY.pop(kind, None)


def registered_kinds() -> list[str]:
    return sorted(_REGISTRY)


def _lookup(kind: str) -> EstimatorDef:
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise ConstructionError(f"unknown estimator kind {kind!r}") from None


@contextmanager
def audit_registry():
    """Record every registry invocation (construct and method calls) in a list."""
    global _AUDIT
    previous = _AUDIT
    _AUDIT = []
    try:
        yield _AUDIT
    finally:
        _AUDIT = previous


def _audit(event: str, kind: str) -> None:
    if _AUDIT is not None:
        _AUDIT.append((event, kind))


def is_estimator(value) -> bool:
    return isinstance(value, EstimatorHandle)


def params_equal(a, b) -> bool:
    """Structural equality for parameter values; handles compare by kind + params."""
    if isinstance(a, EstimatorHandle) or isinstance(b, EstimatorHandle):
        return (
            isinstance(a, EstimatorHandle)
            and isinstance(b, EstimatorHandle)
            and a.kind == b.kind
            and params_equal(a.get_params(), b.get_params())
        )
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(params_equal(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(params_equal(x, y) for x, y in zip(a, b))
    return bool(a == b)


def _copy_value(value):
    if isinstance(value, EstimatorHandle):
        return clone(value)
    if isinstance(value, (list, tuple)):
        return [_copy_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _copy_value(v) for k, v in value.items()}
    return value


def construct(kind: str, overrides: dict | None = None, **kw) -> "EstimatorHandle":
    """Build an unfitted handle from defaults plus overrides; touches no data."""
    defn = _lookup(kind)
    _audit("construct", kind)
    given = dict(overrides or {})
    given.update(kw)
    params: dict[str, Any] = {}
    for p in defn.schema:
        if p.name in given:
            value = given.pop(p.name)
        else:
            value = _copy_value(p.default)
        if p.convert is not None:
            value = p.convert(value)
        if not p.check(value):
            raise ConstructionError(f"{kind}: parameter {p.name!r} expects {p.expect}, got {value!r}")
        params[p.name] = value
    if given:
        unknown = sorted(given)[0]
        raise ConstructionError(f"{kind}: unknown parameter {unknown!r}")
    if defn.validate is not None:
        defn.validate(params)
    return EstimatorHandle(kind, params)


def clone(handle: "EstimatorHandle") -> "EstimatorHandle":
    """Fresh unfitted handle with an equal, deeply copied parameter map."""
    params = {name: _copy_value(value) for name, value in handle._params.items()}
    return construct(handle.kind, params)


def _named_children(params: dict) -> list[tuple[str, "EstimatorHandle"]]:
    """(name, child) pairs reachable from parameter values, in declaration order."""
    out = []
    for name, value in params.items():
        if isinstance(value, EstimatorHandle):
            out.append((name, value))
        elif isinstance(value, (list, tuple)):
            for item in value:
                if (
                    isinstance(item, (list, tuple))
                    and len(item) == 2
                    and isinstance(item[0], str)
                    and isinstance(item[1], EstimatorHandle)
                ):
                    out.append((item[0], item[1]))
    return out


class EstimatorHandle:
    """A configured estimator: kind, parameters, and (after fit) learned state."""

    __slots__ = ("kind", "_params", "_fitted")

    def __init__(self, kind: str, params: dict):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "_params", params)
        object.__setattr__(self, "_fitted", None)

    # -- inspection ---------------------------------------------------

    @property
    def capabilities(self) -> Capabilities:
        caps = _lookup(self.kind).capabilities
        if callable(caps):
            caps = caps(self._params)
        return caps

    @property
    def input_kind(self) -> str:
        ik = _lookup(self.kind).input_kind
        if ik == "inherit":
            children = _named_children(self._params)
            return children[0][1].input_kind if children else "matrix"
        return ik

    @property
    def is_fitted(self) -> bool:
        return self._fitted is not None

    @property
    def fitted(self) -> dict | None:
        return None if self._fitted is None else dict(self._fitted)

    def get_params(self, deep: bool = False) -> dict:
        out = dict(self._params)
        if deep:
            for name, child in _named_children(self._params):
                out[name] = child
                for key, value in child.get_params(deep=True).items():
                    out[f"{name}__{key}"] = value
        return out

    def set_params(self, updates: dict | None = None, **kw) -> "EstimatorHandle":
        """Return a fresh unfitted handle with the updates applied.

        Keys may address nested estimators with ``__`` paths; the path
        walks parameter names and the names of list members (pipeline
        steps, union members). The receiver is left untouched.
        """
        merged = dict(updates or {})
        merged.update(kw)
        new = clone(self)
        for key, value in merged.items():
            new = _apply_update(new, key, value)
        return new

    def __getattr__(self, name: str):
        if name.endswith("_") and not name.startswith("_"):
            fitted = object.__getattribute__(self, "_fitted")
            if fitted is None:
                raise NotFittedError(f"{self.kind} is not fitted; call fit first")
            if name in fitted:
                return fitted[name]
        raise AttributeError(f"{type(self).__name__} object has no attribute {name!r}")

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._params.items())
        state = " (fitted)" if self.is_fitted else ""
        return f"{self.kind}({inner}){state}"

    # -- learning and use ----------------------------------------------

    def fit(self, X, y=None) -> "EstimatorHandle":
        defn = _lookup(self.kind)
        caps = self.capabilities
        object.__setattr__(self, "_fitted", None)  # re-fit starts from scratch
        X = _check_X(X, self.input_kind)
        if caps.supervised and y is None:
            raise FitError(f"{self.kind} is supervised and requires y")
        if y is not None:
            y = np.asarray(y, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(y)):
                raise FitError(f"{self.kind}: y contains non-finite values")
            n = X.shape[0] if self.input_kind == "matrix" else len(X)
            if y.shape[0] != n:
                raise FitError(f"{self.kind}: X has {n} rows but y has {y.shape[0]}")
        _audit("fit", self.kind)
        state = {name: _normalize_state(value) for name, value in defn.fit(self, X, y).items()}
        if self.input_kind == "matrix":
            state.setdefault("n_features_in_", int(X.shape[1]))
        object.__setattr__(self, "_fitted", state)
        return self

    def _method(self, name: str, capability_ok: bool):
        defn = _lookup(self.kind)
        impl = getattr(defn, name)
        if impl is None or not capability_ok:
            raise CapabilityError(f"{self.kind} does not expose {name}")
        if self._fitted is None:
            raise NotFittedError(f"{self.kind} is not fitted; call fit first")
        return impl

    def _check_width(self, X):
        expected = self._fitted.get("n_features_in_") if self._fitted else None
        if expected is not None and X.shape[1] != expected:
            raise DataError(f"{self.kind}: expected {expected} features, got {X.shape[1]}")

    def _run(self, name: str, capability_ok: bool, X):
        impl = self._method(name, capability_ok)
        X = _check_X(X, self.input_kind, allow_empty=True)
        if self.input_kind == "matrix":
            self._check_width(X)
        _audit(name, self.kind)
        return impl(self, X)

    def predict(self, X):
        return self._run("predict", self.capabilities.predictor, X)

    def transform(self, X):
        return self._run("transform", self.capabilities.transformer, X)

    def predict_proba(self, X):
        return self._run("predict_proba", self.capabilities.probabilistic, X)

    def decision_function(self, X):
        return self._run("decision_function", self.capabilities.decision_function, X)

    def fit_transform(self, X, y=None):
        """fit followed by transform, bit-for-bit."""
        return self.fit(X, y).transform(X)

    def fit_predict(self, X, y=None):
        """fit followed by predict on the training data."""
        return self.fit(X, y).predict(X)

    def score(self, X, y=None) -> float:
        caps = self.capabilities
        defn = _lookup(self.kind)
        if defn.score is None and not (caps.predictor and caps.default_score in ("accuracy", "r2")):
            raise CapabilityError(f"{self.kind} has no score")
        if self._fitted is None:
            raise NotFittedError(f"{self.kind} is not fitted; call fit first")
        if defn.score is not None:
            _audit("score", self.kind)
            return float(defn.score(self, _check_X(X, self.input_kind, allow_empty=True), y))
        if caps.default_score == "accuracy":
            if y is None:
                raise FitError(f"{self.kind}.score requires y")
            y = np.asarray(y, dtype=np.float64).reshape(-1)
            return float(np.mean(self.predict(X) == y))
        if caps.default_score == "r2":
            if y is None:
                raise FitError(f"{self.kind}.score requires y")
            from .model_selection import score_metric

            return score_metric("r2", np.asarray(y, dtype=np.float64), self.predict(X))
        raise CapabilityError(f"{self.kind} has no default score")


def _normalize_state(value):
    """Force fitted arrays into C-contiguous layout.

    Archived arrays come back contiguous; keeping the in-memory state in
    the same layout makes saved and live models take identical BLAS
    paths, which the bitwise round-trip contract depends on.
    """
    if isinstance(value, np.ndarray):
        return np.ascontiguousarray(value)
    if isinstance(value, (list, tuple)):
        return [_normalize_state(v) for v in value]
    if isinstance(value, dict):
        return {k: _normalize_state(v) for k, v in value.items()}
    return value


def _check_X(X, input_kind: str, allow_empty: bool = False):
    if input_kind == "docs":
        if isinstance(X, (str, bytes)):
            raise FitError("expected a sequence of token sequences, got a single string")
        return list(X)
    if X is None:
        raise FitError("X is required")
    if is_sparse(X):
        X = X.tocsr()
        if not np.all(np.isfinite(X.data)):
            raise FitError("X contains non-finite values")
    else:
        # asanyarray keeps ndarray subclasses alive (instrumented matrices in tests)
        X = np.asanyarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise FitError(f"X must be 2-D, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise FitError("X contains non-finite values")
    if not allow_empty and X.shape[0] == 0:
        raise FitError("X has no rows")
    return X


def _apply_update(handle: EstimatorHandle, key: str, value) -> EstimatorHandle:
    head, sep, rest = key.partition("__")
    defn = _lookup(handle.kind)
    params = dict(handle._params)
    if not sep:
        p = defn.param(head)
        if p is None:
            raise ConstructionError(f"{handle.kind}: unknown parameter {head!r}")
        params[head] = value
        return construct(handle.kind, params)
    # composite path: head is an estimator-valued param or a named list member
    p = defn.param(head)
    if p is not None and isinstance(params.get(head), EstimatorHandle):
        params[head] = _apply_update(params[head], rest, value)
        return construct(handle.kind, params)
    for name, pvalue in params.items():
        if isinstance(pvalue, (list, tuple)):
            items = list(pvalue)
            for i, item in enumerate(items):
                if (
                    isinstance(item, (list, tuple))
                    and len(item) == 2
                    and item[0] == head
                    and isinstance(item[1], EstimatorHandle)
                ):
                    items[i] = (head, _apply_update(item[1], rest, value))
                    params[name] = items
                    return construct(handle.kind, params)
    raise ConstructionError(f"{handle.kind}: cannot resolve parameter path segment {head!r}")


# -- shared schema checks ---------------------------------------------


def check_float(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def check_pos_float(v) -> bool:
    return check_float(v) and v > 0


def check_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def check_bool(v) -> bool:
    return isinstance(v, (bool, np.bool_))


def check_str(v) -> bool:
    return isinstance(v, str)


def one_of(*choices):
    def check(v):
        return v in choices

    return check


def check_named_estimators(v) -> bool:
    if not isinstance(v, (list, tuple)) or not v:
        return False
    for item in v:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            return False
        name, est = item
        if not isinstance(name, str) or not name or "__" in name:
            return False
        if not isinstance(est, EstimatorHandle):
            return False
    names = [item[0] for item in v]
    return len(names) == len(set(names))


def as_float(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def as_int(v):
    if isinstance(v, np.integer):
        return int(v)
    return v


def as_pairs(v):
    if isinstance(v, (list, tuple)):
        return [tuple(item) if isinstance(item, (list, tuple)) else item for item in v]
    return v
