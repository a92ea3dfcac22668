"""Built-in transformer estimators.

StandardScaler, SelectKBest (one-way ANOVA F), PCA, KernelPCA with an
RBF kernel, and a stateless signed-hashing vectorizer. Each is a
registered kind; the capitalized factories return handles.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import FitError
from .estimator import (
    Capabilities,
    EstimatorDef,
    Param,
    as_float,
    as_int,
    check_bool,
    check_int,
    check_pos_float,
    construct,
    one_of,
    register,
)
from .matrix import csr_from_triplets, is_sparse, to_dense

__all__ = [
    "PCA",
    "HashingVectorizer",
    "KernelPCA",
    "SelectKBest",
    "StandardScaler",
    "fnv1a32",
]


def _require_dense(X, kind: str):
    if is_sparse(X):
        raise FitError(f"{kind} requires dense input")
    return np.asarray(X, dtype=np.float64)


def _squared_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(sq, 0.0)


# -- standard scaler ---------------------------------------------------


def _scaler_fit(handle, X, y):
    with_mean = handle._params["with_mean"]
    with_std = handle._params["with_std"]
    n, p = X.shape
    if is_sparse(X):
        if with_mean:
            raise FitError("standard_scaler: centering would densify sparse input; use with_mean=False")
        col_mean = np.asarray(X.sum(axis=0)).ravel() / n
        col_sq = np.asarray(X.multiply(X).sum(axis=0)).ravel() / n
        var = np.maximum(col_sq - col_mean**2, 0.0)
        mean_ = np.zeros(p)
    else:
        col_mean = X.mean(axis=0)
        var = ((X - col_mean) ** 2).mean(axis=0)
        mean_ = col_mean if with_mean else np.zeros(p)
    if with_std:
        scale_ = np.sqrt(var)
        scale_[scale_ == 0.0] = 1.0
    else:
        scale_ = np.ones(p)
    return {"mean_": mean_, "scale_": scale_}


def _scaler_transform(handle, Z):
    mean_ = handle._fitted["mean_"]
    scale_ = handle._fitted["scale_"]
    if is_sparse(Z):
        if handle._params["with_mean"]:
            raise FitError("standard_scaler: centering would densify sparse input; use with_mean=False")
        out = (Z @ sp.diags(1.0 / scale_)).tocsr()
        out.sort_indices()
        return out
    return (np.asarray(Z, dtype=np.float64) - mean_) / scale_


register(
    EstimatorDef(
        kind="standard_scaler",
        schema=(
            Param("with_mean", True, check_bool, "a boolean"),
            Param("with_std", True, check_bool, "a boolean"),
        ),
        capabilities=Capabilities(transformer=True),
        fit=_scaler_fit,
        transform=_scaler_transform,
    )
)


def StandardScaler(**params):
    """Standardize features by stored per-column mean and standard deviation."""
    return construct("standard_scaler", params)


# -- univariate selection by ANOVA F ------------------------------------


def anova_f_scores(X, y: np.ndarray) -> np.ndarray:
    """Per-feature one-way ANOVA F statistic of X columns against class labels.

    Features with zero within-class variance score +inf when the class
    means differ, 0 when the feature is globally constant.
    """
    X = to_dense(X)
    classes = np.unique(y)
    n, _ = X.shape
    k = classes.shape[0]
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        block = X[y == c]
        mu = block.mean(axis=0)
        ss_between += block.shape[0] * (mu - grand) ** 2
        ss_within += ((block - mu) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = ss_between / (k - 1)
        den = ss_within / max(n - k, 1)
        f = num / den
    f[ss_within == 0.0] = np.inf
    f[(ss_within == 0.0) & (ss_between == 0.0)] = 0.0
    return f


def _select_fit(handle, X, y):
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise FitError("select_k_best: need at least two classes")
    scores = anova_f_scores(X, y)
    k = min(handle._params["k"], scores.shape[0])
    order = np.argsort(-scores, kind="stable")  # ties keep the lower feature index
    selected = np.sort(order[:k])
    return {"scores_": scores, "selected_": selected.astype(np.int64)}


def _select_transform(handle, Z):
    sel = handle._fitted["selected_"]
    if is_sparse(Z):
        out = Z[:, sel].tocsr()
        out.sort_indices()
        return out
    return np.asarray(Z, dtype=np.float64)[:, sel]


register(
    EstimatorDef(
        kind="select_k_best",
        schema=(Param("k", 10, lambda v: check_int(v) and v > 0, "a positive integer", as_int),),
        capabilities=Capabilities(transformer=True, supervised=True),
        fit=_select_fit,
        transform=_select_transform,
    )
)


def SelectKBest(**params):
    """Keep the k features with the largest ANOVA F scores."""
    return construct("select_k_best", params)


# -- principal component analysis ---------------------------------------


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its largest-magnitude entry is positive."""
    out = components.copy()
    for row in out:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return out


def _pca_fit(handle, X, y):
    X = _require_dense(X, "pca")
    n, p = X.shape
    if n < 2:
        raise FitError("pca: need at least two samples")
    k = handle._params["n_components"] or min(n, p)
    if k > min(n, p):
        raise FitError(f"pca: n_components={k} exceeds min(n_rows, n_cols)={min(n, p)}")
    mean_ = X.mean(axis=0)
    centered = X - mean_
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components_ = _fix_signs(vt[:k])
    explained_variance_ = (s[:k] ** 2) / (n - 1)
    return {"mean_": mean_, "components_": components_, "explained_variance_": explained_variance_}


def _pca_transform(handle, Z):
    Z = _require_dense(Z, "pca")
    return (Z - handle._fitted["mean_"]) @ handle._fitted["components_"].T


register(
    EstimatorDef(
        kind="pca",
        schema=(Param("n_components", 0, lambda v: check_int(v) and v >= 0, "a non-negative integer (0 keeps all)", as_int),),
        capabilities=Capabilities(transformer=True),
        fit=_pca_fit,
        transform=_pca_transform,
    )
)


def PCA(**params):
    """Project onto the top right-singular vectors of the centered data."""
    return construct("pca", params)


# -- kernel PCA (RBF) ----------------------------------------------------

_EIGENVALUE_CUTOFF = 1e-10  # relative to the largest eigenvalue


def _kpca_fit(handle, X, y):
    X = _require_dense(X, "kernel_pca")
    gamma = handle._params["gamma"]
    n = X.shape[0]
    requested = handle._params["n_components"]
    if requested > n:
        raise FitError(f"kernel_pca: n_components={requested} exceeds n_rows={n}")
    K = np.exp(-gamma * _squared_distances(X, X))
    col_means = K.mean(axis=0)
    grand = K.mean()
    centered = K - col_means[None, :] - col_means[:, None] + grand
    eigvals, eigvecs = np.linalg.eigh(centered)
    order = np.argsort(-eigvals, kind="stable")
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    keep = eigvals > max(_EIGENVALUE_CUTOFF * max(eigvals[0], 0.0), 0.0)
    if not np.any(keep):
        raise FitError("kernel_pca: degenerate kernel, no positive eigenvalues after centering")
    eigvals = eigvals[keep]
    eigvecs = eigvecs[:, keep]
    if requested:
        eigvals = eigvals[:requested]
        eigvecs = eigvecs[:, :requested]
    return {
        "X_fit_": X.copy(),
        "gamma_": float(gamma),
        "alphas_": eigvecs,
        "lambdas_": eigvals,
        "k_col_means_": col_means,
        "k_grand_mean_": float(grand),
    }


def _kpca_transform(handle, Z):
    Z = _require_dense(Z, "kernel_pca")
    st = handle._fitted
    K = np.exp(-st["gamma_"] * _squared_distances(Z, st["X_fit_"]))
    centered = K - K.mean(axis=1)[:, None] - st["k_col_means_"][None, :] + st["k_grand_mean_"]
    return centered @ (st["alphas_"] / np.sqrt(st["lambdas_"]))


register(
    EstimatorDef(
        kind="kernel_pca",
        schema=(
            Param("n_components", 0, lambda v: check_int(v) and v >= 0, "a non-negative integer (0 keeps all)", as_int),
            Param("kernel", "rbf", one_of("rbf"), '"rbf"'),
            Param("gamma", 1.0, check_pos_float, "a positive float", as_float),
        ),
        capabilities=Capabilities(transformer=True),
        fit=_kpca_fit,
        transform=_kpca_transform,
    )
)


def KernelPCA(**params):
    """Kernel PCA with an RBF kernel and double-centered Gram matrix."""
    return construct("kernel_pca", params)


# -- hashing vectorizer ---------------------------------------------------

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


def fnv1a32(data: bytes) -> int:
    """32-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def _hashing_fit(handle, docs, y):
    return {}  # stateless; fit exists for interface uniformity


def _hashing_transform(handle, docs):
    n_features = handle._params["n_features"]
    mask = n_features - 1
    sign_shift = n_features.bit_length() - 1
    accum: dict[tuple[int, int], float] = {}
    for i, doc in enumerate(docs):
        for token in doc:
            h = fnv1a32(str(token).encode("utf-8"))
            bucket = h & mask
            sign = 1.0 if ((h >> sign_shift) & 1) == 0 else -1.0
            key = (i, bucket)
            accum[key] = accum.get(key, 0.0) + sign
    triplets = [(r, c, v) for (r, c), v in accum.items()]
    out = csr_from_triplets(triplets, n_rows=len(docs), n_cols=n_features)
    if handle._params["normalize"]:
        norms = np.sqrt(np.asarray(out.multiply(out).sum(axis=1)).ravel())
        inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        out = (sp.diags(inv) @ out).tocsr()
        out.sort_indices()
    return out


def _power_of_two(v) -> bool:
    return check_int(v) and v >= 2 and (v & (v - 1)) == 0


register(
    EstimatorDef(
        kind="hashing_vectorizer",
        schema=(
            Param("n_features", 2**20, _power_of_two, "a power of two >= 2", as_int),
            Param("normalize", True, check_bool, "a boolean"),
        ),
        capabilities=Capabilities(transformer=True),
        fit=_hashing_fit,
        transform=_hashing_transform,
        input_kind="docs",
    )
)


def HashingVectorizer(**params):
    """Map token sequences into a fixed sparse space via a signed 32-bit hash."""
    return construct("hashing_vectorizer", params)
