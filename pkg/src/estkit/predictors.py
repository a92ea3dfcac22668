"""Built-in predictor estimators.

Logistic regression (l1 via proximal gradient, l2 via gradient descent
with backtracking line search), a soft-margin SVM trained by sequential
minimal optimization, and k-means with k-means++ seeding and Lloyd
iterations. All are registered kinds; the factories return handles.
"""

from __future__ import annotations

import numpy as np

from .errors import FitError
from .estimator import (
    Capabilities,
    EstimatorDef,
    Param,
    as_float,
    as_int,
    check_int,
    check_pos_float,
    construct,
    one_of,
    register,
)
from .matrix import is_sparse, to_dense

__all__ = ["KMeans", "LogisticRegression", "SVC"]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _class_vector(y: np.ndarray) -> np.ndarray:
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise FitError("need at least two classes in y")
    return classes


# -- logistic regression -------------------------------------------------


def logistic_smooth(X, s: np.ndarray, theta: np.ndarray, C: float) -> tuple[float, np.ndarray]:
    """Value and gradient of the data term C * sum log(1 + exp(-s*(Xw + b))).

    ``theta`` stacks the weights and the unpenalized intercept last.
    """
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    m = -s * z
    loss = C * float(np.logaddexp(0.0, m).sum())
    gz = C * (-s * _sigmoid(m))
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ gz
    grad[-1] = gz.sum()
    return loss, grad


def _solve_logistic_l2(X, s, C, tol, max_iter):
    """Gradient descent with Armijo backtracking on 0.5*||w||^2 + C*loss."""

    def full(theta):
        loss, grad = logistic_smooth(X, s, theta, C)
        w = theta[:-1]
        loss += 0.5 * float(w @ w)
        grad = grad.copy()
        grad[:-1] += w
        return loss, grad

    theta = np.zeros(X.shape[1] + 1)
    value, grad = full(theta)
    history = [value]
    eta = 1.0
    for _ in range(max_iter):
        if np.max(np.abs(grad)) < tol:
            break
        g2 = float(grad @ grad)
        eta = min(eta * 2.0, 1e8)
        while True:
            cand = theta - eta * grad
            cand_value, cand_grad = full(cand)
            if cand_value <= value - 1e-4 * eta * g2:
                break
            eta *= 0.5
            if eta < 1e-14:
                cand = None
                break
        if cand is None:
            break
        theta, value, grad = cand, cand_value, cand_grad
        history.append(value)
    return theta[:-1], theta[-1], history


def _solve_logistic_l1(X, s, C, tol, max_iter):
    """Proximal gradient (ISTA with backtracking) on ||w||_1 + C*loss."""

    def objective(theta, smooth=None):
        if smooth is None:
            smooth = logistic_smooth(X, s, theta, C)[0]
        return smooth + float(np.abs(theta[:-1]).sum())

    theta = np.zeros(X.shape[1] + 1)
    smooth, grad = logistic_smooth(X, s, theta, C)
    history = [objective(theta, smooth)]
    eta = 1.0
    for _ in range(max_iter):
        eta = min(eta * 2.0, 1e8)
        while True:
            z = theta - eta * grad
            cand = z.copy()
            cand[:-1] = np.sign(z[:-1]) * np.maximum(np.abs(z[:-1]) - eta, 0.0)
            diff = cand - theta
            cand_smooth, cand_grad = logistic_smooth(X, s, cand, C)
            bound = smooth + float(grad @ diff) + float(diff @ diff) / (2.0 * eta)
            if cand_smooth <= bound:
                break
            eta *= 0.5
            if eta < 1e-14:
                cand = None
                break
        if cand is None:
            break
        step = float(np.max(np.abs(cand - theta)))
        theta, smooth, grad = cand, cand_smooth, cand_grad
        history.append(objective(theta, smooth))
        if step < tol:
            break
    return theta[:-1], theta[-1], history


def _solve_binary(X, s, penalty, C, tol, max_iter):
    solver = _solve_logistic_l1 if penalty == "l1" else _solve_logistic_l2
    w, b, _ = solver(X, s, C, tol, max_iter)
    return w, b


def _logistic_fit(handle, X, y):
    params = handle._params
    classes = _class_vector(y)
    rows = []
    intercepts = []
    if classes.shape[0] == 2:
        s = np.where(y == classes[1], 1.0, -1.0)
        w, b = _solve_binary(X, s, params["penalty"], params["C"], params["tol"], params["max_iter"])
        rows.append(w)
        intercepts.append(b)
    else:
        for c in classes:  # one-vs-rest over the sorted classes
            s = np.where(y == c, 1.0, -1.0)
            w, b = _solve_binary(X, s, params["penalty"], params["C"], params["tol"], params["max_iter"])
            rows.append(w)
            intercepts.append(b)
    return {
        "coef_": np.vstack(rows),
        "intercept_": np.asarray(intercepts, dtype=np.float64),
        "classes_": classes,
    }


def _logistic_decision(handle, Z):
    st = handle._fitted
    scores = Z @ st["coef_"].T + st["intercept_"]
    scores = np.asarray(scores, dtype=np.float64)
    if st["classes_"].shape[0] == 2:
        return scores[:, 0]
    return scores


def _logistic_predict(handle, Z):
    st = handle._fitted
    scores = _logistic_decision(handle, Z)
    if scores.ndim == 1:
        return st["classes_"][(scores > 0).astype(np.int64)]
    return st["classes_"][np.argmax(scores, axis=1)]


def _logistic_proba(handle, Z):
    st = handle._fitted
    scores = _logistic_decision(handle, Z)
    if scores.ndim == 1:
        p1 = _sigmoid(scores)
        return np.column_stack([1.0 - p1, p1])
    p = _sigmoid(scores)
    return p / p.sum(axis=1, keepdims=True)


register(
    EstimatorDef(
        kind="logistic_regression",
        schema=(
            Param("penalty", "l2", one_of("l1", "l2"), '"l1" or "l2"'),
            Param("C", 1.0, check_pos_float, "a positive float", as_float),
            Param("tol", 1e-6, check_pos_float, "a positive float", as_float),
            Param("max_iter", 1000, lambda v: check_int(v) and v > 0, "a positive integer", as_int),
        ),
        capabilities=Capabilities(
            predictor=True,
            probabilistic=True,
            decision_function=True,
            supervised=True,
            default_score="accuracy",
        ),
        fit=_logistic_fit,
        predict=_logistic_predict,
        predict_proba=_logistic_proba,
        decision_function=_logistic_decision,
    )
)


def LogisticRegression(**params):
    """Regularized logistic regression; multiclass is handled one-vs-rest."""
    return construct("logistic_regression", params)


# -- support vector classifier (SMO) --------------------------------------

_SMO_TOL = 1e-3
_SMO_MAX_QUIET_SWEEPS = 5
_SMO_SWEEP_CAP = 10000


def _svm_kernel(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T  # gamma is accepted but ignored
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _smo(K: np.ndarray, s: np.ndarray, C: float, rng: np.random.Generator):
    """Pairwise dual ascent: pick a KKT violator, pair it, update both alphas.

    The decision-value cache is updated incrementally per alpha step and
    refreshed from scratch once per sweep to keep drift out.
    """
    n = s.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    fcache = np.full(n, b)

    def try_update(i: int, j: int) -> bool:
        nonlocal b, fcache
        if i == j:
            return False
        e_i = fcache[i] - s[i]
        e_j = fcache[j] - s[j]
        ai, aj = alpha[i], alpha[j]
        if s[i] == s[j]:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        else:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        if hi - lo < 1e-12:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 0:
            return False
        aj_new = np.clip(aj + s[j] * (e_i - e_j) / eta, lo, hi)
        if abs(aj_new - aj) < 1e-8 * (aj_new + aj + 1e-8):
            return False
        ai_new = ai + s[i] * s[j] * (aj - aj_new)
        b1 = b - e_i - s[i] * (ai_new - ai) * K[i, i] - s[j] * (aj_new - aj) * K[i, j]
        b2 = b - e_j - s[i] * (ai_new - ai) * K[i, j] - s[j] * (aj_new - aj) * K[j, j]
        if 0.0 < ai_new < C:
            b_new = b1
        elif 0.0 < aj_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        fcache += (
            s[i] * (ai_new - ai) * K[:, i] + s[j] * (aj_new - aj) * K[:, j] + (b_new - b)
        )
        alpha[i], alpha[j] = ai_new, aj_new
        b = b_new
        return True

    quiet = 0
    sweeps = 0
    while quiet < _SMO_MAX_QUIET_SWEEPS and sweeps < _SMO_SWEEP_CAP:
        fcache = K @ (alpha * s) + b
        changed = 0
        for i in range(n):
            r = s[i] * (fcache[i] - s[i])
            if not ((r < -_SMO_TOL and alpha[i] < C) or (r > _SMO_TOL and alpha[i] > 0)):
                continue
            non_bound = np.where((alpha > 0) & (alpha < C))[0]
            candidates: list[int] = []
            if non_bound.size:
                errors = np.abs((fcache[i] - s[i]) - (fcache[non_bound] - s[non_bound]))
                candidates.append(int(non_bound[int(np.argmax(errors))]))
                rest = [int(j) for j in rng.permutation(non_bound) if int(j) not in candidates]
                candidates.extend(rest)
            candidates.extend(int(j) for j in rng.permutation(n) if int(j) not in candidates)
            for j in candidates:
                if try_update(i, j):
                    changed += 1
                    break
        sweeps += 1
        quiet = quiet + 1 if changed == 0 else 0
    return alpha, b


def _svc_fit(handle, X, y):
    params = handle._params
    classes = _class_vector(y)
    if classes.shape[0] != 2:
        raise FitError("svc is binary; wrap it in a multiclass meta-estimator")
    Xd = to_dense(X)
    s = np.where(y == classes[1], 1.0, -1.0)
    K = _svm_kernel(Xd, Xd, params["kernel"], params["gamma"])
    rng = np.random.default_rng(params["random_seed"])
    alpha, b = _smo(K, s, params["C"], rng)
    mask = alpha > 1e-12
    return {
        "support_vectors_": Xd[mask],
        "dual_coef_": (alpha * s)[mask],
        "intercept_": float(b),
        "classes_": classes,
        "gamma_": float(params["gamma"]),
    }


def _svc_decision(handle, Z):
    st = handle._fitted
    K = _svm_kernel(to_dense(Z), st["support_vectors_"], handle._params["kernel"], st["gamma_"])
    return K @ st["dual_coef_"] + st["intercept_"]


def _svc_predict(handle, Z):
    st = handle._fitted
    return st["classes_"][(_svc_decision(handle, Z) > 0).astype(np.int64)]


register(
    EstimatorDef(
        kind="svc",
        schema=(
            Param("kernel", "rbf", one_of("linear", "rbf"), '"linear" or "rbf"'),
            Param("C", 1.0, check_pos_float, "a positive float", as_float),
            Param("gamma", 1.0, check_pos_float, "a positive float", as_float),
            Param("random_seed", 0, check_int, "an integer", as_int),
        ),
        capabilities=Capabilities(
            predictor=True,
            decision_function=True,
            supervised=True,
            default_score="accuracy",
        ),
        fit=_svc_fit,
        predict=_svc_predict,
        decision_function=_svc_decision,
    )
)


def SVC(**params):
    """Binary soft-margin SVM trained by sequential minimal optimization."""
    return construct("svc", params)


# -- k-means ---------------------------------------------------------------


def _point_center_sq(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2 sampling from the running nearest-center distances."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for m in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))  # all mass used up (duplicate points)
        centers[m] = X[idx]
        d2 = np.minimum(d2, ((X - centers[m]) ** 2).sum(axis=1))
    return centers


def lloyd_iterations(X: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    """Run Lloyd updates; returns (centers, labels, inertia, n_iter, inertia history)."""
    n = X.shape[0]
    k = centers.shape[0]
    history = []
    n_iter = 0
    for it in range(max_iter):
        d2 = _point_center_sq(X, centers)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), labels].sum()))
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                new_centers[c] = X[labels == c].mean(axis=0)
        empties = np.where(counts == 0)[0]
        if empties.size:  # relocate unused centers onto the worst-served points
            far_order = np.argsort(-d2[np.arange(n), labels], kind="stable")
            for rank, c in enumerate(empties):
                new_centers[c] = X[far_order[rank % n]]
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        n_iter = it + 1
        if shift < tol:
            break
    d2 = _point_center_sq(X, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    history.append(inertia)
    return centers, labels, inertia, n_iter, history


def _kmeans_fit(handle, X, y):
    params = handle._params
    X = to_dense(X)
    k = params["n_clusters"]
    if k > X.shape[0]:
        raise FitError(f"kmeans: n_clusters={k} exceeds n_samples={X.shape[0]}")
    rng = np.random.default_rng(params["random_seed"])
    best = None
    for _ in range(params["n_init"]):
        init = _kmeans_pp_init(X, k, rng)
        centers, _, inertia, n_iter, _ = lloyd_iterations(X, init, params["max_iter"], params["tol"])
        if best is None or inertia < best[1]:  # strict: ties keep the earliest restart
            best = (centers, inertia, n_iter)
    centers, inertia, n_iter = best
    return {"cluster_centers_": centers, "inertia_": inertia, "n_iter_": int(n_iter)}


def _kmeans_predict(handle, Z):
    d2 = _point_center_sq(to_dense(Z), handle._fitted["cluster_centers_"])
    return np.argmin(d2, axis=1).astype(np.int64)


def _kmeans_score(handle, Z, y=None):
    d2 = _point_center_sq(to_dense(Z), handle._fitted["cluster_centers_"])
    return -float(d2.min(axis=1).sum())


register(
    EstimatorDef(
        kind="kmeans",
        schema=(
            Param("n_clusters", 8, lambda v: check_int(v) and v >= 1, "a positive integer", as_int),
            Param("n_init", 10, lambda v: check_int(v) and v >= 1, "a positive integer", as_int),
            Param("max_iter", 300, lambda v: check_int(v) and v >= 1, "a positive integer", as_int),
            Param("tol", 1e-6, check_pos_float, "a positive float", as_float),
            Param("random_seed", 0, check_int, "an integer", as_int),
        ),
        capabilities=Capabilities(predictor=True, default_score="neg_inertia"),
        fit=_kmeans_fit,
        predict=_kmeans_predict,
        score=_kmeans_score,
    )
)


def KMeans(**params):
    """k-means clustering: k-means++ seeding, Lloyd iterations, restart selection."""
    return construct("kmeans", params)
