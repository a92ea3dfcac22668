"""Golden-fixture generation driven by the pinned reference library.

Each fixture is a self-contained directory: a ``fixture.json`` carrying
the artifact spec, data file names, expected values, and per-field
tolerance metadata, plus the text data files themselves. Everything is
produced deterministically from fixed seeds; a version mismatch against
the pinned reference refuses with a report instead of generating.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from sklearn.cluster import KMeans
from sklearn.decomposition import PCA
from sklearn.feature_selection import SelectKBest, f_classif
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import (
    accuracy_score,
    f1_score,
    mean_squared_error,
    precision_score,
    r2_score,
    recall_score,
    roc_auc_score,
)
from sklearn.model_selection import GridSearchCV, KFold, StratifiedKFold
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC

from .pinned import environment_matches, environment_report, installed_versions

TWO_KERNEL_GRID = [
    {"kernel": ["linear"], "C": [1, 10, 100, 1000]},
    {"kernel": ["rbf"], "C": [1, 10, 100, 1000], "gamma": [0.001, 0.0001]},
]


class ReferenceMismatch(RuntimeError):
    """The installed reference library differs from the pinned versions."""


def _write_csv(path: Path, X: np.ndarray, labels=None, label_column: str = "label") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{i}" for i in range(X.shape[1])]
        if labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for i, row in enumerate(X):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(labels[i]))
            writer.writerow(cells)


def _write_fixture(out_dir: Path, name: str, payload: dict) -> Path:
    fixture_dir = out_dir / name
    fixture_dir.mkdir(parents=True, exist_ok=True)
    payload = {"name": name, **payload}
    with open(fixture_dir / "fixture.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=False)
        fh.write("\n")
    return fixture_dir


def _field(value, tol=None, mode="abs"):
    out = {"value": np.asarray(value).tolist() if isinstance(value, np.ndarray) else value, "mode": mode}
    if tol is not None:
        out["tol"] = tol
    return out


def _two_blobs(seed: int, n_per: int, gap: float, scale: float):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, 2)) * scale
    b = rng.normal(size=(n_per, 2)) * scale + gap
    X = np.empty((2 * n_per, 2))
    X[0::2] = a
    X[1::2] = b
    y = np.empty(2 * n_per, dtype=int)
    y[0::2] = 0
    y[1::2] = 1
    return X, y


# -- individual fixtures -------------------------------------------------


def _fixture_scaler(out: Path):
    rng = np.random.default_rng(101)
    X = np.column_stack(
        [rng.normal(loc=1.0, scale=2.0, size=20), rng.normal(loc=-3.0, scale=0.5, size=20), np.full(20, 7.0)]
    )
    scaler = StandardScaler().fit(X)
    d = _write_fixture(
        out,
        "scaler_state",
        {
            "check": "fit_state",
            "spec": {"estimator": {"kind": "standard_scaler"}},
            "train_data": "train.csv",
            "expected": {
                "fields": {
                    "mean_": _field(scaler.mean_, tol=1e-9),
                    "scale_": _field(scaler.scale_, tol=1e-9),
                }
            },
        },
    )
    _write_csv(d / "train.csv", X)


def _fixture_anova(out: Path):
    rng = np.random.default_rng(102)
    X = rng.normal(size=(18, 4))
    y = np.tile([0, 1, 2], 6)
    X[:, 0] += y * 1.5  # one clearly informative feature
    scores, _ = f_classif(X, y)
    selector = SelectKBest(k=2).fit(X, y)
    selected = np.sort(np.where(selector.get_support())[0])
    d = _write_fixture(
        out,
        "anova_f_state",
        {
            "check": "fit_state",
            "spec": {"estimator": {"kind": "select_k_best", "params": {"k": 2}}},
            "train_data": "train.csv",
            "target_column": "label",
            "expected": {
                "fields": {
                    "scores_": _field(scores, tol=1e-9),
                    "selected_": _field(selected.astype(float), mode="exact"),
                }
            },
        },
    )
    _write_csv(d / "train.csv", X, labels=y)


def _fixture_pca(out: Path):
    rng = np.random.default_rng(103)
    X = rng.normal(size=(15, 4)) * np.array([3.0, 1.0, 0.4, 0.1])
    pca = PCA(n_components=2).fit(X)
    d = _write_fixture(
        out,
        "pca_state",
        {
            "check": "fit_state",
            "spec": {"estimator": {"kind": "pca", "params": {"n_components": 2}}},
            "train_data": "train.csv",
            "expected": {
                "fields": {
                    "mean_": _field(pca.mean_, tol=1e-9),
                    "explained_variance_": _field(pca.explained_variance_, tol=1e-9),
                    "components_": _field(pca.components_, tol=1e-9, mode="abs_sign_rows"),
                }
            },
        },
    )
    _write_csv(d / "train.csv", X)


def _fixture_splits(out: Path):
    # plain k-fold: sizes follow the first-folds-larger rule
    folds = [
        {"train": train.tolist(), "test": test.tolist()}
        for train, test in KFold(n_splits=3).split(np.zeros((10, 1)))
    ]
    _write_fixture(
        out,
        "splits_kfold",
        {
            "check": "splits",
            "splitter": {"scheme": "kfold", "k": 3},
            "n_samples": 10,
            "expected": {"folds": folds},
        },
    )

    # stratified: every class has exactly k members, where the reference's
    # per-class chunking and the artifact's round-robin coincide
    y = np.array([0, 1, 2] * 3)
    folds = [
        {"train": train.tolist(), "test": test.tolist()}
        for train, test in StratifiedKFold(n_splits=3).split(np.zeros((9, 1)), y)
    ]
    _write_fixture(
        out,
        "splits_stratified",
        {
            "check": "splits",
            "splitter": {"scheme": "stratified_kfold", "k": 3},
            "n_samples": 9,
            "y": y.tolist(),
            "note": "class counts equal k: chunked and round-robin assignment coincide",
            "expected": {"folds": folds},
        },
    )


def _fixture_metrics(out: Path):
    y_true = np.array([1, 1, 1, 0, 0, 0, 1, 0])
    y_pred = np.array([1, 0, 1, 1, 0, 0, 1, 0])
    scores = np.array([0.9, 0.4, 0.7, 0.6, 0.2, 0.4, 0.8, 0.1])
    y_reg = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    y_reg_hat = np.array([1.1, 1.9, 3.2, 3.8, 5.1])
    cases = {
        "accuracy": {"y_true": y_true.tolist(), "y_pred": y_pred.tolist(), "value": float(accuracy_score(y_true, y_pred))},
        "precision": {"y_true": y_true.tolist(), "y_pred": y_pred.tolist(), "value": float(precision_score(y_true, y_pred))},
        "recall": {"y_true": y_true.tolist(), "y_pred": y_pred.tolist(), "value": float(recall_score(y_true, y_pred))},
        "f1": {"y_true": y_true.tolist(), "y_pred": y_pred.tolist(), "value": float(f1_score(y_true, y_pred))},
        "roc_auc": {"y_true": y_true.tolist(), "y_pred": scores.tolist(), "value": float(roc_auc_score(y_true, scores))},
        "r2": {"y_true": y_reg.tolist(), "y_pred": y_reg_hat.tolist(), "value": float(r2_score(y_reg, y_reg_hat))},
        "neg_mean_squared_error": {
            "y_true": y_reg.tolist(),
            "y_pred": y_reg_hat.tolist(),
            "value": float(-mean_squared_error(y_reg, y_reg_hat)),
        },
    }
    _write_fixture(
        out,
        "metric_values",
        {"check": "metrics", "tol": 1e-9, "expected": {"metrics": cases}},
    )


def _fixture_grid_search(out: Path):
    X, y = _two_blobs(seed=3, n_per=15, gap=60.0, scale=24.0)
    search = GridSearchCV(SVC(), TWO_KERNEL_GRID, scoring="f1", cv=KFold(n_splits=5))
    search.fit(X, y)
    results = search.cv_results_
    candidates = []
    n_folds = 5
    for idx, params in enumerate(results["params"]):
        folds = [float(results[f"split{i}_test_score"][idx]) for i in range(n_folds)]
        candidates.append(
            {
                "params": {k: (v if isinstance(v, str) else float(v)) for k, v in params.items()},
                "fold_scores": folds,
                "mean_score": float(results["mean_test_score"][idx]),
            }
        )
    d = _write_fixture(
        out,
        "grid_search_svc",
        {
            "check": "search_report",
            "spec": {
                "search": {
                    "type": "grid",
                    "estimator": {"kind": "svc"},
                    "grid": TWO_KERNEL_GRID,
                    "scoring": "f1",
                    "cv": {"scheme": "kfold", "k": 5},
                    "refit": True,
                }
            },
            "train_data": "train.csv",
            "target_column": "label",
            "tol": 1e-12,
            "expected": {"candidates": candidates},
        },
    )
    _write_csv(d / "train.csv", X, labels=y)


def _objective_l2(X, y01, coef, intercept, C):
    """0.5*||w||^2 + C * sum log(1 + exp(-s * (Xw + b))); the reference parameterization."""
    s = np.where(np.asarray(y01) == 1, 1.0, -1.0)
    z = X @ np.asarray(coef) + intercept
    return 0.5 * float(np.dot(coef, coef)) + C * float(np.logaddexp(0.0, -s * z).sum())


def _fixture_logistic_pipeline(out: Path):
    X, y = _two_blobs(seed=7, n_per=15, gap=9.0, scale=3.0)
    X_test, _ = _two_blobs(seed=8, n_per=10, gap=9.0, scale=3.0)
    names = ["neg", "pos"]
    labels = [names[v] for v in y]

    scaler = StandardScaler().fit(X)
    Xs = scaler.transform(X)
    clf = LogisticRegression(penalty="l2", C=1.0, tol=1e-10, max_iter=10_000).fit(Xs, y)
    pred = clf.predict(scaler.transform(X_test))
    objective = _objective_l2(Xs, y, clf.coef_[0], float(clf.intercept_[0]), 1.0)

    d = _write_fixture(
        out,
        "logistic_pipeline",
        {
            "check": "logistic_pipeline",
            "spec": {
                "estimator": {
                    "kind": "pipeline",
                    "params": {
                        "steps": [
                            ["scaler", {"kind": "standard_scaler"}],
                            ["clf", {"kind": "logistic_regression", "params": {"penalty": "l2", "C": 1.0}}],
                        ]
                    },
                }
            },
            "train_data": "train.csv",
            "target_column": "label",
            "test_data": "test.csv",
            "expected": {
                "predictions": [names[v] for v in pred],
                "objective": {"value": objective, "tol": 1e-4, "mode": "rel", "C": 1.0},
            },
        },
    )
    _write_csv(d / "train.csv", X, labels=labels)
    _write_csv(d / "test.csv", X_test)


def _fixture_kmeans(out: Path):
    rng = np.random.default_rng(105)
    X = np.vstack([rng.normal(size=(12, 2)) + center for center in [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)]])
    km = KMeans(n_clusters=3, n_init=10, random_state=0).fit(X)
    d = _write_fixture(
        out,
        "kmeans_inertia",
        {
            "check": "fit_state",
            "spec": {"estimator": {"kind": "kmeans", "params": {"n_clusters": 3}}},
            "train_data": "train.csv",
            "expected": {"fields": {"inertia_": _field(float(km.inertia_), tol=1e-4, mode="rel")}},
        },
    )
    _write_csv(d / "train.csv", X)


_BUILDERS = (
    _fixture_scaler,
    _fixture_anova,
    _fixture_pca,
    _fixture_splits,
    _fixture_metrics,
    _fixture_grid_search,
    _fixture_logistic_pipeline,
    _fixture_kmeans,
)


def generate_fixtures(out_dir) -> list[str]:
    """Generate every fixture under ``out_dir``; refuse on version mismatch."""
    if not environment_matches():
        raise ReferenceMismatch(environment_report())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "versions.json", "w") as fh:
        json.dump(installed_versions(), fh, indent=1)
        fh.write("\n")
    for builder in _BUILDERS:
        builder(out)
    return sorted(p.name for p in out.iterdir() if p.is_dir())
