"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
report lines.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

import estkit as ek
from estkit import (
    Capabilities,
    EstimatorDef,
    KFold,
    Param,
    audit_registry,
    clone,
    expand_grid,
    sample_params,
    split,
    to_dense,
)
from estkit.model_selection import LogUniform, roc_auc
from estkit.predictors import _solve_logistic_l1, _solve_logistic_l2, lloyd_iterations, logistic_smooth


@contextmanager
def _criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def _two_blobs(rng, per=15, gap=4.0, width=2):
    X = np.vstack([rng.normal(size=(per, width)) * 0.5, rng.normal(size=(per, width)) * 0.5 + gap])
    y = np.repeat([0.0, 1.0], per)
    order = rng.permutation(2 * per)
    return X[order], y[order]


def _k_blobs(rng, k, per=4):
    angles = np.linspace(0, 2 * np.pi, k, endpoint=False)
    centers = np.column_stack([np.cos(angles), np.sin(angles)]) * 6.0
    X = np.vstack([rng.normal(size=(per, 2)) * 0.25 + c for c in centers])
    y = np.repeat(np.arange(k, dtype=float), per)
    return X, y


# ---------------------------------------------------------------------------


def test_workflow_parity():
    """Every showcase workflow translates directly and runs end to end in < 60 s."""
    started = time.monotonic()
    with _criterion("workflow parity: all five workflows, 12 grid candidates, K(K-1)/2 wrappers"):
        rng = np.random.default_rng(0)
        X_train, y_train = _two_blobs(rng, per=15)
        X_test, _ = _two_blobs(rng, per=5)

        # initialize-then-fit with an overridden hyper-parameter
        clf = ek.LogisticRegression(penalty="l1")
        clf.fit(X_train, y_train)

        # predictions on unseen data, and an unsupervised predictor
        y_pred = clf.predict(X_test)
        assert y_pred.shape == (10,)
        km = ek.KMeans(n_clusters=10)
        km.fit(X_train)
        clust_pred = km.predict(X_test)
        assert clust_pred.shape == (10,) and clust_pred.dtype.kind == "i"

        # scaler: fit, transform train and test, and the one-line chain
        scaler = ek.StandardScaler()
        scaler.fit(X_train)
        X_train_scaled = scaler.transform(X_train)
        X_test_scaled = scaler.transform(X_test)
        assert X_test_scaled.shape == X_test.shape
        chained = ek.StandardScaler().fit(X_train).transform(X_train)
        np.testing.assert_array_equal(chained, X_train_scaled)

        # one-vs-one wrapper produces exactly K(K-1)/2 inner estimators
        for k, expected in ((2, 1), (3, 3), (10, 45)):
            Xk, yk = _k_blobs(rng, k)
            ovo_lr = ek.OneVsOneClassifier(ek.LogisticRegression(penalty="l1"))
            ovo_lr.fit(Xk, yk)
            assert len(ovo_lr.estimators_) == expected

        # union + pipeline workflow, fitted and chained into predict
        union = ek.FeatureUnion([("pca", ek.PCA()), ("kpca", ek.KernelPCA(kernel="rbf"))])
        prediction = (
            ek.Pipeline(
                [
                    ("feat_union", union),
                    ("feat_sel", ek.SelectKBest(k=10)),
                    ("log_reg", ek.LogisticRegression(penalty="l2")),
                ]
            )
            .fit(X_train, y_train)
            .predict(X_test)
        )
        assert prediction.shape == (10,)

        # the two-sub-grid SVC search with f1 scoring and 10-fold CV
        param_grid = [
            {"kernel": ["linear"], "C": [1, 10, 100, 1000]},
            {"kernel": ["rbf"], "C": [1, 10, 100, 1000], "gamma": [0.001, 0.0001]},
        ]
        search = ek.GridSearchCV(ek.SVC(), param_grid, scoring="f1", cv=10)
        search.fit(X_train, y_train)
        assert len(search.candidates_) == 12
        assert search.mean_scores_.shape == (12,)
        assert search.predict(X_test).shape == (10,)

        elapsed = time.monotonic() - started
        assert elapsed < 60.0, f"snippets took {elapsed:.1f}s"


# ---------------------------------------------------------------------------


def _random_case(kind, rng):
    """A valid (handle, X, y) triple for the kind, randomized by ``rng``."""
    n = int(rng.integers(10, 16))
    X = rng.normal(size=(n, 4))
    y = rng.integers(0, 2, size=n).astype(float)
    y[:2] = [0.0, 1.0]
    docs = [[f"t{int(t)}" for t in rng.integers(0, 40, size=int(rng.integers(1, 6)))] for _ in range(n)]
    seed = int(rng.integers(0, 1000))
    if kind == "standard_scaler":
        return ek.StandardScaler(with_mean=bool(rng.integers(2))), X, None
    if kind == "select_k_best":
        return ek.SelectKBest(k=int(rng.integers(1, 5))), X, y
    if kind == "pca":
        return ek.PCA(n_components=int(rng.integers(1, 4))), X, None
    if kind == "kernel_pca":
        return ek.KernelPCA(gamma=float(rng.uniform(0.2, 2.0))), X, None
    if kind == "hashing_vectorizer":
        return ek.HashingVectorizer(n_features=int(2 ** rng.integers(4, 7))), docs, None
    if kind == "logistic_regression":
        penalty = "l1" if rng.integers(2) else "l2"
        return ek.LogisticRegression(penalty=penalty, C=float(rng.uniform(0.2, 5.0))), X, y
    if kind == "svc":
        kernel = "linear" if rng.integers(2) else "rbf"
        return ek.SVC(kernel=kernel, C=float(rng.uniform(0.5, 5.0)), gamma=float(rng.uniform(0.3, 2.0)), random_seed=seed), X, y
    if kind == "kmeans":
        return ek.KMeans(n_clusters=int(rng.integers(1, 4)), n_init=2, random_seed=seed), X, None
    if kind == "pipeline":
        return (
            ek.Pipeline([("s", ek.StandardScaler()), ("c", ek.LogisticRegression(C=float(rng.uniform(0.5, 2.0))))]),
            X,
            y,
        )
    if kind == "feature_union":
        return (
            ek.FeatureUnion([("p", ek.PCA(n_components=2)), ("s", ek.StandardScaler())]),
            X,
            None,
        )
    if kind == "one_vs_one":
        Xk, yk = _k_blobs(rng, 3, per=4)
        return ek.OneVsOneClassifier(ek.LogisticRegression()), Xk, yk
    if kind == "one_vs_rest":
        Xk, yk = _k_blobs(rng, 3, per=4)
        return ek.OneVsRestClassifier(ek.LogisticRegression()), Xk, yk
    if kind == "grid_search":
        return (
            ek.GridSearchCV(ek.LogisticRegression(), {"C": [0.5, 2.0]}, cv=KFold(n_splits=2)),
            X,
            y,
        )
    if kind == "randomized_search":
        return (
            ek.RandomizedSearchCV(
                ek.LogisticRegression(), {"C": LogUniform(0.1, 10.0)}, n_iter=2, cv=KFold(n_splits=2), random_seed=seed
            ),
            X,
            y,
        )
    raise AssertionError(f"no case builder for {kind}")


_ABSURD_OVERRIDES = {
    "standard_scaler": {"with_mean": False},
    "select_k_best": {"k": 10**9},
    "pca": {"n_components": 10**9},
    "kernel_pca": {"gamma": 1e12, "n_components": 10**9},
    "hashing_vectorizer": {"n_features": 2**30},
    "logistic_regression": {"C": 1e15, "max_iter": 10**9},
    "svc": {"C": 1e15, "gamma": 1e12},
    "kmeans": {"n_clusters": 10**9, "n_init": 10**6},
    "grid_search": {"param_grid": {"C": [1e-12, 1e12]}},
    "randomized_search": {"n_iter": 10**6},
}


def test_contract_suite():
    """fit-returns-receiver, fused-call equivalence, clone, constructor purity."""
    with _criterion("contract suite: 100+ random cases over every registered kind"):
        kinds = [k for k in ek.registered_kinds()]
        assert len(kinds) == 14
        cases = 0
        rng = np.random.default_rng(99)
        for kind in kinds:
            for _ in range(8):
                est, X, y = _random_case(kind, rng)
                caps = est.capabilities

                # constructor purity: well-typed absurd values construct fine
                if kind in _ABSURD_OVERRIDES:
                    absurd = ek.construct(kind, {**est.get_params(), **_ABSURD_OVERRIDES[kind]})
                    assert not absurd.is_fitted

                # fit returns its receiver
                fitted = est.fit(X, y)
                assert fitted is est
                assert est.is_fitted

                # every learned attribute carries the trailing underscore
                assert all(name.endswith("_") for name in est.fitted)

                # clone never copies fitted state, params stay equal
                copy = clone(est)
                assert not copy.is_fitted
                assert ek.params_equal(copy.get_params(deep=True), est.get_params(deep=True))

                # fit_transform == fit; transform (bitwise)
                if caps.transformer:
                    a = clone(est).fit_transform(X, y)
                    b = clone(est).fit(X, y).transform(X)
                    np.testing.assert_array_equal(to_dense(a), to_dense(b))

                # fit_predict == fit; predict (bitwise)
                if kind == "kmeans":
                    a = clone(est).fit_predict(X, y)
                    b = clone(est).fit(X, y).predict(X)
                    np.testing.assert_array_equal(a, b)
                cases += 1
        assert cases >= 100


# ---------------------------------------------------------------------------


def test_oracle_equivalence():
    """Search means, pipeline composition, and AUC match independent oracles."""
    with _criterion("oracle equivalence: nested-loop search, hand-rolled pipeline, AUC pair counting"):
        rng = np.random.default_rng(7)

        # grid search vs an independently coded double loop, exact equality
        X, y = _two_blobs(rng, per=12)
        grid = [{"penalty": ["l1", "l2"], "C": [0.5, 1.0, 2.0]}]
        cv = KFold(n_splits=4)
        search = ek.GridSearchCV(ek.LogisticRegression(), grid, scoring="accuracy", cv=cv)
        search.fit(X, y)
        candidates = expand_grid(grid)
        folds = split(cv, X.shape[0], y)
        oracle = np.empty((len(candidates), len(folds)))
        for ci, cand in enumerate(candidates):
            for fi, (train, test) in enumerate(folds):
                est = ek.LogisticRegression(**cand).fit(X[train], y[train])
                oracle[ci, fi] = float(np.mean(est.predict(X[test]) == y[test]))
        np.testing.assert_array_equal(search.mean_scores_, oracle.mean(axis=1))
        np.testing.assert_array_equal(search.fold_scores_, oracle)

        # pipeline equals the hand-rolled sequence bitwise
        Z = rng.normal(size=(15, 2)) * 3
        pipe = ek.Pipeline(
            [("scaler", ek.StandardScaler()), ("pca", ek.PCA(n_components=2)), ("clf", ek.LogisticRegression())]
        ).fit(X, y)
        scaler = ek.StandardScaler()
        Xs = scaler.fit_transform(X)
        pca = ek.PCA(n_components=2)
        Xp = pca.fit_transform(Xs)
        clf = ek.LogisticRegression().fit(Xp, y)
        np.testing.assert_array_equal(pipe.predict(Z), clf.predict(pca.transform(scaler.transform(Z))))
        np.testing.assert_array_equal(
            pipe.decision_function(Z), clf.decision_function(pca.transform(scaler.transform(Z)))
        )

        # ROC AUC equals O(n^2) pair counting on 200 random instances
        for _ in range(200):
            n = int(rng.integers(2, 51))
            labels = rng.integers(0, 2, size=n).astype(float)
            if labels.min() == labels.max():
                labels[0] = 1.0 - labels[0]
            scores = np.round(rng.normal(size=n), 1)
            pos = scores[labels == 1]
            neg = scores[labels != 1]
            correct = sum(1.0 for p in pos for q in neg if p > q)
            ties = sum(1.0 for p in pos for q in neg if p == q)
            expected = (correct + 0.5 * ties) / (len(pos) * len(neg))
            assert abs(roc_auc(labels, scores) - expected) == 0.0


# ---------------------------------------------------------------------------


def test_numerical_checks():
    """Gradients, KKT conditions, Lloyd monotonicity, scaler and PCA accounting."""
    with _criterion("numerical checks: gradients 1e-5, KKT 1e-3, Lloyd monotone, scaler 1e-9, PCA 1e-8"):
        rng = np.random.default_rng(17)

        # logistic gradient vs central finite differences, 10 random points
        X = rng.normal(size=(15, 4))
        s = np.where(rng.random(15) > 0.5, 1.0, -1.0)
        C = 1.7
        for _ in range(10):
            theta = rng.normal(size=5)
            _, grad = logistic_smooth(X, s, theta, C)
            grad = grad.copy()
            grad[:-1] += theta[:-1]  # l2 penalty term on the smooth path
            numeric = np.zeros(5)
            for i in range(5):
                e = np.zeros(5)
                e[i] = 1e-6
                hi = logistic_smooth(X, s, theta + e, C)[0] + 0.5 * ((theta + e)[:-1] ** 2).sum()
                lo = logistic_smooth(X, s, theta - e, C)[0] + 0.5 * ((theta - e)[:-1] ** 2).sum()
                numeric[i] = (hi - lo) / 2e-6
            rel = np.abs(grad - numeric) / np.maximum(np.abs(numeric), 1e-8)
            assert rel.max() <= 1e-5

        # SMO KKT conditions on 20 random small problems
        for trial in range(20):
            n = int(rng.integers(8, 17))
            Xr = rng.normal(size=(n, 2))
            yr = rng.integers(0, 2, size=n).astype(float)
            if yr.min() == yr.max():
                yr[0] = 1.0 - yr[0]
            Cr = float(rng.choice([0.5, 1.0, 10.0]))
            clf = ek.SVC(kernel="rbf", gamma=float(rng.uniform(0.4, 2.0)), C=Cr, random_seed=trial).fit(Xr, yr)
            margins = np.where(yr == 1.0, 1.0, -1.0) * clf.decision_function(Xr)
            alpha = np.zeros(n)
            for value, row in zip(clf.dual_coef_, clf.support_vectors_):
                alpha[int(np.where((Xr == row).all(axis=1))[0][0])] = abs(value)
            for i in range(n):
                if alpha[i] < 1e-12:
                    assert margins[i] >= 1.0 - 1e-3
                elif alpha[i] > Cr - 1e-12:
                    assert margins[i] <= 1.0 + 1e-3
                else:
                    assert abs(margins[i] - 1.0) <= 1e-3

        # Lloyd inertia monotone non-increasing on every run
        for _ in range(10):
            Xk = rng.normal(size=(30, 3))
            init = Xk[rng.choice(30, size=4, replace=False)].copy()
            _, _, final, _, history = lloyd_iterations(Xk, init, 300, 1e-6)
            assert np.all(np.diff(history) <= 0)
            assert final <= history[0]

        # logistic objective decreases monotonically, both penalties
        s2 = np.where(X[:, 0] > 0, 1.0, -1.0)
        for solver in (_solve_logistic_l2, _solve_logistic_l1):
            _, _, history = solver(X, s2, 1.0, 1e-6, 500)
            assert np.all(np.diff(history) <= 0)

        # scaler statistics within 1e-9
        Xs = rng.normal(loc=5.0, scale=3.0, size=(40, 5))
        out = ek.StandardScaler().fit_transform(Xs)
        assert np.abs(out.mean(axis=0)).max() <= 1e-9
        assert np.abs(out.std(axis=0) - 1.0).max() <= 1e-9

        # PCA orthonormality and variance bookkeeping within 1e-8
        Xp = rng.normal(size=(20, 6)) * np.array([3.0, 2.0, 1.0, 0.5, 0.2, 0.1])
        pca = ek.PCA().fit(Xp)
        gram = pca.components_ @ pca.components_.T
        assert np.abs(gram - np.eye(gram.shape[0])).max() <= 1e-8
        centered = Xp - Xp.mean(axis=0)
        total = (centered**2).sum() / (Xp.shape[0] - 1)
        assert abs(pca.explained_variance_.sum() - total) <= 1e-8


# ---------------------------------------------------------------------------


class _RowLog(np.ndarray):
    log: list

    def __getitem__(self, item):
        if isinstance(item, np.ndarray) and item.ndim == 1 and item.dtype.kind in "iu":
            type(self).log.append(np.asarray(item).copy())
        return np.asarray(super().__getitem__(item))


def test_split_hygiene():
    """No test-split row reaches fit; splitters partition exactly for all n, k."""
    with _criterion("split hygiene: instrumented fits see train rows only; exact partitions"):
        n = 24
        rng = np.random.default_rng(23)
        base = np.column_stack([np.arange(n, dtype=float), rng.normal(size=n)])
        X = base.view(_RowLog)
        _RowLog.log = []
        y = np.tile([0.0, 1.0], n // 2)

        seen_by_fit = []

        def probe_fit(handle, X, y):
            seen_by_fit.append(set(np.asarray(X)[:, 0].astype(int)))
            return {"mark_": 1.0}

        ek.register(
            EstimatorDef(
                kind="acceptance_probe",
                schema=(Param("knob", 0, lambda v: isinstance(v, int), "an int"),),
                capabilities=Capabilities(predictor=True, supervised=True, default_score="accuracy"),
                fit=probe_fit,
                predict=lambda handle, Z: np.zeros(np.asarray(Z).shape[0]),
            )
        )
        try:
            cv = KFold(n_splits=4)
            ek.GridSearchCV(ek.construct("acceptance_probe"), {"knob": [0, 1]}, cv=cv, refit=False).fit(X, y)
            folds = split(cv, n, y)
            expected = [set(train.tolist()) for _ in range(2) for train, _ in folds]
            assert seen_by_fit == expected
            for fit_rows, (train, test) in zip(seen_by_fit, itertools.cycle(folds)):
                assert fit_rows.isdisjoint(set(test.tolist()))
            # the instrumented matrix recorded exactly the train/test selections
            assert len(_RowLog.log) == 2 * len(expected)
            for i, (train, test) in zip(range(len(expected)), itertools.cycle(folds)):
                np.testing.assert_array_equal(_RowLog.log[2 * i], train)
                np.testing.assert_array_equal(_RowLog.log[2 * i + 1], test)
        finally:
            ek.unregister("acceptance_probe")

        # exact partitions for every splitter, n in 2..50, k in 2..10
        for size in range(2, 51):
            schemes = [(split(ek.LeaveOneOut(), size), size)]
            for k in range(2, 11):
                if k <= size:
                    schemes.append((split(KFold(n_splits=k), size), size))
                    schemes.append((split(KFold(n_splits=k, shuffle=True, random_seed=size + k), size), size))
                if size % 2 == 0 and size // 2 >= k:
                    labels = np.tile([0.0, 1.0], size // 2)
                    schemes.append((split(ek.StratifiedKFold(n_splits=k), size, labels), size))
            for folds, total in schemes:
                gathered = np.concatenate([test for _, test in folds])
                assert gathered.size == total
                np.testing.assert_array_equal(np.sort(gathered), np.arange(total))
                for train, test in folds:
                    assert np.intersect1d(train, test).size == 0
                    assert train.size + test.size == total


# ---------------------------------------------------------------------------


def test_persistence_criterion():
    """Bitwise round trips, refusal of bad archives, constructor-only loading."""
    with _criterion("persistence: bitwise round trips, refusals, audited loads"):
        rng = np.random.default_rng(31)
        X, y = _two_blobs(rng, per=10)
        Z, _ = _two_blobs(rng, per=6)
        docs = [["a", "b"], ["c", "a"], ["d"]]

        import hashlib
        import struct
        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)

            models = [
                (ek.StandardScaler().fit(X), "transform", Z),
                (ek.SelectKBest(k=1).fit(X, y), "transform", Z),
                (ek.PCA(n_components=2).fit(X), "transform", Z),
                (ek.KernelPCA(gamma=0.5).fit(X), "transform", Z),
                (ek.HashingVectorizer(n_features=16).fit(docs), "transform", docs),
                (ek.LogisticRegression(penalty="l1").fit(X, y), "predict", Z),
                (ek.SVC(kernel="rbf", gamma=1.0, C=2.0).fit(X, y), "predict", Z),
                (ek.KMeans(n_clusters=3, random_seed=3).fit(X), "predict", Z),
            ]
            union = ek.FeatureUnion([("pca", ek.PCA()), ("kpca", ek.KernelPCA(kernel="rbf"))])
            composite = ek.Pipeline(
                [
                    ("feat_union", union),
                    ("feat_sel", ek.SelectKBest(k=10)),
                    ("log_reg", ek.LogisticRegression(penalty="l2")),
                ]
            ).fit(X, y)
            models.append((composite, "predict", Z))

            for i, (est, method, probe) in enumerate(models):
                path = tmp / f"m{i}.estk"
                ek.save(est, path)
                loaded = ek.load(path)
                np.testing.assert_array_equal(
                    to_dense(getattr(est, method)(probe)), to_dense(getattr(loaded, method)(probe))
                )

            # corrupted archive refused without partial state
            path = tmp / "m5.estk"
            blob = bytearray(path.read_bytes())
            blob[len(blob) // 3] ^= 0x42
            bad = tmp / "corrupt.estk"
            bad.write_bytes(bytes(blob))
            with pytest.raises(ek.PersistenceError):
                ek.load(bad)

            # unknown kind refused cleanly
            ek.register(
                EstimatorDef(
                    kind="vanishing_kind",
                    schema=(),
                    capabilities=Capabilities(transformer=True),
                    fit=lambda handle, X, y: {"v_": 1.0},
                    transform=lambda handle, Z: np.asarray(Z),
                )
            )
            ghost_path = tmp / "ghost.estk"
            ek.save(ek.construct("vanishing_kind").fit(X), ghost_path)
            ek.unregister("vanishing_kind")
            with pytest.raises(ek.PersistenceError):
                ek.load(ghost_path)

            # archives from a newer format version refused
            path = tmp / "m0.estk"
            blob = bytearray(path.read_bytes())
            struct.pack_into("<I", blob, 4, 99)
            blob[-8:] = hashlib.blake2b(bytes(blob[:-8]), digest_size=8).digest()
            future = tmp / "future.estk"
            future.write_bytes(bytes(blob))
            with pytest.raises(ek.PersistenceError):
                ek.load(future)

            # loading performs registry constructions and nothing else
            with audit_registry() as events:
                ek.load(tmp / "m8.estk")
            assert events and {event for event, _ in events} == {"construct"}


# ---------------------------------------------------------------------------


def test_determinism():
    """Fixed seeds reproduce search results, k-means state, and samples."""
    with _criterion("determinism: identical SearchResult, KMeansState, and candidates across runs"):
        rng = np.random.default_rng(41)
        X, y = _two_blobs(rng, per=12)

        def run_search():
            search = ek.RandomizedSearchCV(
                ek.LogisticRegression(),
                {"C": LogUniform(1e-2, 1e2)},
                n_iter=6,
                cv=KFold(n_splits=3, shuffle=True, random_seed=5),
                random_seed=13,
            )
            return search.fit(X, y)

        a, b = run_search(), run_search()
        assert a.candidates_ == b.candidates_
        np.testing.assert_array_equal(a.fold_scores_, b.fold_scores_)
        np.testing.assert_array_equal(a.mean_scores_, b.mean_scores_)
        assert a.best_index_ == b.best_index_
        assert a.best_params_ == b.best_params_
        np.testing.assert_array_equal(a.best_estimator_.coef_, b.best_estimator_.coef_)

        Xk = rng.normal(size=(30, 3))
        km1 = ek.KMeans(n_clusters=4, random_seed=8).fit(Xk)
        km2 = ek.KMeans(n_clusters=4, random_seed=8).fit(Xk)
        np.testing.assert_array_equal(km1.cluster_centers_, km2.cluster_centers_)
        assert km1.inertia_ == km2.inertia_
        assert km1.n_iter_ == km2.n_iter_

        dists = {"a": LogUniform(1e-3, 1e1), "b": ek.IntegerUniform(0, 9)}
        assert sample_params(dists, 50, seed=3) == sample_params(dists, 50, seed=3)
