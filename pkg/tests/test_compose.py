"""Pipelines and feature unions: equivalence with hand-rolled sequences."""

import numpy as np
import pytest

import estkit as ek
from estkit import CapabilityError, ConstructionError, clone, hstack, to_dense


@pytest.fixture
def data():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(24, 6))
    y = (X[:, 0] + 0.2 * rng.normal(size=24) > 0).astype(float)
    Z = rng.normal(size=(10, 6))
    return X, y, Z


class TestPipelineFit:
    def test_equals_hand_rolled_sequence(self, data):
        """Pipeline(scaler, logistic) reproduces the manual call chain bitwise."""
        X, y, Z = data
        pipe = ek.Pipeline([("scaler", ek.StandardScaler()), ("clf", ek.LogisticRegression())])
        pipe.fit(X, y)

        scaler = ek.StandardScaler()
        Xs = scaler.fit_transform(X)
        clf = ek.LogisticRegression().fit(Xs, y)
        np.testing.assert_array_equal(pipe.predict(Z), clf.predict(scaler.transform(Z)))
        np.testing.assert_array_equal(pipe.decision_function(Z), clf.decision_function(scaler.transform(Z)))

    def test_random_pipelines_match_hand_rolled(self, data):
        """Random 2- and 3-step pipelines equal the explicit sequence bitwise."""
        X, y, Z = data
        rng = np.random.default_rng(7)
        transformer_makers = [
            lambda: ek.StandardScaler(),
            lambda: ek.PCA(n_components=3),
            lambda: ek.SelectKBest(k=3),
            lambda: ek.KernelPCA(gamma=0.5, n_components=4),
        ]
        predictor_makers = [
            lambda: ek.LogisticRegression(C=2.0),
            lambda: ek.KMeans(n_clusters=3, random_seed=0),
        ]
        for trial in range(10):
            depth = int(rng.integers(2, 4))
            t_idx = rng.integers(0, len(transformer_makers), size=depth - 1)
            p_idx = int(rng.integers(0, len(predictor_makers)))
            steps = [(f"t{i}", transformer_makers[j]()) for i, j in enumerate(t_idx)]
            steps.append(("end", predictor_makers[p_idx]()))
            pipe = ek.Pipeline([(name, clone(est)) for name, est in steps])
            pipe.fit(X, y)

            cur = X
            fitted = []
            for name, est in steps[:-1]:
                est = clone(est)
                cur = est.fit_transform(cur, y)
                fitted.append(est)
            last = clone(steps[-1][1]).fit(cur, y)

            Zc = Z
            for est in fitted:
                Zc = est.transform(Zc)
            np.testing.assert_array_equal(pipe.predict(Z), last.predict(Zc))

    def test_last_step_transformer_capabilities(self, data):
        X, _, Z = data
        pipe = ek.Pipeline([("scaler", ek.StandardScaler()), ("pca", ek.PCA(n_components=2))])
        pipe.fit(X)
        assert pipe.transform(Z).shape == (10, 2)
        with pytest.raises(CapabilityError):
            pipe.predict(Z)

    def test_union_selection_logistic_workflow(self, data):
        X, y, Z = data
        union = ek.FeatureUnion([("pca", ek.PCA()), ("kpca", ek.KernelPCA(kernel="rbf"))])
        pipe = ek.Pipeline(
            [
                ("feat_union", union),
                ("feat_sel", ek.SelectKBest(k=10)),
                ("log_reg", ek.LogisticRegression(penalty="l2")),
            ]
        )
        pred = pipe.fit(X, y).predict(Z)
        assert pred.shape == (10,)
        assert set(np.unique(pred)) <= {0.0, 1.0}

    def test_step_error_is_prefixed(self, data):
        X, y, _ = data
        pipe = ek.Pipeline([("sel", ek.SelectKBest(k=3)), ("clf", ek.LogisticRegression())])
        with pytest.raises(Exception, match="step 'sel'"):
            pipe.fit(X, np.zeros(24))  # single class breaks SelectKBest

    def test_non_transformer_middle_step_rejected(self):
        with pytest.raises(ConstructionError, match="transformer"):
            ek.Pipeline([("clf", ek.LogisticRegression()), ("scaler", ek.StandardScaler())])

    def test_duplicate_names_rejected(self):
        with pytest.raises(ConstructionError):
            ek.Pipeline([("a", ek.StandardScaler()), ("a", ek.LogisticRegression())])

    def test_name_with_dunder_rejected(self):
        with pytest.raises(ConstructionError):
            ek.Pipeline([("a__b", ek.LogisticRegression())])


class TestPipelineMethods:
    def test_single_step_pipeline_equals_inner(self, data):
        X, y, Z = data
        pipe = ek.Pipeline([("clf", ek.LogisticRegression())]).fit(X, y)
        solo = ek.LogisticRegression().fit(X, y)
        np.testing.assert_array_equal(pipe.predict(Z), solo.predict(Z))
        np.testing.assert_array_equal(pipe.predict_proba(Z), solo.predict_proba(Z))
        np.testing.assert_array_equal(pipe.decision_function(Z), solo.decision_function(Z))
        assert pipe.score(X, y) == solo.score(X, y)

    def test_score_delegates_to_last_step(self, data):
        X, y, _ = data
        pipe = ek.Pipeline([("scaler", ek.StandardScaler()), ("clf", ek.LogisticRegression())]).fit(X, y)
        scaled = pipe.get_params()["steps"][0][1].transform(X)
        last = pipe.get_params()["steps"][1][1]
        assert pipe.score(X, y) == last.score(scaled, y)

    def test_transform_does_not_mutate_state(self, data):
        X, y, Z = data
        pipe = ek.Pipeline([("scaler", ek.StandardScaler()), ("pca", ek.PCA(n_components=2))]).fit(X)
        before = [dict(est.fitted) for _, est in pipe.get_params()["steps"]]
        pipe.transform(Z)
        after = [dict(est.fitted) for _, est in pipe.get_params()["steps"]]
        for b, a in zip(before, after):
            assert b.keys() == a.keys()
            for key in b:
                np.testing.assert_array_equal(np.asarray(b[key]), np.asarray(a[key]))


class TestFeatureUnion:
    def test_width_is_sum_of_members(self, data):
        X, _, _ = data
        union = ek.FeatureUnion([("pca", ek.PCA(n_components=2)), ("kpca", ek.KernelPCA(n_components=3))])
        out = union.fit_transform(X)
        assert out.shape == (24, 5)

    def test_fit_transform_is_hstack_of_member_fit_transforms(self, data):
        X, _, _ = data
        rng = np.random.default_rng(3)
        for _ in range(10):
            k1 = int(rng.integers(1, 4))
            k2 = int(rng.integers(1, 4))
            union = ek.FeatureUnion(
                [("a", ek.PCA(n_components=k1)), ("b", ek.KernelPCA(n_components=k2, gamma=0.3))]
            )
            combined = union.fit_transform(X)
            manual = hstack(
                [ek.PCA(n_components=k1).fit_transform(X), ek.KernelPCA(n_components=k2, gamma=0.3).fit_transform(X)]
            )
            np.testing.assert_array_equal(to_dense(combined), to_dense(manual))

    def test_single_member_identity(self, data):
        X, _, Z = data
        union = ek.FeatureUnion([("pca", ek.PCA(n_components=2))]).fit(X)
        solo = ek.PCA(n_components=2).fit(X)
        np.testing.assert_array_equal(union.transform(Z), solo.transform(Z))

    def test_member_order_permutes_blocks(self, data):
        X, _, _ = data
        a = ek.FeatureUnion([("p", ek.PCA(n_components=2)), ("s", ek.StandardScaler())]).fit_transform(X)
        b = ek.FeatureUnion([("s", ek.StandardScaler()), ("p", ek.PCA(n_components=2))]).fit_transform(X)
        np.testing.assert_array_equal(a[:, :2], b[:, 6:])
        np.testing.assert_array_equal(a[:, 2:], b[:, :6])

    def test_member_error_is_prefixed(self, data):
        X, _, _ = data
        union = ek.FeatureUnion([("sel", ek.SelectKBest(k=2))])
        with pytest.raises(Exception, match="member 'sel'"):
            union.fit(X, np.zeros(24))

    def test_non_transformer_member_rejected(self):
        with pytest.raises(ConstructionError, match="transformer"):
            ek.FeatureUnion([("clf", ek.LogisticRegression())])


class TestCompositeParamAddressing:
    def test_set_nested_logistic_c(self, data):
        union = ek.FeatureUnion([("pca", ek.PCA()), ("kpca", ek.KernelPCA(kernel="rbf"))])
        pipe = ek.Pipeline(
            [("feat_union", union), ("feat_sel", ek.SelectKBest(k=10)), ("log_reg", ek.LogisticRegression())]
        )
        updated = pipe.set_params({"log_reg__C": 10.0})
        assert updated.get_params(deep=True)["log_reg__C"] == 10.0

    def test_deep_params_reach_union_members(self):
        union = ek.FeatureUnion([("pca", ek.PCA()), ("kpca", ek.KernelPCA(kernel="rbf"))])
        pipe = ek.Pipeline([("feat_union", union), ("log_reg", ek.LogisticRegression())])
        deep = pipe.get_params(deep=True)
        assert "feat_union__pca__n_components" in deep
        assert "feat_union__kpca__gamma" in deep

    def test_two_level_set_params(self, data):
        X, y, _ = data
        union = ek.FeatureUnion([("pca", ek.PCA()), ("kpca", ek.KernelPCA(kernel="rbf"))])
        pipe = ek.Pipeline([("feat_union", union), ("log_reg", ek.LogisticRegression())]).fit(X, y)
        updated = pipe.set_params({"feat_union__kpca__gamma": 0.25})
        assert updated.get_params(deep=True)["feat_union__kpca__gamma"] == 0.25
        assert not updated.is_fitted  # any parameter change clears fitted state
        assert pipe.get_params(deep=True)["feat_union__kpca__gamma"] == 1.0

    def test_unknown_segment_named(self):
        pipe = ek.Pipeline([("clf", ek.LogisticRegression())])
        with pytest.raises(ConstructionError, match="nope"):
            pipe.set_params({"nope__C": 1.0})

    def test_composites_are_registry_citizens(self, data):
        """clone, set_params, and search accept a pipeline like any estimator."""
        X, y, _ = data
        pipe = ek.Pipeline([("scaler", ek.StandardScaler()), ("clf", ek.LogisticRegression())])
        assert not clone(pipe).is_fitted
        search = ek.GridSearchCV(pipe, {"clf__C": [0.1, 1.0]}, cv=3)
        search.fit(X, y)
        assert search.best_params_["clf__C"] in (0.1, 1.0)
        assert search.best_estimator_.kind == "pipeline"

    def test_three_level_nesting_in_search(self, data):
        """Union inside a pipeline inside a grid search."""
        X, y, _ = data
        union = ek.FeatureUnion([("pca", ek.PCA(n_components=2)), ("kpca", ek.KernelPCA(gamma=0.5, n_components=2))])
        pipe = ek.Pipeline([("feat_union", union), ("clf", ek.LogisticRegression())])
        search = ek.GridSearchCV(pipe, {"feat_union__kpca__gamma": [0.3, 0.6], "clf__C": [1.0]}, cv=2)
        search.fit(X, y)
        assert len(search.candidates_) == 2
        chosen = search.best_estimator_.get_params(deep=True)["feat_union__kpca__gamma"]
        assert chosen in (0.3, 0.6)
