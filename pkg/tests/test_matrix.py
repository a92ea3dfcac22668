"""Container construction, row selection, concatenation, and ingestion."""

import numpy as np
import pytest

from estkit import DataError, csr_from_triplets, hstack, load_csv, load_svmlight, take_rows, to_dense, vstack


class TestCsrFromTriplets:
    def test_basic_layout(self):
        m = csr_from_triplets([(0, 1, 2.0), (1, 0, 3.0)], 2, 2)
        assert m.indptr.tolist() == [0, 1, 2]
        assert m.indices.tolist() == [1, 0]
        assert m.data.tolist() == [2.0, 3.0]

    def test_duplicates_cancel_and_are_dropped(self):
        m = csr_from_triplets([(0, 0, 1.0), (0, 0, -1.0)], 1, 1)
        assert m.indptr.tolist() == [0, 0]
        assert m.nnz == 0

    def test_out_of_bounds_column(self):
        with pytest.raises(ValueError):
            csr_from_triplets([(1, 2, 5.0)], 2, 2)

    def test_out_of_bounds_row(self):
        with pytest.raises(ValueError):
            csr_from_triplets([(2, 0, 5.0)], 2, 2)

    def test_round_trip_reproduces_summed_triplets(self):
        """Stored entries equal the per-coordinate sums, over random triplet lists."""
        rng = np.random.default_rng(11)
        for _ in range(50):
            n, p = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            count = int(rng.integers(0, 30))
            trips = [
                (int(rng.integers(n)), int(rng.integers(p)), float(rng.integers(-3, 4)))
                for _ in range(count)
            ]
            expected = {}
            for r, c, v in trips:
                expected[(r, c)] = expected.get((r, c), 0.0) + v
            expected = {k: v for k, v in expected.items() if v != 0.0}
            m = csr_from_triplets(trips, n, p)
            stored = {}
            for r in range(n):
                for pos in range(m.indptr[r], m.indptr[r + 1]):
                    stored[(r, int(m.indices[pos]))] = float(m.data[pos])
            assert stored == expected
            # canonical form: strictly increasing indices inside each row
            for r in range(n):
                row = m.indices[m.indptr[r] : m.indptr[r + 1]]
                assert np.all(np.diff(row) > 0) if row.size > 1 else True


class TestTakeRows:
    def test_identity_permutation(self):
        X = np.arange(12, dtype=float).reshape(3, 4)
        np.testing.assert_array_equal(take_rows(X, [0, 1, 2]), X)

    def test_selection_order(self):
        X = np.arange(12, dtype=float).reshape(3, 4)
        out = take_rows(X, [2, 0])
        np.testing.assert_array_equal(out, X[[2, 0]])

    def test_empty_selection(self):
        X = np.arange(12, dtype=float).reshape(3, 4)
        out = take_rows(X, [])
        assert out.shape == (0, 4)

    def test_out_of_range(self):
        X = np.zeros((3, 2))
        with pytest.raises(ValueError):
            take_rows(X, [3])
        with pytest.raises(ValueError):
            take_rows(X, [-1])

    def test_concat_equals_vstack_of_parts(self):
        """take_rows(m, i1 + i2) == vstack(take_rows(m, i1), take_rows(m, i2))."""
        rng = np.random.default_rng(5)
        for _ in range(30):
            n, p = int(rng.integers(1, 9)), int(rng.integers(1, 6))
            X = rng.normal(size=(n, p))
            i1 = rng.integers(0, n, size=int(rng.integers(0, 6))).tolist()
            i2 = rng.integers(0, n, size=int(rng.integers(1, 6))).tolist()
            combined = take_rows(X, i1 + i2)
            stacked = vstack([take_rows(X, i1), take_rows(X, i2)])
            np.testing.assert_array_equal(combined, stacked)

    def test_sparse_dense_agreement(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n, p = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            dense = np.round(rng.normal(size=(n, p)) * (rng.random(size=(n, p)) < 0.4), 3)
            sparse = csr_from_triplets(
                [(r, c, dense[r, c]) for r in range(n) for c in range(p) if dense[r, c] != 0], n, p
            )
            idx = rng.integers(0, n, size=int(rng.integers(0, 2 * n))).tolist()
            np.testing.assert_array_equal(to_dense(take_rows(sparse, idx)), take_rows(dense, idx))


class TestHstack:
    def test_width_addition(self):
        a = np.ones((2, 2))
        b = np.zeros((2, 3))
        assert hstack([a, b]).shape == (2, 5)

    def test_single_block_identity(self):
        a = np.arange(6, dtype=float).reshape(2, 3)
        np.testing.assert_array_equal(hstack([a]), a)

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            hstack([np.ones((2, 1)), np.ones((3, 1))])

    def test_sparse_wins(self):
        a = np.ones((2, 2))
        s = csr_from_triplets([(0, 0, 1.0)], 2, 2)
        out = hstack([a, s])
        assert out.shape == (2, 4)
        from estkit import is_sparse

        assert is_sparse(out)
        np.testing.assert_array_equal(to_dense(out), np.hstack([a, to_dense(s)]))

    def test_column_blocks_preserved(self):
        """Column j of A equals column j of the result, for random A, B."""
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(1, 7))
            a = rng.normal(size=(n, int(rng.integers(1, 5))))
            b = rng.normal(size=(n, int(rng.integers(1, 5))))
            out = hstack([a, b])
            assert out.shape[1] == a.shape[1] + b.shape[1]
            np.testing.assert_array_equal(out[:, : a.shape[1]], a)
            np.testing.assert_array_equal(out[:, a.shape[1] :], b)

    def test_sparse_dense_agreement(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            n = int(rng.integers(1, 7))
            dense_a = np.round(rng.normal(size=(n, 3)), 2) * (rng.random(size=(n, 3)) < 0.5)
            dense_b = np.round(rng.normal(size=(n, 2)), 2) * (rng.random(size=(n, 2)) < 0.5)
            sparse_a = csr_from_triplets(
                [(r, c, dense_a[r, c]) for r in range(n) for c in range(3) if dense_a[r, c] != 0], n, 3
            )
            sparse_b = csr_from_triplets(
                [(r, c, dense_b[r, c]) for r in range(n) for c in range(2) if dense_b[r, c] != 0], n, 2
            )
            np.testing.assert_array_equal(
                to_dense(hstack([sparse_a, sparse_b])), hstack([dense_a, dense_b])
            )


class TestLoadCsv:
    def test_target_by_name(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        ds = load_csv(path, has_header=True, target_column="b")
        np.testing.assert_array_equal(ds.X, [[1.0], [3.0]])
        np.testing.assert_array_equal(ds.y, [2.0, 4.0])
        assert ds.feature_names == ["a"]

    def test_string_targets_first_appearance(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,label\n1,cat\n2,dog\n3,cat\n")
        ds = load_csv(path, has_header=True, target_column="label")
        np.testing.assert_array_equal(ds.y, [0.0, 1.0, 0.0])
        assert ds.label_names == ["cat", "dog"]

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b,c\n1,2,3\n4,5\n")
        with pytest.raises(DataError, match="3"):  # file line 3
            load_csv(path, has_header=True)

    def test_non_numeric_feature(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\nx,4\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_csv(path, has_header=True)

    def test_nan_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\nnan,4\n")
        with pytest.raises(DataError, match="non-finite"):
            load_csv(path, has_header=True)

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="no column"):
            load_csv(path, has_header=True, target_column="z")

    def test_no_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,2\n3,4\n")
        ds = load_csv(path, has_header=False, target_column=1)
        np.testing.assert_array_equal(ds.X, [[1.0], [3.0]])
        np.testing.assert_array_equal(ds.y, [2.0, 4.0])


class TestLoadSvmlight:
    def test_basic(self, tmp_path):
        path = tmp_path / "d.svm"
        path.write_text("1 1:2.0 3:1.0\n")
        ds = load_svmlight(path)
        assert ds.X.shape == (1, 3)
        assert ds.X.nnz == 2
        np.testing.assert_array_equal(to_dense(ds.X), [[2.0, 0.0, 1.0]])
        np.testing.assert_array_equal(ds.y, [1.0])

    def test_empty_feature_line(self, tmp_path):
        path = tmp_path / "d.svm"
        path.write_text("1 1:1.0\n0\n")
        ds = load_svmlight(path)
        assert ds.X.shape == (2, 1)
        np.testing.assert_array_equal(to_dense(ds.X)[1], [0.0])

    def test_non_ascending_indices(self, tmp_path):
        path = tmp_path / "d.svm"
        path.write_text("1 3:1 2:1\n")
        with pytest.raises(DataError, match="non-ascending"):
            load_svmlight(path)

    def test_malformed_pair(self, tmp_path):
        path = tmp_path / "d.svm"
        path.write_text("1 3\n")
        with pytest.raises(DataError, match="malformed"):
            load_svmlight(path)
