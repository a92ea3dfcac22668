"""Dense and sparse sample-by-feature containers plus dataset ingestion.

Dense data is a plain 2-D float64 numpy array, sparse data a canonical
scipy CSR matrix (sorted column indices, summed duplicates, no stored
zeros). Rows are samples, columns are variables. All containers are
treated as immutable once built; every operation here returns a new
container.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataError

__all__ = [
    "Dataset",
    "csr_from_triplets",
    "hstack",
    "is_sparse",
    "load_csv",
    "load_svmlight",
    "n_cols",
    "n_rows",
    "take_rows",
    "to_dense",
    "vstack",
]


def is_sparse(m) -> bool:
    return sp.issparse(m)


def n_rows(m) -> int:
    return int(m.shape[0])


def n_cols(m) -> int:
    return int(m.shape[1])


def to_dense(m) -> np.ndarray:
    """Return a dense float64 view of a dense or sparse matrix."""
    if sp.issparse(m):
        return np.asarray(m.toarray(), dtype=np.float64)
    return np.asarray(m, dtype=np.float64)


def _canonicalize(m: sp.csr_matrix) -> sp.csr_matrix:
    m.sum_duplicates()
    m.sort_indices()
    m.eliminate_zeros()
    return m


def csr_from_triplets(triplets, n_rows: int, n_cols: int) -> sp.csr_matrix:
    """Build a canonical CSR matrix from (row, col, value) triplets.

    Duplicate coordinates are summed; entries that cancel to zero are
    dropped. Out-of-range coordinates raise ValueError.
    """
    if n_rows < 0 or n_cols < 0:
        raise ValueError("matrix dimensions must be non-negative")
    triplets = list(triplets)
    if not triplets:
        return sp.csr_matrix((n_rows, n_cols), dtype=np.float64)
    rows = np.asarray([t[0] for t in triplets], dtype=np.int64)
    cols = np.asarray([t[1] for t in triplets], dtype=np.int64)
    data = np.asarray([t[2] for t in triplets], dtype=np.float64)
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        raise ValueError(f"row index out of bounds for {n_rows} rows")
    if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
        raise ValueError(f"column index out of bounds for {n_cols} columns")
    m = sp.coo_matrix((data, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
    return _canonicalize(m)


def take_rows(m, idx):
    """Select rows by index; duplicates allowed, order preserved."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        idx = idx.reshape(-1)
    total = m.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= total):
        raise ValueError(f"row index out of range for {total} rows")
    out = m[idx]
    if sp.issparse(out):
        out = _canonicalize(out.tocsr())
    return out


def hstack(blocks):
    """Concatenate blocks column-wise; sparse wins if any block is sparse."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("hstack needs at least one block")
    heights = {b.shape[0] for b in blocks}
    if len(heights) > 1:
        raise ValueError(f"row-count mismatch across blocks: {sorted(heights)}")
    if any(sp.issparse(b) for b in blocks):
        converted = [b.tocsr() if sp.issparse(b) else sp.csr_matrix(np.asarray(b, dtype=np.float64)) for b in blocks]
        return _canonicalize(sp.hstack(converted, format="csr"))
    return np.hstack([np.asarray(b, dtype=np.float64) for b in blocks])


def vstack(blocks):
    """Concatenate blocks row-wise; counterpart of hstack."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("vstack needs at least one block")
    widths = {b.shape[1] for b in blocks}
    if len(widths) > 1:
        raise ValueError(f"column-count mismatch across blocks: {sorted(widths)}")
    if any(sp.issparse(b) for b in blocks):
        converted = [b.tocsr() if sp.issparse(b) else sp.csr_matrix(np.asarray(b, dtype=np.float64)) for b in blocks]
        return _canonicalize(sp.vstack(converted, format="csr"))
    return np.vstack([np.asarray(b, dtype=np.float64) for b in blocks])


@dataclass
class Dataset:
    """Ingested data: feature matrix, optional targets, optional names.

    When the target column held strings, ``y`` carries first-appearance
    integer codes and ``label_names`` maps code -> original string so
    predictions can be decoded.
    """

    X: object
    y: np.ndarray | None = None
    feature_names: list[str] | None = None
    label_names: list[str] | None = field(default=None)

    @property
    def n_samples(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])


def _parse_float(cell: str, path, line_no: int, what: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"{path}:{line_no}: non-numeric {what} {cell!r}") from None
    if not np.isfinite(value):
        raise DataError(f"{path}:{line_no}: non-finite {what} {cell!r}")
    return value


def load_csv(path, has_header: bool = True, target_column=None) -> Dataset:
    """Load a rectangular numeric CSV, optionally splitting off a target column.

    ``target_column`` is a header name or a 0-based column index. String
    targets are label-encoded in first-appearance order; everything else
    must parse as a finite float. Errors name the offending file line.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [(i + 1, row) for i, row in enumerate(reader) if row]
    if not rows:
        raise DataError(f"{path}: empty file")

    header = None
    if has_header:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows after header")

    width = len(rows[0][1])
    target_idx = None
    if target_column is not None:
        if isinstance(target_column, str):
            if header is None:
                raise DataError(f"{path}: target column by name requires a header")
            if target_column not in header:
                raise DataError(f"{path}: no column named {target_column!r}")
            target_idx = header.index(target_column)
        else:
            target_idx = int(target_column)
            if not 0 <= target_idx < width:
                raise DataError(f"{path}: target column index {target_idx} out of range")

    feature_cells = []
    target_cells = []
    for line_no, row in rows:
        if len(row) != width:
            raise DataError(f"{path}:{line_no}: expected {width} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        if target_idx is not None:
            target_cells.append((line_no, cells[target_idx]))
            cells = cells[:target_idx] + cells[target_idx + 1 :]
        feature_cells.append((line_no, cells))

    X = np.empty((len(feature_cells), width - (0 if target_idx is None else 1)), dtype=np.float64)
    for r, (line_no, cells) in enumerate(feature_cells):
        for c, cell in enumerate(cells):
            X[r, c] = _parse_float(cell, path, line_no, "feature value")

    y = None
    label_names = None
    if target_idx is not None:
        numeric = True
        values = []
        for line_no, cell in target_cells:
            try:
                v = float(cell)
            except ValueError:
                numeric = False
                break
            if not np.isfinite(v):
                raise DataError(f"{path}:{line_no}: non-finite target {cell!r}")
            values.append(v)
        if numeric:
            y = np.asarray(values, dtype=np.float64)
        else:
            codes = {}
            encoded = []
            for _, cell in target_cells:
                if cell not in codes:
                    codes[cell] = len(codes)
                encoded.append(codes[cell])
            y = np.asarray(encoded, dtype=np.float64)
            label_names = list(codes)

    feature_names = None
    if header is not None:
        feature_names = [h for i, h in enumerate(header) if i != target_idx]
    X.setflags(write=False)
    if y is not None:
        y.setflags(write=False)
    return Dataset(X=X, y=y, feature_names=feature_names, label_names=label_names)


def load_svmlight(path) -> Dataset:
    """Load an svmlight file: ``label idx:val ...`` with 1-based ascending indices."""
    labels = []
    triplets = []
    max_col = 0
    with open(path) as fh:
        row = 0
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            labels.append(_parse_float(parts[0], path, line_no, "label"))
            prev = 0
            for pair in parts[1:]:
                idx_s, _, val_s = pair.partition(":")
                if not val_s:
                    raise DataError(f"{path}:{line_no}: malformed pair {pair!r}")
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise DataError(f"{path}:{line_no}: malformed index in {pair!r}") from None
                if idx < 1:
                    raise DataError(f"{path}:{line_no}: indices are 1-based, got {idx}")
                if idx <= prev:
                    raise DataError(f"{path}:{line_no}: non-ascending index {idx}")
                prev = idx
                max_col = max(max_col, idx)
                triplets.append((row, idx - 1, _parse_float(val_s, path, line_no, "value")))
            row += 1
    if row == 0:
        raise DataError(f"{path}: empty file")
    X = csr_from_triplets(triplets, n_rows=row, n_cols=max_col)
    y = np.asarray(labels, dtype=np.float64)
    y.setflags(write=False)
    return Dataset(X=X, y=y)
