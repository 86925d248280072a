"""Kernel backend selection and the sparse-matrix bundle.

Two interchangeable backends implement the numeric kernels: a pure numpy
reference and a numba-compiled variant. The active one is chosen once at
import from the SECRETSWEEP_NUMBA environment variable and can be swapped
explicitly with set_backend (the benchmark does this). The backends must
agree on every kernel: matvec, rmatvec, routing and forest prediction are
bit-identical, split search up to floating-point summation order.

Kernels consume a SparseMatrix, which carries CSR arrays and lazily
derives the column-oriented view some kernels prefer.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels_numpy

_FALSY = {"0", "false", "no", "off"}

_BACKENDS = {}


def _load_numba_backend():
    if "numba" not in _BACKENDS:
        from . import _kernels_numba

        _BACKENDS["numba"] = _kernels_numba
    return _BACKENDS["numba"]


def _initial_backend():
    raw = os.environ.get("SECRETSWEEP_NUMBA", "").strip().lower()
    if raw in _FALSY:
        return "numpy"
    try:
        _load_numba_backend()
    except ImportError:
        return "numpy"
    return "numba"


_BACKENDS["numpy"] = _kernels_numpy
_active = _initial_backend()


def get_backend():
    """Name of the backend in use, "numpy" or "numba"."""

    return _active


def set_backend(name):
    """Switch kernel backends; raises ValueError for unknown names."""

    global _active
    if name == "numpy":
        _active = "numpy"
    elif name == "numba":
        _load_numba_backend()
        _active = "numba"
    else:
        raise ValueError(f"unknown backend {name!r}")


def _module():
    return _BACKENDS[_active]


@dataclass
class SparseMatrix:
    """CSR feature matrix with a cached column-major twin.

    The column view keeps each column's entries sorted by value, which is
    what the split-search kernel expects.
    """

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple
    _csc: tuple = field(default=None, repr=False, compare=False)

    @classmethod
    def from_arrays(cls, indptr, indices, data, shape):
        return cls(
            indptr=np.asarray(indptr, dtype=np.int64),
            indices=np.asarray(indices, dtype=np.int64),
            data=np.asarray(data, dtype=np.float64),
            shape=(int(shape[0]), int(shape[1])),
        )

    @property
    def n_rows(self):
        return self.shape[0]

    @property
    def n_cols(self):
        return self.shape[1]

    def csc(self):
        """(indptr, rows, vals) with entries sorted by (column, value)."""

        if self._csc is None:
            n_rows, n_cols = self.shape
            counts = np.diff(self.indptr)
            row_of_entry = np.repeat(np.arange(n_rows, dtype=np.int64), counts)
            order = np.lexsort((self.data, self.indices))
            col_counts = np.bincount(self.indices, minlength=n_cols)
            indptr = np.zeros(n_cols + 1, dtype=np.int64)
            np.cumsum(col_counts, out=indptr[1:])
            self._csc = (indptr, row_of_entry[order], self.data[order])
        return self._csc


def matvec(matrix, x):
    """matrix @ x."""

    return _module().csr_matvec(
        matrix.indptr, matrix.indices, matrix.data,
        np.asarray(x, dtype=np.float64), matrix.n_rows,
    )


def rmatvec(matrix, v):
    """matrix.T @ v."""

    return _module().csr_rmatvec(
        matrix.indptr, matrix.indices, matrix.data,
        np.asarray(v, dtype=np.float64), matrix.n_rows, matrix.n_cols,
    )


def best_splits(matrix, node_of_row, g, h, g_tot, h_tot, cnt_tot,
                lam, min_child_hessian, n_slots):
    """Exact greedy split search over every active node at once.

    Returns (gain, feature, threshold) arrays indexed by node slot;
    feature -1 means no admissible split.
    """

    csc_indptr, csc_rows, csc_vals = matrix.csc()
    return _module().best_splits(
        csc_indptr, csc_rows, csc_vals, node_of_row, g, h,
        g_tot, h_tot, cnt_tot, lam, min_child_hessian, n_slots,
    )


def route_rows(matrix, node_of_row, split_feat, split_thr,
               next_left, next_right):
    """Move each row to its child slot; -1 for rows whose node is a leaf."""

    mod = _module()
    if _active == "numpy":
        csc_indptr, csc_rows, csc_vals = matrix.csc()
        return mod.route_rows(
            csc_indptr, csc_rows, csc_vals, matrix.n_rows, node_of_row,
            split_feat, split_thr, next_left, next_right,
        )
    return mod.route_rows(
        matrix.indptr, matrix.indices, matrix.data, matrix.n_rows,
        node_of_row, split_feat, split_thr, next_left, next_right,
    )


def predict_forest(matrix, roots, feat, thr, left, right, leaf):
    """Sum of leaf values over all trees for every row."""

    mod = _module()
    if _active == "numpy":
        csc_indptr, csc_rows, csc_vals = matrix.csc()
        return mod.predict_forest(
            csc_indptr, csc_rows, csc_vals, matrix.n_rows,
            roots, feat, thr, left, right, leaf,
        )
    return mod.predict_forest(
        matrix.indptr, matrix.indices, matrix.data, matrix.n_rows,
        roots, feat, thr, left, right, leaf,
    )
