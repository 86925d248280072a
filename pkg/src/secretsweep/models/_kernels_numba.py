"""Numba kernel implementations.

Must agree exactly with _kernels_numpy; the benchmark and the property
tests both compare the two backends.
"""

import numpy as np
from numba import njit


@njit(cache=True, error_model="numpy")
def csr_matvec(indptr, indices, data, x, n_rows):
    out = np.zeros(n_rows, dtype=np.float64)
    for row in range(n_rows):
        acc = 0.0
        for k in range(indptr[row], indptr[row + 1]):
            acc += data[k] * x[indices[k]]
        out[row] = acc
    return out


@njit(cache=True, error_model="numpy")
def csr_rmatvec(indptr, indices, data, v, n_rows, n_cols):
    out = np.zeros(n_cols, dtype=np.float64)
    for row in range(n_rows):
        vr = v[row]
        for k in range(indptr[row], indptr[row + 1]):
            out[indices[k]] += data[k] * vr
    return out


@njit(cache=True, error_model="numpy")
def _csr_lookup(indptr, indices, data, row, col):
    lo = indptr[row]
    hi = indptr[row + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] == col:
            return data[mid]
        if indices[mid] < col:
            lo = mid + 1
        else:
            hi = mid
    return 0.0


@njit(cache=True, error_model="numpy")
def _consider(best_gain, best_feat, best_thr, slot, col, thr,
              gl, hl, g_all, h_all, lam, min_child_hessian):
    hr = h_all - hl
    if hl < min_child_hessian or hr < min_child_hessian:
        return
    gr = g_all - gl
    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                  - g_all * g_all / (h_all + lam))
    if gain > 0.0 and gain > best_gain[slot]:
        best_gain[slot] = gain
        best_feat[slot] = col
        best_thr[slot] = thr


@njit(cache=True, error_model="numpy")
def best_splits(csc_indptr, csc_rows, csc_vals, node_of_row, g, h,
                g_tot, h_tot, cnt_tot, lam, min_child_hessian, n_slots):
    best_gain = np.zeros(n_slots, dtype=np.float64)
    best_feat = np.full(n_slots, -1, dtype=np.int64)
    best_thr = np.zeros(n_slots, dtype=np.float64)

    stored_g = np.zeros(n_slots, dtype=np.float64)
    stored_h = np.zeros(n_slots, dtype=np.float64)
    stored_c = np.zeros(n_slots, dtype=np.int64)
    run_g = np.zeros(n_slots, dtype=np.float64)
    run_h = np.zeros(n_slots, dtype=np.float64)
    last_val = np.zeros(n_slots, dtype=np.float64)
    seen = np.zeros(n_slots, dtype=np.uint8)

    n_cols = len(csc_indptr) - 1
    for col in range(n_cols):
        lo = csc_indptr[col]
        hi = csc_indptr[col + 1]
        if lo == hi:
            continue
        for slot in range(n_slots):
            stored_g[slot] = 0.0
            stored_h[slot] = 0.0
            stored_c[slot] = 0
            run_g[slot] = 0.0
            run_h[slot] = 0.0
            seen[slot] = 0

        for k in range(lo, hi):
            slot = node_of_row[csc_rows[k]]
            if slot < 0:
                continue
            stored_g[slot] += g[csc_rows[k]]
            stored_h[slot] += h[csc_rows[k]]
            stored_c[slot] += 1

        for k in range(lo, hi):
            row = csc_rows[k]
            slot = node_of_row[row]
            if slot < 0:
                continue
            val = csc_vals[k]
            zero_g = g_tot[slot] - stored_g[slot]
            zero_h = h_tot[slot] - stored_h[slot]
            if seen[slot] == 0:
                seen[slot] = 1
                if cnt_tot[slot] - stored_c[slot] > 0:
                    _consider(best_gain, best_feat, best_thr, slot, col,
                              val / 2.0, zero_g, zero_h,
                              g_tot[slot], h_tot[slot], lam, min_child_hessian)
            elif val > last_val[slot]:
                _consider(best_gain, best_feat, best_thr, slot, col,
                          (last_val[slot] + val) / 2.0,
                          zero_g + run_g[slot], zero_h + run_h[slot],
                          g_tot[slot], h_tot[slot], lam, min_child_hessian)
            last_val[slot] = val
            run_g[slot] += g[row]
            run_h[slot] += h[row]

    return best_gain, best_feat, best_thr


@njit(cache=True, error_model="numpy")
def route_rows(csr_indptr, csr_indices, csr_data, n_rows, node_of_row,
               split_feat, split_thr, next_left, next_right):
    out = np.full(n_rows, -1, dtype=np.int64)
    for row in range(n_rows):
        slot = node_of_row[row]
        if slot < 0 or split_feat[slot] < 0:
            continue
        value = _csr_lookup(csr_indptr, csr_indices, csr_data,
                            row, split_feat[slot])
        if value < split_thr[slot]:
            out[row] = next_left[slot]
        else:
            out[row] = next_right[slot]
    return out


@njit(cache=True, error_model="numpy")
def predict_forest(csr_indptr, csr_indices, csr_data, n_rows,
                   roots, feat, thr, left, right, leaf):
    out = np.zeros(n_rows, dtype=np.float64)
    for row in range(n_rows):
        total = 0.0
        for t in range(len(roots)):
            node = roots[t]
            while feat[node] >= 0:
                value = _csr_lookup(csr_indptr, csr_indices, csr_data,
                                    row, feat[node])
                if value < thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            total += leaf[node]
        out[row] = total
    return out
