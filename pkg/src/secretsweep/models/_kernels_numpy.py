"""Pure-numpy kernel implementations.

These are the reference semantics; the numba backend must agree exactly.
All matrices arrive as flat CSR/CSC arrays, features are non-negative,
and absent entries mean value 0.
"""

import numpy as np


def csr_matvec(indptr, indices, data, x, n_rows):
    row_of_entry = np.repeat(np.arange(n_rows), np.diff(indptr))
    products = data * x[indices]
    return np.bincount(row_of_entry, weights=products, minlength=n_rows)


def csr_rmatvec(indptr, indices, data, v, n_rows, n_cols):
    v_of_entry = np.repeat(v, np.diff(indptr))
    return np.bincount(indices, weights=data * v_of_entry, minlength=n_cols)


def best_splits(csc_indptr, csc_rows, csc_vals, node_of_row, g, h,
                g_tot, h_tot, cnt_tot, lam, min_child_hessian, n_slots):
    """Exact greedy split search across all current leaves at once.

    Entries within each CSC column are pre-sorted by value ascending, all
    stored values are > 0, and rows missing from a column hold implicit
    zeros, which sort before every stored entry.

    Returns (best_gain, best_feat, best_thr) per node slot; best_feat is
    -1 where no positive-gain split exists.
    """
    best_gain = np.zeros(n_slots, dtype=np.float64)
    best_feat = np.full(n_slots, -1, dtype=np.int64)
    best_thr = np.zeros(n_slots, dtype=np.float64)

    n_cols = len(csc_indptr) - 1
    col_of_entry = np.repeat(np.arange(n_cols), np.diff(csc_indptr))
    node_of_entry = node_of_row[csc_rows]
    live = node_of_entry >= 0
    if not live.any():
        return best_gain, best_feat, best_thr

    cols_e = col_of_entry[live]
    vals_e = csc_vals[live]
    nodes_e = node_of_entry[live]
    g_e = g[csc_rows[live]]
    h_e = h[csc_rows[live]]

    # Group by (column, node); stable sort keeps value order inside groups.
    key = cols_e * n_slots + nodes_e
    order = np.argsort(key, kind="stable")
    key_s = key[order]
    vals_s = vals_e[order]
    g_s = g_e[order]
    h_s = h_e[order]

    starts = np.flatnonzero(np.concatenate(([True], key_s[1:] != key_s[:-1])))
    lengths = np.diff(np.concatenate((starts, [len(key_s)])))
    group_of_entry = np.repeat(np.arange(len(starts)), lengths)

    node_g = key_s[starts] % n_slots
    col_g = key_s[starts] // n_slots

    cum_g = np.cumsum(g_s) - g_s        # exclusive prefix sums
    cum_h = np.cumsum(h_s) - h_s
    base_g = cum_g[starts][group_of_entry]
    base_h = cum_h[starts][group_of_entry]
    within_g = cum_g - base_g           # stored mass strictly before entry
    within_h = cum_h - base_h

    stored_g = np.add.reduceat(g_s, starts)
    stored_h = np.add.reduceat(h_s, starts)
    zero_g = g_tot[node_g] - stored_g
    zero_h = h_tot[node_g] - stored_h
    zero_cnt = cnt_tot[node_g] - lengths

    cand_node, cand_col, cand_thr, cand_gl, cand_hl = [], [], [], [], []

    # Boundary between the implicit zero block and the first stored value.
    first = starts
    has_zero = zero_cnt > 0
    cand_node.append(node_g[has_zero])
    cand_col.append(col_g[has_zero])
    cand_thr.append(vals_s[first[has_zero]] / 2.0)
    cand_gl.append(zero_g[has_zero])
    cand_hl.append(zero_h[has_zero])

    # Boundaries between consecutive distinct stored values of one group.
    is_start = np.zeros(len(key_s), dtype=bool)
    is_start[starts] = True
    interior = np.flatnonzero(
        ~is_start & (vals_s != np.concatenate(([0.0], vals_s[:-1])))
    )
    grp = group_of_entry[interior]
    cand_node.append(node_g[grp])
    cand_col.append(col_g[grp])
    cand_thr.append((vals_s[interior - 1] + vals_s[interior]) / 2.0)
    cand_gl.append(zero_g[grp] + within_g[interior])
    cand_hl.append(zero_h[grp] + within_h[interior])

    node_c = np.concatenate(cand_node)
    if len(node_c) == 0:
        return best_gain, best_feat, best_thr
    col_c = np.concatenate(cand_col)
    thr_c = np.concatenate(cand_thr)
    gl = np.concatenate(cand_gl)
    hl = np.concatenate(cand_hl)
    gr = g_tot[node_c] - gl
    hr = h_tot[node_c] - hl

    with np.errstate(divide="ignore", invalid="ignore"):
        parent = g_tot[node_c] ** 2 / (h_tot[node_c] + lam)
        gain = 0.5 * (gl ** 2 / (hl + lam) + gr ** 2 / (hr + lam) - parent)
    ok = (hl >= min_child_hessian) & (hr >= min_child_hessian) & (gain > 0.0)
    if not ok.any():
        return best_gain, best_feat, best_thr

    node_c, col_c, thr_c, gain = node_c[ok], col_c[ok], thr_c[ok], gain[ok]
    # Winner per node: max gain, ties to the lowest feature then threshold.
    order = np.lexsort((thr_c, col_c, -gain, node_c))
    winners, first_idx = np.unique(node_c[order], return_index=True)
    pick = order[first_idx]
    best_gain[winners] = gain[pick]
    best_feat[winners] = col_c[pick]
    best_thr[winners] = thr_c[pick]
    return best_gain, best_feat, best_thr


def _dense_column(csc_indptr, csc_rows, csc_vals, col, n_rows):
    dense = np.zeros(n_rows, dtype=np.float64)
    lo, hi = csc_indptr[col], csc_indptr[col + 1]
    dense[csc_rows[lo:hi]] = csc_vals[lo:hi]
    return dense


def route_rows(csc_indptr, csc_rows, csc_vals, n_rows, node_of_row,
               split_feat, split_thr, next_left, next_right):
    """Move rows to next-level slots; -1 for rows whose leaf is settled."""
    out = np.full(n_rows, -1, dtype=np.int64)
    for slot in range(len(split_feat)):
        if split_feat[slot] < 0:
            continue
        rows = np.flatnonzero(node_of_row == slot)
        if len(rows) == 0:
            continue
        column = _dense_column(csc_indptr, csc_rows, csc_vals,
                               int(split_feat[slot]), n_rows)
        goes_left = column[rows] < split_thr[slot]
        out[rows[goes_left]] = next_left[slot]
        out[rows[~goes_left]] = next_right[slot]
    return out


def predict_forest(csc_indptr, csc_rows, csc_vals, n_rows,
                   roots, feat, thr, left, right, leaf):
    """Sum of leaf weights across trees for every row."""
    out = np.zeros(n_rows, dtype=np.float64)
    all_rows = np.arange(n_rows)
    for root in roots:
        stack = [(int(root), all_rows)]
        while stack:
            node, rows = stack.pop()
            if len(rows) == 0:
                continue
            if feat[node] < 0:
                out[rows] += leaf[node]
                continue
            column = _dense_column(csc_indptr, csc_rows, csc_vals,
                                   int(feat[node]), n_rows)
            goes_left = column[rows] < thr[node]
            stack.append((int(left[node]), rows[goes_left]))
            stack.append((int(right[node]), rows[~goes_left]))
    return out
