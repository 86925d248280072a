"""Benchmark the numba kernel backend against the pure-numpy reference.

Times every hot kernel (matvec, rmatvec, split search, row routing,
forest prediction) plus one end-to-end GBDT training run on a seeded
synthetic sparse dataset, then prints a comparison table. Agreement
between backends is checked on every kernel output; a mismatch fails
the run.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 50000 --cols 5000 --trees 40

If numba is not installed the script reports numpy timings alone.
"""

import argparse
import math
import sys
import time

import numpy as np

from secretsweep.features import FeatureVector, stack_features
from secretsweep.models import TrainConfig, train_gbdt
from secretsweep.models import kernels
from secretsweep.models.gbdt import _flatten


def build_dataset(n_rows, n_cols, nnz_per_row, seed):
    """Seeded sparse vectors shaped like TF-IDF rows, plus noisy labels."""
    rng = np.random.default_rng(seed)
    vectors = []
    labels = []
    for _ in range(n_rows):
        k = int(rng.integers(max(1, nnz_per_row // 2), nnz_per_row + 1))
        cols = np.sort(rng.choice(n_cols, size=k, replace=False))
        vals = rng.random(k) * 0.9 + 0.1
        vectors.append(FeatureVector(
            entries=tuple((int(c), float(v)) for c, v in zip(cols, vals)),
            dimension=n_cols,
        ))
        signal = vals[cols < n_cols // 10].sum()
        labels.append(int(signal + rng.normal(scale=0.2) > 0.5))
    return vectors, labels


def build_split_state(n_rows, labels, n_slots, seed):
    """Row-to-node assignment and gradient state partway through boosting."""
    rng = np.random.default_rng(seed)
    node_of_row = rng.integers(0, n_slots, size=n_rows).astype(np.int64)
    y = np.asarray(labels, dtype=np.float64)
    p = rng.uniform(0.05, 0.95, size=n_rows)
    g = p - y
    h = p * (1.0 - p)
    g_tot = np.bincount(node_of_row, weights=g, minlength=n_slots)
    h_tot = np.bincount(node_of_row, weights=h, minlength=n_slots)
    cnt_tot = np.bincount(node_of_row, minlength=n_slots).astype(np.int64)
    return node_of_row, g, h, g_tot, h_tot, cnt_tot


def time_call(fn, repeats):
    """Best wall time over `repeats` runs, after one untimed warmup."""
    result = fn()
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def fresh_matrix(vectors):
    """A SparseMatrix with no cached column view, so csc cost is counted
    at most once per backend rather than leaking across timings."""
    indptr, indices, data, shape = stack_features(vectors)
    return kernels.SparseMatrix.from_arrays(indptr, indices, data, shape)


def run_backend(name, vectors, labels, args, forest):
    kernels.set_backend(name)
    matrix = fresh_matrix(vectors)
    matrix.csc()  # materialize the column view outside the timings
    rng = np.random.default_rng(args.seed + 1)
    x = rng.normal(size=matrix.n_cols)
    v = rng.normal(size=matrix.n_rows)
    n_slots = 8
    node_of_row, g, h, g_tot, h_tot, cnt_tot = build_split_state(
        matrix.n_rows, labels, n_slots, args.seed + 2)
    lam = 1.0
    gain, feat, thr = kernels.best_splits(
        matrix, node_of_row, g, h, g_tot, h_tot, cnt_tot, lam, 1.0, n_slots)
    next_left = np.arange(n_slots, dtype=np.int64) * 2
    next_right = next_left + 1
    roots, ffeat, fthr, fleft, fright, fvalue = forest

    timings = {}
    outputs = {}
    timings["matvec"], outputs["matvec"] = time_call(
        lambda: kernels.matvec(matrix, x), args.repeats)
    timings["rmatvec"], outputs["rmatvec"] = time_call(
        lambda: kernels.rmatvec(matrix, v), args.repeats)
    timings["best_splits"], outputs["best_splits"] = time_call(
        lambda: kernels.best_splits(matrix, node_of_row, g, h,
                                    g_tot, h_tot, cnt_tot, lam, 1.0, n_slots),
        args.repeats)
    timings["route_rows"], outputs["route_rows"] = time_call(
        lambda: kernels.route_rows(matrix, node_of_row, feat, thr,
                                   next_left, next_right),
        args.repeats)
    timings["predict_forest"], outputs["predict_forest"] = time_call(
        lambda: kernels.predict_forest(matrix, roots, ffeat, fthr,
                                       fleft, fright, fvalue),
        args.repeats)

    config = TrainConfig(n_trees=args.trees, max_depth=args.depth, seed=0)
    t0 = time.perf_counter()
    model = train_gbdt(vectors, labels, config)
    timings["train_gbdt"] = time.perf_counter() - t0
    outputs["train_gbdt"] = model.metadata["loss_curve"][-1]
    return timings, outputs


def check_agreement(numpy_out, numba_out):
    """The backends must agree; exact for linear algebra and prediction,
    tight tolerance for split gains (summation order may differ)."""
    problems = []
    for key in ("matvec", "rmatvec", "predict_forest"):
        if not np.array_equal(numpy_out[key], numba_out[key]):
            problems.append(f"{key}: outputs differ")
    if not np.array_equal(numpy_out["route_rows"], numba_out["route_rows"]):
        problems.append("route_rows: outputs differ")
    np_gain, np_feat, np_thr = numpy_out["best_splits"]
    nb_gain, nb_feat, nb_thr = numba_out["best_splits"]
    if not np.array_equal(np_feat, nb_feat):
        problems.append("best_splits: chosen features differ")
    if not np.allclose(np_gain, nb_gain, rtol=1e-9, atol=1e-12):
        problems.append("best_splits: gains differ beyond tolerance")
    if not np.allclose(np_thr, nb_thr, rtol=1e-9, atol=1e-12):
        problems.append("best_splits: thresholds differ beyond tolerance")
    if not math.isclose(numpy_out["train_gbdt"], numba_out["train_gbdt"],
                        rel_tol=1e-9, abs_tol=1e-12):
        problems.append("train_gbdt: final training loss differs")
    return problems


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare numba and numpy kernel backends")
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--cols", type=int, default=2000)
    parser.add_argument("--nnz", type=int, default=12,
                        help="max nonzeros per row")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--trees", type=int, default=20)
    parser.add_argument("--depth", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    print(f"dataset: {args.rows} rows x {args.cols} cols, "
          f"<= {args.nnz} nnz/row, seed {args.seed}")
    vectors, labels = build_dataset(args.rows, args.cols, args.nnz, args.seed)

    # One small training run provides realistic trees for predict_forest.
    kernels.set_backend("numpy")
    subset = min(len(vectors), 3000)
    primer = train_gbdt(vectors[:subset], labels[:subset],
                        TrainConfig(n_trees=args.trees, max_depth=args.depth,
                                    seed=0))
    forest = _flatten(primer.trees)

    numpy_times, numpy_out = run_backend("numpy", vectors, labels, args,
                                         forest)
    try:
        kernels.set_backend("numba")
        have_numba = True
    except ImportError:
        have_numba = False

    if not have_numba:
        print("numba is not installed; numpy reference timings only\n")
        for name, seconds in numpy_times.items():
            print(f"{name:<16}{seconds * 1000:>10.2f} ms")
        return 0

    numba_times, numba_out = run_backend("numba", vectors, labels, args,
                                         forest)
    problems = check_agreement(numpy_out, numba_out)

    print()
    print(f"{'kernel':<16}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name in numpy_times:
        np_ms = numpy_times[name] * 1000
        nb_ms = numba_times[name] * 1000
        ratio = numpy_times[name] / numba_times[name]
        print(f"{name:<16}{np_ms:>10.2f} ms{nb_ms:>10.2f} ms{ratio:>9.1f}x")
    print()
    if problems:
        for problem in problems:
            print(f"MISMATCH: {problem}")
        return 1
    print("backend outputs agree on every kernel")
    return 0


if __name__ == "__main__":
    sys.exit(main())
