"""Compare the compiled segment-reduction kernels against the numpy fallback.

Runs both backends in-process on identical inputs, checks that every result
is bit-identical, and prints a timing table.

    python3 benchmarks/bench_kernels.py --n 100000 --degree 10
"""

import argparse
import time

import numpy as np

from graphtab import StructuralConfig, pagerank
from graphtab import _kernels_py as pure
from graphtab.synth import gnp_graph

try:
    from graphtab import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def _equal(a, b):
    if isinstance(a, tuple):
        return all(_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000, help="node count")
    ap.add_argument("--degree", type=float, default=10.0, help="mean degree")
    ap.add_argument("--features", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if compiled is None:
        raise SystemExit("compiled extension not built; nothing to compare")

    graph = gnp_graph(args.n, args.degree / args.n, seed=args.seed)
    offsets, cols = graph.row_offsets, graph.col_indices
    rng = np.random.default_rng(args.seed + 1)
    edge_vals = rng.standard_normal(cols.shape[0])
    edge_vals[rng.random(cols.shape[0]) < 0.05] = np.nan
    codes = rng.integers(-1, 6, size=cols.shape[0]).astype(np.int64)
    h = rng.standard_normal((args.n, args.features))

    cases = [
        ("seg_sum", lambda k: k.seg_sum(edge_vals, offsets)),
        ("seg_sum_sorted", lambda k: k.seg_sum_sorted(edge_vals, offsets)),
        ("seg_stats_skipna", lambda k: k.seg_stats_skipna(edge_vals, offsets)),
        ("seg_cat_counts", lambda k: k.seg_cat_counts(codes, offsets, 6)),
        ("mean_aggregate", lambda k: k.mean_aggregate(offsets, cols, h)),
    ]

    print(f"graph: n={graph.n_nodes}  edges={graph.n_edges}  "
          f"features={args.features}  repeats={args.repeats} (best shown)")
    print(f"{'kernel':<18} {'compiled':>12} {'pure numpy':>12} {'speedup':>9}")
    for name, call in cases:
        t_c, out_c = _time(lambda: call(compiled), args.repeats)
        t_p, out_p = _time(lambda: call(pure), args.repeats)
        tag = "" if _equal(out_c, out_p) else "  MISMATCH"
        print(f"{name:<18} {t_c * 1e3:>10.2f}ms {t_p * 1e3:>10.2f}ms "
              f"{t_p / t_c:>8.1f}x{tag}")

    cfg = StructuralConfig()
    t_pr, _ = _time(lambda: pagerank(graph, cfg), max(1, args.repeats // 2))
    print(f"\npagerank end-to-end ({'compiled' if compiled else 'pure'} "
          f"backend): {t_pr * 1e3:.1f}ms "
          f"(rerun with GRAPHTAB_PURE=1 for the fallback)")


if __name__ == "__main__":
    main()
