"""Time the compiled merge kernels against the pure-Python fallback.

Both backends must produce identical merge sequences; this script checks
that on every input it times, then reports per-size wall times and the
speedup.  Run from the repository root:

    python3 benchmarks/bench_linkage.py --sizes 40,80,160 --repeats 3
"""

import argparse
import sys
import time

import numpy as np

from scmkit.clustering import _kernels_py

try:
    from scmkit.clustering import _kernels as _compiled
except ImportError:
    _compiled = None


def random_distance(rng: np.random.Generator, n: int) -> np.ndarray:
    half = rng.random((n, n))
    dist = np.triu(half, 1)
    return dist + dist.T


def time_call(fn, *args, repeats: int) -> tuple[float, np.ndarray]:
    best = float("inf")
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_average(rng: np.random.Generator, n: int, repeats: int) -> tuple[float, float]:
    dist = random_distance(rng, n)
    t_py, out_py = time_call(_kernels_py.average_linkage_merges, dist, repeats=repeats)
    t_c, out_c = time_call(_compiled.average_linkage_merges, dist, repeats=repeats)
    if not np.array_equal(out_py, out_c):
        raise AssertionError(f"average-linkage outputs differ at n={n}")
    return t_py, t_c


def bench_constrained(rng: np.random.Generator, n: int, repeats: int) -> tuple[float, float]:
    dist = random_distance(rng, n)
    n_slots = max(2, n // 4)
    labels = np.concatenate([
        np.arange(n_slots), rng.integers(0, n_slots, size=n - n_slots)
    ]).astype(np.intp)
    new_only = np.ones(n_slots, dtype=bool)
    new_only[0] = False  # keep one seed slot so merging has an anchor
    n_merges = n_slots - 2
    args = (dist, labels, new_only, n_merges)
    t_py, out_py = time_call(
        _kernels_py.constrained_single_linkage_merges, *args, repeats=repeats
    )
    t_c, out_c = time_call(
        _compiled.constrained_single_linkage_merges, *args, repeats=repeats
    )
    if not np.array_equal(out_py, out_c):
        raise AssertionError(f"constrained-linkage outputs differ at n={n}")
    return t_py, t_c


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument(
        "--sizes", default="40,80,160",
        help="comma-separated point counts (default 40,80,160)",
    )
    parser.add_argument(
        "--repeats", type=int, default=3,
        help="timing repeats per size, best-of (default 3)",
    )
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _compiled is None:
        print("compiled kernels unavailable; nothing to compare", file=sys.stderr)
        return 1

    sizes = [int(s) for s in args.sizes.split(",") if s]
    rng = np.random.default_rng(args.seed)

    header = f"{'kernel':<12} {'n':>5} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        for name, bench in (("average", bench_average), ("constrained", bench_constrained)):
            t_py, t_c = bench(rng, n, args.repeats)
            print(
                f"{name:<12} {n:>5} {t_py * 1e3:>9.2f}ms {t_c * 1e3:>9.2f}ms "
                f"{t_py / t_c:>7.1f}x"
            )
    print("outputs identical on every timed input")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
