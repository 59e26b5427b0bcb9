"""Time the compiled and pure-Python SGD kernels on identical inputs.

    python benchmarks/bench_kernels.py [--steps N] [--dim D] [--repeat R]

Each kernel runs on fresh copies of the same factors and index streams under
both backends. Outputs are compared byte for byte before timings are shown.
"""

import argparse
import time

import numpy as np

from listrank import _pykernels

try:
    from listrank import _core
except ImportError:
    _core = None


def inputs(steps, dim, n_users=943, n_items=1682, seed=0):
    rng = np.random.default_rng(seed)
    cap = float(np.sqrt(5.0 / dim))
    U = rng.uniform(0, cap, (n_users, dim))
    V = rng.uniform(0, cap, (n_items, dim))
    users = rng.integers(0, n_users, steps, dtype=np.int64)
    items = rng.integers(0, n_items, steps, dtype=np.int64)
    k_users = rng.integers(0, n_users, steps, dtype=np.int64)
    k_items = rng.integers(0, n_items, steps, dtype=np.int64)
    values = rng.integers(1, 6, steps).astype(np.float64)
    return U, V, users, items, k_users, k_items, values, cap


def calls(mod, data):
    U, V, users, items, k_users, k_items, values, cap = data
    return {
        "listwise": lambda A, B: mod.listwise_steps(A, B, users, items, 1e-3, 1e-3, cap),
        "mf": lambda A, B: mod.mf_steps(A, B, users, items, values, 1e-3),
        "bpr": lambda A, B: mod.bpr_steps(A, B, users, items, k_users, k_items, 1e-3),
    }


def timed(fn, U, V, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        A, B = U.copy(), V.copy()
        t0 = time.perf_counter()
        fn(A, B)
        best = min(best, time.perf_counter() - t0)
        out = (A, B)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--dim", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    data = inputs(args.steps, args.dim)
    U, V = data[0], data[1]
    fast, slow = calls(_core, data), calls(_pykernels, data)
    print(f"{args.steps} steps, d={args.dim}, best of {args.repeat}")
    print(f"{'kernel':<10}{'cython s':>10}{'python s':>10}{'speedup':>9}  identical")
    for name in fast:
        tc, (Uc, Vc) = timed(fast[name], U, V, args.repeat)
        tp, (Up, Vp) = timed(slow[name], U, V, 1)
        same = Uc.tobytes() == Up.tobytes() and Vc.tobytes() == Vp.tobytes()
        print(f"{name:<10}{tc:>10.4f}{tp:>10.3f}{tp / tc:>8.0f}x  {same}")


if __name__ == "__main__":
    main()
