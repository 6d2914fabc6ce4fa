"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are called through the public wrappers with an explicit
``backend=`` argument, so a single process measures both. Outputs are
checked for agreement before timing.
"""

import argparse
import time

import numpy as np

from polybubble import _kernels
from polybubble.radial import RadialSum, bubble_profile


def _cases(rng):
    N = 7
    y = rng.normal(size=(200_000, N))
    centers = rng.normal(scale=10.0, size=(64, N))
    mu = rng.uniform(1.0, 50.0, 64)
    prof = bubble_profile(2, N).neg_laplacian_power(1)
    packs = [_kernels.pack_dense(*prof._arrays()), _kernels.pack_dense(*prof.derivative().shift_r(-1)._arrays())]
    exps = rng.integers(0, 4, size=(12, N))
    coeffs = rng.normal(size=12)
    lat = rng.normal(size=(1500, 3))
    vals = np.abs(rng.normal(size=(200_000, 8)))
    rho = np.sqrt(np.einsum("ij,ij->i", y, y))
    g = RadialSum({(0, 3): 1, (2, 4): -2, (4, 5): 1}, N)
    c, p, h = g._arrays()
    return {
        "pairwise_rowsums": lambda b: _kernels.pairwise_rowsums(lat, 5.0, backend=b),
        "radial_eval": lambda b: _kernels.radial_eval(rho, c, p, h, backend=b),
        "radial_jet": lambda b: _kernels.radial_jet(y, np.zeros(N), *packs, backend=b)[1],
        "poly_value_grad": lambda b: _kernels.poly_value_grad(y, exps, coeffs, backend=b)[1],
        "weight_sum": lambda b: _kernels.weight_sum(y[:20000], centers, mu, 2.5, 4.9, backend=b),
        "sigma": lambda b: _kernels.sigma(y[:20000], centers, mu, 2.4, backend=b),
        "bubble_values": lambda b: _kernels.bubble_values(y[:20000], centers, mu, 3.0, 2.5, backend=b),
        "power_excess": lambda b: _kernels.power_excess(vals, 1.8, backend=b),
    }


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is unavailable (or POLYBUBBLE_NUMBA=0); nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'max rel diff':>13}")
    for name, fn in _cases(rng).items():
        ref = np.asarray(fn("numpy"))
        got = np.asarray(fn("numba"))  # also triggers compilation
        diff = float(np.max(np.abs(ref - got)) / max(np.max(np.abs(ref)), 1e-300))
        t_np = _best(lambda: fn("numpy"), args.repeat)
        t_nb = _best(lambda: fn("numba"), args.repeat)
        print(f"{name:<18} {t_np:11.4f} {t_nb:11.4f} {t_np / t_nb:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
