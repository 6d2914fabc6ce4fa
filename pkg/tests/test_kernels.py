import os
import subprocess
import sys

import numpy as np
import pytest

from polybubble import _kernels
from polybubble.radial import RadialSum, bubble_profile

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba backend disabled")


def _data(rng):
    N = 7
    y = rng.normal(size=(500, N))
    centers = rng.normal(scale=3.0, size=(6, N))
    mu = rng.uniform(1.0, 20.0, 6)
    return N, y, centers, mu


@needs_numba
def test_backends_agree(rng):
    N, y, centers, mu = _data(rng)
    prof = bubble_profile(2, N).neg_laplacian_power(1)
    packs = (_kernels.pack_dense(*prof._arrays()),
             _kernels.pack_dense(*prof.derivative().shift_r(-1)._arrays()),
             _kernels.pack_dense(*prof.laplacian()._arrays()))
    exps = rng.integers(0, 4, size=(9, N))
    coeffs = rng.normal(size=9)
    rho = np.linalg.norm(y, axis=1)
    g = RadialSum({(0, 3): 1, (2, 4): -2, (4, 5): 1, (1, 0): 3}, N)
    frac = RadialSum({(0, 3): 1}, N)
    cases = [
        lambda b: _kernels.pairwise_rowsums(centers, 5.0, backend=b),
        lambda b: _kernels.radial_eval(rho, *g._arrays(), backend=b),
        lambda b: _kernels.radial_eval(rho, np.array([1.5]), np.array([0.5]), np.array([2.7]), backend=b),
        lambda b: _kernels.radial_eval(rho, *frac._arrays(), backend=b),
        lambda b: np.concatenate([a.ravel() for a in _kernels.radial_jet(y, centers[0], *packs, backend=b)]),
        lambda b: _kernels.poly_eval(y, exps, coeffs, backend=b),
        lambda b: np.concatenate([a.ravel() for a in _kernels.poly_value_grad(y, exps, coeffs, backend=b)]),
        lambda b: _kernels.weight_sum(y, centers, mu, 2.5, 4.9, backend=b),
        lambda b: _kernels.sigma(y, centers, mu, 2.4, backend=b),
        lambda b: _kernels.bubble_values(y, centers, mu, 3.0, 2.5, backend=b),
        lambda b: _kernels.power_excess(np.abs(y[:, :4]), 1.8, backend=b),
    ]
    for fn in cases:
        a, b = np.asarray(fn("numpy")), np.asarray(fn("numba"))
        assert a.shape == b.shape
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14 * np.max(np.abs(a)))


def test_radial_eval_matches_formula(rng):
    rho = rng.uniform(0.1, 5.0, 100)
    out = _kernels.radial_eval(rho, np.array([2.0, -1.0]), np.array([2.0, 0.0]), np.array([3.0, 1.0]))
    assert np.allclose(out, 2 * rho ** 2 * (1 + rho ** 2) ** -1.5 - (1 + rho ** 2) ** -0.5, rtol=1e-14)


def test_power_excess_is_superadditivity_gap(rng):
    v = rng.uniform(0.0, 3.0, (200, 3))
    p = 1.4
    ex = _kernels.power_excess(v, p)
    assert np.allclose(ex, v.sum(axis=1) ** p - (v ** p).sum(axis=1), rtol=1e-12, atol=1e-14)
    assert np.all(ex >= -1e-14)


def test_unknown_backend_request():
    if _kernels.HAVE_NUMBA:
        pytest.skip("numba present")
    with pytest.raises(RuntimeError):
        _kernels.sigma(np.zeros((1, 3)), np.zeros((1, 3)), np.ones(1), 1.0, backend="numba")


def test_env_var_selects_numpy():
    env = dict(os.environ, POLYBUBBLE_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", "import polybubble._kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_pairwise_rowsums_hand_value():
    pts = np.array([[0.0], [1.0], [2.0]])
    assert _kernels.pairwise_rowsums(pts, 2.0).tolist() == [1.25, 2.0, 1.25]
