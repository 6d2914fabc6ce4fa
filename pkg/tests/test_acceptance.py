"""The nine acceptance criteria, one test each.

Every test prints a single PASS/FAIL line (visible with ``pytest -s`` or in
the captured output of a failure) before asserting.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from polybubble import bubbles, cli, lattice, pohozaev, quadrature, reduced
from polybubble.radial import polyharmonic_constant, verify_bubble_pde


def _report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_1_exact_pde_kernel(capsys):
    lines, ok = [], True
    for m, N in ((1, 5), (2, 7), (3, 9), (2, 10)):
        t = time.perf_counter()
        res = verify_bubble_pde(m, N)
        dt = time.perf_counter() - t
        ok &= res.is_zero() and dt < 1.0
        lines.append(f"({m},{N}) zero={res.is_zero()} {dt:.3f}s")
    _report(capsys, 1, ok, "; ".join(lines))


def test_criterion_2_polyharmonic_constants(capsys):
    c1 = {N: polyharmonic_constant(1, N) for N in range(3, 16)}
    exact = (all(v == 1 and isinstance(v, Fraction) for v in c1.values())
             and polyharmonic_constant(2, 7) == Fraction(6) and polyharmonic_constant(2, 10) == Fraction(12))
    grid = [(m, N) for m in range(1, 5) for N in range(2 * m + 1, 16)]
    positive = all(polyharmonic_constant(m, N) > 0 for m, N in grid)
    _report(capsys, 2, exact and positive,
            f"c'_1=1, c'_2(7)={polyharmonic_constant(2, 7)}, c'_2(10)={polyharmonic_constant(2, 10)}; "
            f"positive on {len(grid)} (m,N) pairs: {positive}")


def test_criterion_3_pohozaev_round_trips(capsys):
    t = time.perf_counter()
    recs = pohozaev.roundtrip_suite((1, 2, 3), N=5, pairs=10, seed=2024, degree=30, radial_nodes=16)
    dt = time.perf_counter() - t
    worst = {m: max(max(r["f_rel_error"], r["g_rel_error"]) for r in recs if r["m"] == m) for m in (1, 2, 3)}
    ok = len(recs) == 30 and all(w < 1e-7 for w in worst.values()) and dt < 60.0
    _report(capsys, 3, ok, f"worst rel error per m {worst}; {len(recs)} pairs in {dt:.1f}s")


def test_criterion_4_vanishing_identities(capsys):
    rng = np.random.default_rng(44)
    from polybubble.fields import random_smooth_radial
    radial_worst = 0.0
    for m in (1, 2, 3):
        for _ in range(3):
            N = 7
            val, scale = pohozaev.radial_vanishing_f(m, random_smooth_radial(rng, N), random_smooth_radial(rng, N),
                                                     rng.uniform(-0.5, 0.5, N), 0.8, int(rng.integers(N)), 8)
            radial_worst = max(radial_worst, abs(val) / scale)
    g_worst, transport = 0.0, 0.0
    for m, N in ((1, 7), (2, 7), (3, 7)):
        rep = pohozaev.verify_V_identities(m, N, 2.0)
        g_worst = max(g_worst, abs(rep["gVV"]["value"]) / rep["gVV"]["scale"])
        for a, b in rep["pairs"].values():
            sc = max(a["rescaled_scale"], b["rescaled_scale"])
            if sc > 0:
                transport = max(transport, abs(a["rescaled"] - b["rescaled"]) / sc)
        for v in rep["mixed"]["values"]:
            transport = max(transport, abs(v["integral"] - rep["mixed"]["expected"]) / abs(rep["mixed"]["expected"]))
    ok = radial_worst < 1e-10 and g_worst < 1e-9 and transport < 1e-8
    _report(capsys, 4, ok, f"radial f {radial_worst:.2e} (<1e-10), g(V,V) {g_worst:.2e} (<1e-9), "
                           f"two-radius transport {transport:.2e} (<1e-8)")


def _random_admissible_system(rng):
    k = int(rng.integers(1, 3))
    N = 7 if k == 1 else 9
    n = int(rng.integers(2, 201))
    box = int(np.ceil(n ** (1.0 / k))) + 3
    pts = set()
    while len(pts) < n:
        pts.add(tuple(int(v) for v in rng.integers(-box, box + 1, k)))
    lat = lattice.generate(k, "explicit-list", points=sorted(pts), N=N, m=1)
    s = 0.5 * (N - 2)
    beta = rng.uniform(N - 2 + 0.5, N - 0.1)
    return reduced.HeightSystem(lattice.interaction_matrix(lat, N, 1), (beta - s) / s, float(rng.uniform(0.5, 2.0)))


def test_criterion_5_solver_uniqueness(capsys):
    rng = np.random.default_rng(55)
    t = time.perf_counter()
    spread = res = 0.0
    smin = np.inf
    sizes = []
    for trial in range(10):
        sys_ = _random_admissible_system(rng)
        sizes.append(sys_.n)
        rep = reduced.uniqueness_stress(sys_, restarts=20, tol=1e-12, seed=trial)
        lb = reduced.linearized_bound(sys_, reduced.solve_heights(sys_))
        spread, res, smin = max(spread, rep.spread), max(res, rep.max_residual), min(smin, lb.sigma_min)
    dt = time.perf_counter() - t
    ok = spread < 1e-10 and smin > 0 and res < 1e-12 and dt < 10.0 and max(sizes) <= 200
    _report(capsys, 5, ok, f"n={sizes}: spread {spread:.2e}, min singular value {smin:.3e}, "
                           f"residual {res:.2e}, {dt:.2f}s")


@pytest.fixture(scope="module")
def scaling_setup(cfg71, consts71):
    return cfg71, lattice.generate(1, "full-box", radius=5), consts71


def test_criterion_6_scaling_law(capsys, scaling_setup):
    cfg, lat, consts = scaling_setup
    Ls = [8.0, 16.0, 32.0, 64.0]
    rows, slope, sols = reduced.mu_ladder(cfg, lat, consts, Ls)
    perm = lat.mirror_map()
    asym = max(float(np.max(np.abs(ref.a - ref.a[perm]) / ref.a)) for _, _, ref, _ in sols)
    base = reduced.solve_heights(reduced.system_from_config(cfg, lat, consts.B))
    asym = max(asym, float(np.max(np.abs(base.a - base.a[perm]) / base.a)))
    ok = abs(slope - 5.0) / 5.0 < 0.01 and asym < 1e-10
    _report(capsys, 6, ok, f"slope {slope:.8f} vs 5 (rel {abs(slope - 5) / 5:.1e}); "
                           f"mirror height asymmetry {asym:.1e}")


def test_criterion_7_residual_decay(capsys, scaling_setup):
    cfg, lat, consts = scaling_setup
    lad = bubbles.residual_ladder(cfg, lat, consts, [8.0, 16.0, 32.0, 64.0])
    ok = lad.decreasing and lad.rel_gap < 0.25
    _report(capsys, 7, ok, f"||l_L||_** = {[f'{v:.3e}' for v in lad.norms]}; slope {lad.slope:.3f} vs "
                           f"predicted {lad.predicted:.3f} (gap {100 * lad.rel_gap:.1f}%)")


def test_criterion_8_quadrature_oracles(capsys):
    worst_beta = 0.0
    for a in np.linspace(0.25, 14.0, 12):
        for extra in (0.3, 1.0, 2.5, 7.0):
            b = 0.5 * (a + extra)
            worst_beta = max(worst_beta, abs(quadrature.quad_power(a, b)[0] / quadrature.beta_radial(a, b) - 1))

    class NM:
        N, m = 7, 1

    for w in quadrature.WEIGHTS:
        for p in (0.0, 1.5, -2.5):
            mom = quadrature.radial_moment(NM, p, w)
            if mom.closed_form != 0.0:
                worst_beta = max(worst_beta, mom.rel_gap)
    # int U^(m*-1) psi0 = 0 (dilation derivative of a scale-invariant mass)
    zero = quadrature.radial_moment(NM, 0.0, "U^mstar-1*psi0")
    mass = quadrature.radial_moment(NM, 0.0, "U^mstar").value
    worst_beta = max(worst_beta, abs(zero.value) / mass, abs(zero.closed_form) / mass)
    worst_odd = 0.0
    rng = np.random.default_rng(8)
    for N, deg in ((3, 15), (5, 11), (7, 9), (9, 5)):
        rule = quadrature.sphere_quadrature(N, deg)
        for _ in range(6):
            e = rng.integers(0, 4, N)
            if e.sum() % 2 == 0:
                e[int(rng.integers(N))] += 1
            f = np.prod(rule.nodes ** e, axis=1) * np.exp(rule.nodes[:, 0] ** 2)
            worst_odd = max(worst_odd, abs(rule.integrate(f)) / rule.integrate(np.abs(f)))
    ok = worst_beta < 1e-10 and worst_odd < 1e-12
    _report(capsys, 8, ok, f"Beta closed forms worst rel {worst_beta:.1e}; odd sphere integrals {worst_odd:.1e}")


def test_criterion_9_reproducibility(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("N = 7\nm = 1\nk = 1\nbeta = 6\nlattice.radius = 5\nL_scan = 8, 16, 32, 64\n"
                   "pohozaev.pairs = 2\npohozaev.degree = 20\nnorm.radial = 24\n")
    same = {}
    for command in cli.COMMANDS:
        blobs = []
        for k in range(2):
            out = tmp_path / f"{command}-{k}"
            cli.main([command, "--config", str(cfg), "--out", str(out), "--seed", "9"])
            blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        same[command] = bool(blobs[0]) and blobs[0] == blobs[1]
    _report(capsys, 9, all(same.values()), f"byte-identical reruns: {same}")
