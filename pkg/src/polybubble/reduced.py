"""The finite-dimensional height and center equations.

Heights solve a_j^kappa = B sum_i d_ji a_i with kappa > 1; the bubble
heights follow from mu_j^(-s) = a_j L^(-e), e = (N-2m)^2 / (2(beta-N+2m)).
Centers move off the lattice by O(1/mu^2) through the balance between the
K-gradient term and the interaction gradient.
"""

from dataclasses import dataclass, field

import numpy as np

from . import lattice as lat_mod
from .errors import ConfigError, ConvergenceError, IdentityFailure


@dataclass(frozen=True)
class HeightSystem:
    d: lat_mod.InteractionMatrix
    kappa: float
    B: float = 1.0

    def __post_init__(self):
        if not self.kappa > 1.0:
            raise ConfigError(f"kappa must exceed 1 (beta > N-2m), got {self.kappa}")
        if not self.B > 0.0:
            raise ConfigError(f"B must be positive, got {self.B}")
        if self.n < 2:
            raise ConfigError("the height system needs at least two bubbles")

    @property
    def n(self):
        return self.d.n

    def fixed_point_map(self, a):
        return (self.B * (self.d.d @ a)) ** (1.0 / self.kappa)

    def residual_vector(self, a):
        return a ** self.kappa - self.B * (self.d.d @ a)

    def residual(self, a):
        """max_j |a_j^kappa - B (d a)_j|, divided by max(1, max_j a_j^kappa)."""
        return float(np.max(np.abs(self.residual_vector(a))) / max(1.0, np.max(a ** self.kappa)))

    def jacobian(self, a):
        return np.diag(self.kappa * a ** (self.kappa - 1.0)) - self.B * self.d.d

    def scaled(self, t):
        return HeightSystem(lat_mod.InteractionMatrix(self.d.d * t, self.d.row_sums * t), self.kappa, self.B)


@dataclass
class HeightSolution:
    a: np.ndarray
    residual: float
    iterations: int
    newton_steps: int
    mu: np.ndarray = None
    bounds: dict = field(default_factory=dict)


def system_from_config(cfg, lat, B):
    d = lat_mod.interaction_matrix(lat, cfg.N, cfg.m)
    return HeightSystem(d, cfg.kappa, float(B))


def solve_heights(sys, tol=1e-12, a0=None, relax=0.7, switch=1e-3, max_iter=20000, max_newton=50):
    """Damped fixed point a <- (1-w) a + w (B d a)^(1/kappa), then Newton.

    The default start is the row-sum guess (B rowsum_j)^(1/(kappa-1)).
    Raises ConvergenceError when the residual stalls above ``tol``. The
    residual is absolute for heights of order one and relative to the
    largest a_j^kappa beyond that, so ``tol`` stays meaningful in double
    precision whatever the size of B.
    """
    k = sys.kappa
    if a0 is None:
        a = (sys.B * sys.d.row_sums) ** (1.0 / (k - 1.0))
    else:
        a = np.array(a0, dtype=np.float64)
        if a.shape != (sys.n,) or np.any(a <= 0):
            raise ValueError("initial heights must be a positive vector of length n")
    res = sys.residual(a)
    it = 0
    while res > switch and it < max_iter:
        a = (1.0 - relax) * a + relax * sys.fixed_point_map(a)
        if not np.all(np.isfinite(a)) or a.min() <= 1e-300:
            raise ConvergenceError("heights collapsed to zero; the interaction row sums are too small",
                                   last_residual=res)
        res = sys.residual(a)
        it += 1
    nsteps = 0
    while res > tol and nsteps < max_newton:
        step = np.linalg.solve(sys.jacobian(a), -sys.residual_vector(a))
        # keep iterates positive
        t = 1.0
        while np.any(a + t * step <= 0):
            t *= 0.5
        new = a + t * step
        new_res = sys.residual(new)
        nsteps += 1
        if new_res >= res and t == 1.0 and res < 1e3 * tol:
            break
        a, res = new, new_res
    if res > tol:
        raise ConvergenceError(f"height solver stopped at residual {res:.3e} > tol {tol:.1e}",
                               last_residual=res)
    sol = HeightSolution(a, float(res), it, nsteps)
    sol.bounds = check_bounds(sys, a)
    return sol


def check_bounds(sys, a, rtol=1e-9):
    """(min a)^(kappa-1) >= B c0 and (max a)^(kappa-1) <= B c1."""
    lo = a.min() ** (sys.kappa - 1.0)
    hi = a.max() ** (sys.kappa - 1.0)
    report = {"min_a_pow": float(lo), "B_c0": sys.B * sys.d.c0,
              "max_a_pow": float(hi), "B_c1": sys.B * sys.d.c1}
    if lo < sys.B * sys.d.c0 * (1.0 - rtol) or hi > sys.B * sys.d.c1 * (1.0 + rtol):
        raise IdentityFailure("height solution violates the row-sum bounds", report=report)
    return report


@dataclass
class UniquenessReport:
    restarts: int
    spread: float
    max_residual: float
    reference: np.ndarray
    worst: np.ndarray

    @property
    def ok(self):
        return self.spread < 10.0 * self.tol

    tol: float = 1e-12


def uniqueness_stress(sys, restarts=20, tol=1e-12, seed=0):
    """Solve from random starts in [0.1, 10]^n and measure the spread."""
    if restarts < 10:
        raise ValueError("uniqueness stress needs at least 10 restarts")
    rng = np.random.default_rng(seed)
    ref = solve_heights(sys, tol=tol)
    spread = 0.0
    worst = ref.a
    max_res = ref.residual
    for _ in range(restarts):
        sol = solve_heights(sys, tol=tol, a0=rng.uniform(0.1, 10.0, sys.n))
        gap = float(np.max(np.abs(sol.a - ref.a)))
        max_res = max(max_res, sol.residual)
        if gap > spread:
            spread, worst = gap, sol.a
    return UniquenessReport(restarts, spread, max_res, ref.a, worst, tol)


@dataclass
class LinearBound:
    sampled: float
    sigma_min: float
    eig_min: float


def linearized_matrix(sys, a):
    """(A X)_j = kappa a_j^(kappa-1) X_j - B sum_i d_ji X_i."""
    return sys.jacobian(np.asarray(a, dtype=np.float64))


def linearized_bound(sys, sol, samples=200, seed=0):
    """Sampled min of ||A X||_inf over max-norm unit X, with the smallest singular value."""
    A = linearized_matrix(sys, sol.a)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (samples, sys.n))
    X /= np.max(np.abs(X), axis=1, keepdims=True)
    sampled = float(np.min(np.max(np.abs(X @ A.T), axis=1)))
    sv = np.linalg.svd(A, compute_uv=False)
    eig = np.linalg.eigvalsh(0.5 * (A + A.T))
    out = LinearBound(sampled, float(sv.min()), float(eig.min()))
    if not out.sigma_min > 0.0:
        raise IdentityFailure(f"linearized operator is singular: sigma_min={out.sigma_min}")
    return out


def energy_F(sys, x):
    """F(x) = sum |x_j|^(kappa+1)/(kappa+1) - (1/2) x.d.x and its gradient."""
    x = np.asarray(x, dtype=np.float64)
    k = sys.kappa
    dx = sys.d.d @ x
    F = float(np.sum(np.abs(x) ** (k + 1.0)) / (k + 1.0) - 0.5 * x @ dx)
    grad = np.abs(x) ** (k - 1.0) * x - dx
    return F, grad


def to_energy_variables(sys, a):
    """x = a B^(-1/(kappa-1)) turns a^kappa = B d a into grad F(x) = 0."""
    return np.asarray(a) * sys.B ** (-1.0 / (sys.kappa - 1.0))


def height_exponent(cfg):
    """e with mu_j^(-s) = a_j L^(-e)."""
    return (cfg.N - 2 * cfg.m) ** 2 / (2.0 * (cfg.beta - cfg.N + 2 * cfg.m))


def recover_mu(a, cfg, L=None):
    """mu_j = (L^e / a_j)^(1/s)."""
    L = cfg.L if L is None else L
    return (L ** height_exponent(cfg) / np.asarray(a)) ** (1.0 / cfg.s)


def fit_slope(Ls, values):
    """Least-squares slope of log(values) against log(L); nan for fewer than two points."""
    if len(Ls) < 2:
        return float("nan")
    return float(np.polyfit(np.log(np.asarray(Ls, dtype=float)), np.log(np.asarray(values, dtype=float)), 1)[0])


# ---------------------------------------------------------------------------
# centers
# ---------------------------------------------------------------------------

@dataclass
class CenterSolution:
    x: np.ndarray
    offsets: np.ndarray
    envelope: float

    @property
    def max_offset(self):
        return float(np.max(np.linalg.norm(self.offsets, axis=1)))


def interaction_gradient(centers, mu, j, amp, s, h=1e-4):
    """Gradient at x_j of sum_{i != j} U_i, by Richardson-extrapolated central differences."""
    others = [i for i in range(len(mu)) if i != j]
    C = centers[others]
    M = mu[others]
    N = centers.shape[1]

    def field(y):
        d2 = np.sum((y[None, :] - C) ** 2, axis=1)
        return float(np.sum(amp * M ** s / (1.0 + M * M * d2) ** s))

    x = centers[j]
    grad = np.empty(N)
    for t in range(N):
        e = np.zeros(N)
        e[t] = 1.0
        d1 = (field(x + h * e) - field(x - h * e)) / (2 * h)
        d2 = (field(x + 0.5 * h * e) - field(x - 0.5 * h * e)) / h
        grad[t] = (4.0 * d2 - d1) / 3.0
    return grad


def center_offsets(cfg, P, mu, consts):
    """Linearised center balance at x = P.

    Setting the K-gradient term -a_t C1 mu^(2-beta) delta_t against the
    interaction term mu^(-s) I grad(sum_{l != j} U_l)(x_j) gives
    delta_t = mu^(beta-2-s) I grad_t / (a_t C1).
    """
    a = np.asarray(cfg.a) / cfg.K0
    s = cfg.s
    amp = consts.tildeC_m
    out = np.zeros_like(P)
    for j in range(P.shape[0]):
        g = interaction_gradient(P, mu, j, amp, s)
        out[j] = mu[j] ** (cfg.beta - 2.0 - s) * consts.I_bubble * g / (a * consts.C1)
    return out


def refine_centers(cfg, lat, sol, consts, envelope_c=None, symmetrize=True):
    """One Newton step on the center equations about x_j = P_j.

    The envelope check |x_j - P_j| <= c / min(mu)^2 uses ``envelope_c``
    (default: 10 times the observed constant, i.e. a pure report). With
    ``symmetrize`` the offsets of a mirror-symmetric lattice are averaged
    with their mirror images, which removes finite-difference noise.
    """
    P = lat.embedded(cfg.N)
    mu = sol.mu if sol.mu is not None else recover_mu(sol.a, cfg, lat.L)
    off = center_offsets(cfg, P, mu, consts)
    mirror = lat.mirror_map()
    if symmetrize and mirror is not None and np.allclose(mu, mu[mirror], rtol=1e-12, atol=0):
        off[:, : lat.k] = 0.5 * (off[:, : lat.k] - off[mirror, : lat.k])
    mubar = float(np.min(mu))
    observed = float(np.max(np.linalg.norm(off, axis=1))) * mubar ** 2
    c = envelope_c if envelope_c is not None else max(10.0 * observed, 1e-300)
    if observed > c:
        raise IdentityFailure(f"center offsets exceed c/mu^2 with c={c}: observed constant {observed}")
    return CenterSolution(P + off, off, observed)


def center_balance_scalar(cfg, consts, mu, delta, other, j_axis=0):
    """Unlinearised balance along one lattice axis for a two-bubble pair.

    Bubble at x = delta e_1 (its lattice point is 0) and a partner at
    ``other`` with the same height. The K-term uses the exact shifted
    one-dimensional marginal, the interaction term the exact bubble field.
    """
    from .quadrature import _marginal_prefactor, marginal_integral

    N, m, beta = cfg.N, cfg.m, float(cfg.beta)
    a_t = cfg.a[j_axis] / cfg.K0
    mstar = cfg.mstar
    kterm = beta * a_t / mstar * mu ** (1.0 - beta) * _marginal_prefactor(m, N) * \
        marginal_integral(N, beta - 1.0, mu * delta, odd=True)
    x = np.zeros((2, N))
    x[0, j_axis] = delta
    x[1] = other
    g = interaction_gradient(x, np.array([mu, mu]), 0, consts.tildeC_m, cfg.s)
    return kterm + mu ** (-cfg.s) * consts.I_bubble * g[j_axis]


# ---------------------------------------------------------------------------
# L-ladder
# ---------------------------------------------------------------------------

@dataclass
class LadderRow:
    L: float
    n: int
    kappa: float
    B: float
    residual: float
    a_min: float
    a_max: float
    mu_min: float
    mu_max: float
    max_offset: float
    mu_refined_min: float
    mu_refined_max: float


def heights_with_centers(cfg, x, L, B, tol=1e-12, a0=None):
    """Re-solve heights with d_ij = (|x_i - x_j| / L)^-(N-2m) for actual centers x."""
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) / L
    n = x.shape[0]
    d = np.zeros((n, n))
    off = ~np.eye(n, dtype=bool)
    d[off] = dist[off] ** (-(cfg.N - 2 * cfg.m))
    sys = HeightSystem(lat_mod.InteractionMatrix(d, d.sum(axis=1)), cfg.kappa, B)
    return sys, solve_heights(sys, tol=tol, a0=a0)


def mu_ladder(cfg, lat, consts, Ls, tol=1e-12):
    """Heights, centers and refined heights for each L.

    Returns (rows, slope of mean refined mu against L, per-L solutions).
    """
    B = consts.B
    base_sys = system_from_config(cfg, lat, B)
    base = solve_heights(base_sys, tol=tol)
    rows = []
    sols = []
    for L in Ls:
        lat_L = lat.with_L(L)
        cfgL = cfg.replace(L=float(L))
        sol = HeightSolution(base.a.copy(), base.residual, base.iterations, base.newton_steps,
                             recover_mu(base.a, cfgL, L), base.bounds)
        cen = refine_centers(cfgL, lat_L, sol, consts)
        _, ref = heights_with_centers(cfgL, cen.x, L, B, tol=tol, a0=base.a)
        mu_ref = recover_mu(ref.a, cfgL, L)
        rows.append(LadderRow(float(L), lat.n, cfg.kappa, B, ref.residual, float(ref.a.min()),
                              float(ref.a.max()), float(sol.mu.min()), float(sol.mu.max()),
                              cen.max_offset, float(mu_ref.min()), float(mu_ref.max())))
        sols.append((sol, cen, ref, mu_ref))
    slope = fit_slope(Ls, [np.exp(np.mean(np.log(s[3]))) for s in sols])
    return rows, slope, sols
