"""Multi-bubble fields, kernels Z, the weight sigma, weighted sup norms and the residual l_L."""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import _kernels
from .errors import ConfigError
from .quadrature import ball_integral, sphere_quadrature, surface_area
from .radial import bubble_constant


@dataclass(frozen=True)
class Bubble:
    center: np.ndarray
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        if not self.mu > 0:
            raise ConfigError(f"bubble height mu must be positive, got {self.mu}")


@dataclass
class BubbleField:
    bubbles: list
    cfg: object
    amp: float = field(init=False)

    def __post_init__(self):
        if not self.bubbles:
            raise ConfigError("a bubble field needs at least one bubble")
        c = self.centers
        if c.shape[1] != self.cfg.N:
            raise ConfigError(f"centers must live in R^{self.cfg.N}")
        diff = c[:, None, :] - c[None, :, :]
        d = np.einsum("ijk,ijk->ij", diff, diff) + np.eye(len(self.bubbles))
        if np.any(d == 0):
            raise ConfigError("bubble centers must be pairwise distinct")
        self.amp = float(bubble_constant(self.cfg.m, self.cfg.N))

    @classmethod
    def from_arrays(cls, centers, mu, cfg):
        return cls([Bubble(c, float(u)) for c, u in zip(np.atleast_2d(centers), np.atleast_1d(mu))], cfg)

    @property
    def centers(self):
        return np.array([b.center for b in self.bubbles])

    @property
    def mu(self):
        return np.array([b.mu for b in self.bubbles])

    def values(self, y):
        """U_j(y) for every point (rows) and bubble (columns)."""
        return _kernels.bubble_values(y, self.centers, self.mu, self.amp, self.cfg.s)

    def W(self, y):
        return self.values(y).sum(axis=1)


def eval_bubble(b, y, cfg):
    """C_m mu^s / (1 + mu^2 |y - x|^2)^s."""
    y = np.atleast_2d(y)
    amp = float(bubble_constant(cfg.m, cfg.N))
    return _kernels.bubble_values(y, b.center[None, :], np.array([b.mu]), amp, cfg.s)[:, 0]


# ---------------------------------------------------------------------------
# cutoff and kernels Z
# ---------------------------------------------------------------------------

def cutoff(r, degree=2):
    """Radial bump: 1 on [0, 1], 0 on [2, inf), smoothstep of order ``degree`` between.

    The transition is 1 - I_t(degree+1, degree+1) with t = r - 1, which has
    ``degree`` continuous derivatives at both ends.
    """
    t = np.clip(np.asarray(r, dtype=np.float64) - 1.0, 0.0, 1.0)
    return 1.0 - special.betainc(degree + 1, degree + 1, t)


def eval_Z(b, which, y, cfg, cutoff_degree=2):
    """xi(y - x) times dU/dx_which (which = 1..N) or dU/dmu (which = N+1)."""
    N, s = cfg.N, cfg.s
    if not 1 <= which <= N + 1:
        raise ValueError(f"which must be in 1..{N + 1}")
    y = np.atleast_2d(y)
    amp = float(bubble_constant(cfg.m, N))
    d = y - b.center
    r2 = np.einsum("ij,ij->i", d, d)
    q = 1.0 + b.mu ** 2 * r2
    if which <= N:
        dU = 2.0 * s * amp * b.mu ** (s + 2.0) * d[:, which - 1] * q ** (-s - 1.0)
    else:
        dU = s * amp * b.mu ** (s - 1.0) * (1.0 - b.mu ** 2 * r2) * q ** (-s - 1.0)
    return cutoff(np.sqrt(r2), cutoff_degree) * dU


def z_orthogonality(cfg, which=1, mu=1.0, cutoff_degree=2, degree=5, radial_nodes=32):
    """int U^(m*-2) Z_{N+1} Z_which over B_2; zero by oddness for which <= N.

    Returns (integral, integral of the absolute value).
    """
    b = Bubble(np.zeros(cfg.N), mu)
    p = cfg.mstar - 2.0

    def f(y):
        U = eval_bubble(b, y, cfg)
        return U ** p * eval_Z(b, cfg.N + 1, y, cfg, cutoff_degree) * eval_Z(b, which, y, cfg, cutoff_degree)

    tot = 0.0
    tot_abs = 0.0
    # split at r = 1 where the cutoff switches on
    for inner, outer in ((0.0, 1.0), (1.0, 2.0)):
        v, a = ball_integral(f, cfg.N, np.zeros(cfg.N), outer, degree, radial_nodes, inner)
        tot += float(v)
        tot_abs += float(a)
    return tot, tot_abs


# ---------------------------------------------------------------------------
# weights and norms
# ---------------------------------------------------------------------------

def sigma_weight(bf, y):
    return _kernels.sigma(y, bf.centers, bf.mu, bf.cfg.tau)


def weight(bf, y, kind):
    """sigma(y) times the comparison sum; the denominator of the weighted norms."""
    return sigma_weight(bf, y) * comparison_sum(bf, y, kind)


def comparison_sum(bf, y, kind):
    """sum_j mu_j^A / (1 + mu_j |y - x_j|)^(A + tau); A = (N-2m)/2 for '*', (N+2m)/2 for '**'."""
    N, m, tau = bf.cfg.N, bf.cfg.m, bf.cfg.tau
    A = 0.5 * (N - 2 * m) if kind == "*" else 0.5 * (N + 2 * m)
    return _kernels.weight_sum(y, bf.centers, bf.mu, A, A + tau)


@dataclass
class NormGrid:
    points: np.ndarray
    description: str
    radial: int
    sphere_degree: int


def make_grid(bf, radial=48, sphere_degree=3, r_min=1e-3, r_max=None, far=64):
    """Per-bubble log-polar grids unioned with a coarse far grid.

    Radii run from r_min/mu_j to r_max (default: half the minimal center
    spacing, or 1 for a single bubble) on a log scale; directions are the
    nodes of a low-degree sphere rule. The far grid samples the segment
    hull of the centers and a transverse shell.
    """
    N = bf.cfg.N
    C, M = bf.centers, bf.mu
    if r_max is None:
        if len(M) > 1:
            diff = C[:, None, :] - C[None, :, :]
            dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            r_max = 0.5 * float(np.min(dist[dist > 0]))
        else:
            r_max = 1.0
    dirs = np.asarray(sphere_quadrature(N, sphere_degree).nodes)
    pts = []
    for c, mu in zip(C, M):
        radii = np.concatenate([[0.0], np.geomspace(r_min / mu, r_max, radial)])
        pts.append((c[None, None, :] + radii[:, None, None] * dirs[None, :, :]).reshape(-1, N))
    lo, hi = C.min(axis=0), C.max(axis=0)
    span = hi - lo
    t = np.linspace(0.0, 1.0, far)
    line = lo[None, :] + t[:, None] * span[None, :]
    shell = []
    for rad in (0.5 * r_max, r_max, 2.0 * r_max):
        shell.append((line[:, None, :] + rad * dirs[None, :, :]).reshape(-1, N))
    pts.append(line)
    pts.extend(shell)
    grid = np.ascontiguousarray(np.concatenate(pts, axis=0))
    desc = (f"{len(M)} log-polar grids ({radial + 1} radii in [{r_min}/mu, {r_max:.6g}], "
            f"{dirs.shape[0]} directions) + far grid ({far} hull points, 3 shells)")
    return NormGrid(grid, desc, radial, sphere_degree)


@dataclass
class NormReport:
    star: float
    starstar: float
    sample_points: str
    sigma_min: float
    star_delta: float = 0.0
    starstar_delta: float = 0.0
    argmax_starstar: tuple = ()

    def to_dict(self):
        return {"star": self.star, "starstar": self.starstar, "sample_points": self.sample_points,
                "sigma_min": self.sigma_min, "star_delta": self.star_delta,
                "starstar_delta": self.starstar_delta, "argmax_starstar": list(self.argmax_starstar)}


def _ratios(bf, phi, y):
    vals = np.asarray(phi(y), dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("phi returned NaN or inf on the norm grid")
    sig = sigma_weight(bf, y)
    r1 = np.abs(vals) / (sig * comparison_sum(bf, y, "*"))
    r2 = np.abs(vals) / (sig * comparison_sum(bf, y, "**"))
    return r1, r2, sig


def star_norms(bf, phi, grid=None, refine=True):
    """Grid lower bounds of the * and ** norms of phi.

    With ``refine`` the grid is rebuilt with twice the radial density and a
    finer direction set; the deltas report how much the sup moved.
    """
    grid = grid if grid is not None else make_grid(bf)
    r1, r2, sig = _ratios(bf, phi, grid.points)
    i2 = int(np.argmax(r2))
    rep = NormReport(float(r1.max()), float(r2.max()), grid.description, float(sig.min()),
                     argmax_starstar=tuple(float(v) for v in grid.points[i2]))
    if refine:
        fine = make_grid(bf, radial=2 * grid.radial, sphere_degree=grid.sphere_degree + 2)
        f1, f2, _ = _ratios(bf, phi, fine.points)
        rep.star_delta = float(max(f1.max(), rep.star) - rep.star)
        rep.starstar_delta = float(max(f2.max(), rep.starstar) - rep.starstar)
    return rep


# ---------------------------------------------------------------------------
# synthetic K and the residual
# ---------------------------------------------------------------------------

def fold(y, k, clamp=0.5):
    """Reduce the first k coordinates mod 1 to [-1/2, 1/2); clamp the rest to [-clamp, clamp]."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    out = np.clip(y, -clamp, clamp)
    out[:, :k] = y[:, :k] - np.round(y[:, :k])
    return out


def K_minus_K0(y, cfg):
    """sum_i a_i |z_i|^beta for the folded point z."""
    z = np.abs(fold(y, cfg.k))
    return z ** cfg.beta @ np.asarray(cfg.a)


def synthetic_K(y, cfg):
    return cfg.K0 + K_minus_K0(y, cfg)


def residual_lL(bf, y, k_minus_one=None):
    """l_L = K W^(m*-1) - sum_j U_j^(m*-1), with K normalised by K0.

    Written as K (W^p - sum U^p) + (K - 1) sum U^p; the first bracket is
    evaluated without cancellation by the power-excess kernel.
    ``k_minus_one`` overrides K/K0 - 1 (a callable on points).
    """
    cfg = bf.cfg
    p = cfg.mstar - 1.0
    vals = bf.values(y)
    excess = _kernels.power_excess(vals, p)
    if k_minus_one is None:
        km1 = K_minus_K0(y, cfg) / cfg.K0
    else:
        km1 = np.broadcast_to(np.asarray(k_minus_one(y), dtype=np.float64), excess.shape)
    return (1.0 + km1) * excess + km1 * (vals ** p).sum(axis=1)


def field_from_ladder(cfg, lat, sols, index):
    """BubbleField for one rung of a mu-ladder (refined centers and heights)."""
    _, cen, _, mu_ref = sols[index]
    return BubbleField.from_arrays(cen.x, mu_ref, cfg)


@dataclass
class ResidualLadder:
    Ls: list
    norms: list
    deltas: list
    slope: float
    predicted: float
    mu_slope: float
    rate: float

    @property
    def decreasing(self):
        return all(b < a for a, b in zip(self.norms, self.norms[1:]))

    @property
    def rel_gap(self):
        return abs(self.slope - self.predicted) / abs(self.predicted)

    def to_dict(self):
        return {"L": self.Ls, "starstar": self.norms, "refinement_delta": self.deltas,
                "slope": self.slope, "predicted_slope": self.predicted, "mu_slope": self.mu_slope,
                "mu_rate": self.rate, "decreasing": self.decreasing, "rel_gap": self.rel_gap}


def predicted_rate(cfg):
    """min((N+2m)/2 - tau, beta - tau + 1)."""
    return min(0.5 * (cfg.N + 2 * cfg.m) - cfg.tau, cfg.beta - cfg.tau + 1.0)


def residual_ladder(cfg, lat, consts, Ls, radial=48, sphere_degree=3):
    """**-norm of l_L on each rung of the mu-ladder and its fitted log-log slope against L."""
    from .reduced import fit_slope, mu_ladder

    _, mu_slope, sols = mu_ladder(cfg, lat, consts, Ls)
    norms, deltas = [], []
    for i, L in enumerate(Ls):
        bf = field_from_ladder(cfg.replace(L=float(L)), lat, sols, i)
        rep = star_norms(bf, lambda y: residual_lL(bf, y), make_grid(bf, radial, sphere_degree))
        norms.append(rep.starstar)
        deltas.append(rep.starstar_delta)
    rate = predicted_rate(cfg)
    return ResidualLadder(list(map(float, Ls)), norms, deltas, fit_slope(Ls, norms),
                          -rate * mu_slope, mu_slope, rate)


# ---------------------------------------------------------------------------
# basic inequalities
# ---------------------------------------------------------------------------

def _sphere_mean_kernel(a, N, rho, r):
    """Mean of |y - z|^-a over |z| = r with |y| = rho."""
    R, q = max(rho, r), min(rho, r)
    return R ** (-a) * special.hyp2f1(0.5 * a, 0.5 * a - 0.5 * (N - 2), 0.5 * N, (q / R) ** 2)


def lemma_a2_lhs(N, m, sig, rho):
    """int dz / (|y-z|^(N-2m) (1+|z|)^(2m+sig)) for |y| = rho, by radial quadrature."""
    a = N - 2 * m

    def f(r):
        return r ** (N - 1) * (1.0 + r) ** (-(2 * m + sig)) * _sphere_mean_kernel(a, N, rho, r)

    val = 0.0
    if rho > 0:
        val += integrate.quad(f, 0.0, rho, epsabs=0, epsrel=1e-11, limit=400)[0]
    val += integrate.quad(f, rho, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
    return surface_area(N) * val


def appendixA_checks(bf, cfg, samples=200, seed=0, sig=1.0, theta=None, radii=None):
    """Empirical constants for three basic inequalities.

    a2: sup over |y| of LHS (1+|y|)^sig for the potential estimate, on a
        coarse and a refined radius grid (stable ratio => finite constant);
    a3: max over y in B_1(x_i) of sum_j (1+mu_j|y-x_j|)^-theta (1+mu_i|y-x_i|)^theta;
    power_sum: max of (sum_j mu^s (1+mu r)^-(s+tau))^(m*-1) over
        sum_j mu^((N+2m)/2) (1+mu r)^-((N+2m)/2+tau).
    """
    N, m = cfg.N, cfg.m
    if not 0 < sig < N - 2 * m:
        raise ValueError(f"need 0 < sig < N-2m = {N - 2 * m}")
    theta = cfg.tau if theta is None else theta
    if not theta > cfg.k:
        raise ValueError(f"need theta > k = {cfg.k}")
    rng = np.random.default_rng(seed)
    out = {}

    radii = np.geomspace(1e-2, 1e3, 12) if radii is None else np.asarray(radii)
    fine = np.geomspace(radii[0], radii[-1], 2 * len(radii) - 1)
    at0 = lemma_a2_lhs(N, m, sig, 0.0)
    closed0 = surface_area(N) * special.beta(2 * m, sig)
    coarse = max(lemma_a2_lhs(N, m, sig, r) * (1 + r) ** sig for r in radii)
    refined = max(lemma_a2_lhs(N, m, sig, r) * (1 + r) ** sig for r in fine)
    out["a2"] = {"lhs_at_0": at0, "closed_at_0": closed0, "ratio_coarse": max(coarse, at0),
                 "ratio_refined": max(refined, at0)}

    C, M = bf.centers, bf.mu
    worst = 0.0
    for i in range(len(M)):
        d = rng.normal(size=(samples, N))
        d /= np.linalg.norm(d, axis=1)[:, None]
        y = C[i] + d * rng.uniform(0, 1, size=(samples, 1)) ** (1.0 / N)
        lhs = _kernels.weight_sum(y, C, M, 0.0, theta)
        rhs = (1.0 + M[i] * np.linalg.norm(y - C[i], axis=1)) ** (-theta)
        worst = max(worst, float(np.max(lhs / rhs)))
    out["a3"] = {"theta": theta, "max_ratio": worst}

    lo, hi = C.min(axis=0) - 1.0, C.max(axis=0) + 1.0
    y = lo + (hi - lo) * rng.uniform(size=(samples * len(M), N))
    near = C[rng.integers(0, len(M), samples)] + rng.normal(scale=1.0, size=(samples, N)) / \
        M[rng.integers(0, len(M), samples)][:, None]
    y = np.concatenate([y, near, C])
    s, tau = cfg.s, cfg.tau
    A = 0.5 * (N + 2 * m)
    lhs = _kernels.weight_sum(y, C, M, s, s + tau) ** (cfg.mstar - 1.0)
    rhs = _kernels.weight_sum(y, C, M, A, A + tau)
    out["power_sum"] = {"max_ratio": float(np.max(lhs / rhs))}
    return out
