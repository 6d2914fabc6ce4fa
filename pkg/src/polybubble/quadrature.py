"""Radial moments, sphere/ball rules and the energy-expansion constants."""

import functools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .errors import IdentityFailure
from .radial import RadialSum, bubble_constant, bubble_product, polyharmonic_constant

WEIGHTS = ("U^mstar", "U^mstar-1", "U^mstar-1*psi0")


def surface_area(N):
    """|S^(N-1)| = 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (0.5 * N) / math.gamma(0.5 * N)


def beta_radial(a, b):
    """Closed form of int_0^inf r^(a-1) (1+r^2)^(-b) dr."""
    if not (a > 0 and 2 * b > a):
        raise ValueError(f"radial integral diverges: need 0 < a < 2b, got a={a}, b={b}")
    return 0.5 * special.beta(0.5 * a, b - 0.5 * a)


def quad_radial(func, epsrel=1e-13, limit=400):
    """int_0^inf func(r) dr after r = tan(t), by adaptive Gauss-Kronrod.

    ``func`` must accept a float. Returns (value, abserr).
    """

    def integrand(t):
        c = math.cos(t)
        if c <= 0.0:
            return 0.0
        return func(math.tan(t)) / (c * c)

    val, err = integrate.quad(integrand, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=epsrel, limit=limit)
    return val, err


def quad_power(a, b, epsrel=1e-13):
    """int_0^inf r^(a-1)(1+r^2)^(-b) dr by quadrature in t (r = tan t).

    The integrand becomes sin(t)^(a-1) cos(t)^(2b-a-1). The endpoint powers
    t^(a-1) (pi/2 - t)^(2b-a-1) go into QUADPACK's algebraic weight, which
    leaves a smooth remainder even for exponents near -1.
    """
    if not (a > 0 and 2 * b > a):
        raise ValueError(f"radial integral diverges: need 0 < a < 2b, got a={a}, b={b}")
    e0, e1 = a - 1.0, 2.0 * b - a - 1.0
    half = 0.5 * math.pi

    def smooth(t):
        s = math.sin(t) / t if t > 0.0 else 1.0
        c = math.cos(t) / (half - t) if t < half else 1.0
        return s ** e0 * c ** e1

    return integrate.quad(smooth, 0.0, half, weight="alg", wvar=(e0, e1), epsabs=0.0,
                          epsrel=epsrel, limit=400)


def radial_sum_integral(f, extra_power=0.0):
    """int_0^inf f(r) r^(N-1+extra_power) dr for a RadialSum, two ways.

    Returns (quadrature value, abserr, closed form from the Beta function).
    """
    N = f.dimension
    quad_total = 0.0
    err_total = 0.0
    closed = 0.0
    for t in f.terms:
        a = t.p + N + extra_power
        b = 0.5 * t.h
        v, e = quad_power(a, b)
        quad_total += float(t.coeff) * v
        err_total += abs(float(t.coeff)) * e
        closed += float(t.coeff) * beta_radial(a, b)
    return quad_total, err_total, closed


def axis_average(N, p):
    """Mean of |omega_1|^p over the unit sphere S^(N-1)."""
    return math.exp(math.lgamma(0.5 * N) + math.lgamma(0.5 * (p + 1)) -
                    0.5 * math.log(math.pi) - math.lgamma(0.5 * (N + p)))


@dataclass(frozen=True)
class RadialMoment:
    """int_{R^N} |y|^p w(y) dy for one of the bubble weights."""

    p: float
    weight: str
    value: float
    error_estimate: float
    closed_form: float

    @property
    def rel_gap(self):
        if self.closed_form == 0.0:
            raise ZeroDivisionError("closed form vanishes; compare the absolute value instead")
        return abs(self.value - self.closed_form) / abs(self.closed_form)


def _weight_profile(weight, m, N):
    """(amplitude exponent of C_m, RadialSum profile) for a weight."""
    s = Fraction(N - 2 * m, 2)
    if weight == "U^mstar":
        return Fraction(2 * N, N - 2 * m), RadialSum.term(1, 0, N, N)
    if weight == "U^mstar-1":
        return Fraction(N + 2 * m, N - 2 * m), RadialSum.term(1, 0, Fraction(N + 2 * m, 2), N)
    if weight == "U^mstar-1*psi0":
        prof = (RadialSum.term(s, 0, 0, N) - RadialSum.term(s, 2, 0, N)) * RadialSum.term(1, 0, N + 1, N)
        return Fraction(2 * N, N - 2 * m), prof
    raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")


def _moment_limit(weight, m, N):
    return {"U^mstar": N, "U^mstar-1": 2 * m, "U^mstar-1*psi0": N}[weight]


def radial_moment(cfg, p, weight="U^mstar"):
    """int |y|^p w over R^N with w built from the standard bubble U_{0,1}.

    ``cfg`` needs attributes N and m. Value by Gauss-Kronrod after r = tan t,
    cross-checked against the termwise Beta closed form.
    """
    N, m = cfg.N, cfg.m
    amp_exp, prof = _weight_profile(weight, m, N)
    limit = _moment_limit(weight, m, N)
    if not -N < p < limit:
        raise ValueError(
            f"moment of order p={p} with weight {weight} diverges: need -N < p < {limit}")
    area = surface_area(N)
    amp = bubble_constant(m, N).power(amp_exp)
    q, e, c = radial_sum_integral(prof, extra_power=p)
    return RadialMoment(float(p), weight, amp * area * q, amp * area * e, amp * area * c)


def axis_moment(cfg, p):
    """M_p = int |y_1|^p U_{0,1}^(m*) dy."""
    mom = radial_moment(cfg, p, "U^mstar")
    return mom.value * axis_average(cfg.N, p), mom.closed_form * axis_average(cfg.N, p)


def _marginal_prefactor(m, N):
    # int over the other N-1 coordinates of (1 + z^2 + |w|^2)^(-N)
    return (bubble_constant(m, N).power(Fraction(2 * N, N - 2 * m)) * surface_area(N - 1)
            * 0.5 * special.beta(0.5 * (N - 1), 0.5 * (N + 1)))


def marginal_integral(N, p, t=0.0, odd=False):
    """int_R |z+t|^p (sign(z+t) if odd) (1+z^2)^(-(N+1)/2) dz by quadrature."""
    b = 0.5 * (N + 1)

    def f(z):
        w = z + t
        v = abs(w) ** p * (1.0 + z * z) ** (-b)
        return math.copysign(v, w) if odd else v

    total = 0.0
    for lo, hi in ((-np.inf, -t), (-t, np.inf)):
        v, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
        total += v
    return total


def axis_moment_marginal(m, N, p):
    """M_p through the one-dimensional marginal of U^(m*), independent of the radial route."""
    return _marginal_prefactor(m, N) * marginal_integral(N, p)


# ---------------------------------------------------------------------------
# sphere and ball rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphereRule:
    N: int
    degree: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        """Weighted sum over nodes along axis 0; extra axes are kept."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@functools.lru_cache(maxsize=32)
def sphere_quadrature(N, degree):
    """Product rule on S^(N-1), exact for polynomials of total degree <= degree.

    Each polar angle with density sin^k carries a Gauss-Jacobi rule in cos;
    the azimuth carries the equispaced trapezoid rule.
    """
    if N < 2:
        raise ValueError("sphere rule needs N >= 2")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    npolar = (degree + 2) // 2
    naz = degree + 1
    phi = 2.0 * np.pi * np.arange(naz) / naz
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    weights = np.full(naz, 2.0 * np.pi / naz)
    # add polar angles from the innermost (density sin^1) outward
    for k in range(1, N - 1):
        alpha = 0.5 * (k - 1)
        x, w = special.roots_jacobi(npolar, alpha, alpha)
        sin_t = np.sqrt(1.0 - x * x)
        new_nodes = np.concatenate(
            [x[:, None, None].repeat(nodes.shape[0], axis=1),
             sin_t[:, None, None] * nodes[None, :, :]], axis=2)
        nodes = new_nodes.reshape(-1, k + 2)
        weights = (w[:, None] * weights[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(N, degree, nodes, weights)


@functools.lru_cache(maxsize=32)
def radial_rule(n, radius=1.0, inner=0.0, N=3):
    """Gauss-Legendre nodes on [inner, radius] with the Jacobian rho^(N-1) folded into the weights."""
    x, w = np.polynomial.legendre.leggauss(n)
    rho = inner + 0.5 * (radius - inner) * (x + 1.0)
    wts = 0.5 * (radius - inner) * w * rho ** (N - 1)
    return rho, wts


def ball_integral(func, N, center, radius, degree=30, radial_nodes=24, inner=0.0):
    """int over B_radius(center) (or the annulus inner < |y-c| < radius) of func.

    ``func`` maps an (n, N) array of points to an (n,) or (n, k) array. The
    rule is applied one radial shell at a time to bound memory.
    """
    rule = sphere_quadrature(N, degree)
    rho, wts = radial_rule(radial_nodes, float(radius), float(inner), N)
    center = np.asarray(center, dtype=np.float64)
    total = None
    abs_total = None
    for r, w in zip(rho, wts):
        vals = np.asarray(func(center + r * rule.nodes))
        part = w * rule.integrate(vals)
        apart = w * rule.integrate(np.abs(vals))
        total = part if total is None else total + part
        abs_total = apart if abs_total is None else abs_total + apart
    return total, abs_total


def sphere_integral(func, N, center, radius, degree=30):
    """int over the sphere |y - c| = radius of func(y, nu), with the outward normal nu.

    Returns (integral, integral of the absolute value).
    """
    rule = sphere_quadrature(N, degree)
    nu = rule.nodes
    y = np.asarray(center, dtype=np.float64) + radius * nu
    vals = np.asarray(func(y, nu))
    scale = radius ** (N - 1)
    return scale * rule.integrate(vals), scale * rule.integrate(np.abs(vals))


# ---------------------------------------------------------------------------
# constants of the energy expansion
# ---------------------------------------------------------------------------

@dataclass
class ConstantsTable:
    """Constants of the reduced equations for one (N, m, beta, a) setting.

    B solves mu_j^-beta = B sum_i (mu_i mu_j)^-s |x_i - x_j|^-(N-2m) at
    leading order; it is computed from the energy expansion (C4 / C3) and
    independently from the Pohozaev balance (B'_m against the beta-moment).
    """

    N: int
    m: int
    beta: float
    sum_a: float
    C1: float
    C2: float
    C3: float
    C4: float
    I_bubble: float
    B: float
    B_pohozaev: float
    Bm: float
    Bprime_m: float
    cm: float
    cprime_m: Fraction
    tildeC_m: float
    tildeC_base: int
    tildeC_exponent: Fraction
    moments: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        out["cprime_m"] = str(self.cprime_m)
        out["tildeC_exponent"] = str(self.tildeC_exponent)
        return out


def constants_table(cfg, check_tol=1e-9):
    """Assemble C1, C2, C3, C4, B, B_m, B'_m, c_m, c'_m for ``cfg``.

    ``cfg`` needs N, m, beta, a and K0. The K-coefficients enter as a / K0,
    which is the effect of normalising the bubble amplitude to K(0).
    """
    N, m, beta = cfg.N, cfg.m, float(cfg.beta)
    sum_a = float(sum(cfg.a)) / float(cfg.K0)
    mstar = 2.0 * N / (N - 2 * m)
    s = 0.5 * (N - 2 * m)
    tc = bubble_constant(m, N)
    C = float(tc)
    area = surface_area(N)
    cprime = polyharmonic_constant(m, N)

    M_beta, M_beta_closed = axis_moment(cfg, beta)
    M_bm2, M_bm2_closed = axis_moment(cfg, beta - 2.0)
    C1 = -beta * (beta - 1.0) * M_bm2 / mstar
    C2 = beta * M_beta / mstar
    C3 = -C2 * sum_a

    mom_I = radial_moment(cfg, 0.0, "U^mstar-1")
    I_bub = mom_I.value
    I_closed = C * bubble_product(m, N) * area * 0.5 * special.beta(0.5 * N, m)
    C4 = s * C * I_bub
    B = C4 / C3

    Bm = 0.5 * (N - 2) * (N - 2 * m) * float(cprime) * area * C
    Bprime = 2.0 * C * Bm
    B_poh = Bprime * mstar / (2.0 * beta * (-sum_a) * M_beta)
    cm = float(cprime) * (N - 2) * area

    # C2 through psi0: -E|omega_1|^beta int |y|^beta U^(m*-1) psi0
    mom_psi = radial_moment(cfg, beta, "U^mstar-1*psi0")
    C2_psi = -axis_average(N, beta) * mom_psi.value

    checks = {
        "M_beta_beta_closed_form": _rel(M_beta, M_beta_closed),
        "M_beta_marginal_route": _rel(M_beta, axis_moment_marginal(m, N, beta)),
        "M_beta_minus_2_closed_form": _rel(M_bm2, M_bm2_closed),
        "I_bubble_closed_form": _rel(I_bub, I_closed),
        "I_bubble_vs_polyharmonic_flux": _rel(I_bub, (N - 2) * float(cprime) * area * C),
        "C2_psi0_route": _rel(C2, C2_psi),
        "B_energy_vs_pohozaev": _rel(B, B_poh),
    }
    bad = {k: v for k, v in checks.items() if not v < check_tol}
    if bad:
        raise IdentityFailure(f"constant cross-checks failed: {bad}", report=checks)
    for name, val, ok in (("C2", C2, C2 > 0), ("B", B, B > 0), ("Bm", Bm, Bm > 0),
                          ("Bprime_m", Bprime, Bprime > 0), ("C1", C1, C1 != 0),
                          ("cprime_m", float(cprime), cprime > 0)):
        if not ok:
            raise IdentityFailure(f"sign assertion failed for {name} = {val}")

    moments = {"M_beta": M_beta, "M_beta_minus_2": M_bm2, "I_bubble": I_bub}
    return ConstantsTable(N, m, beta, sum_a, C1, C2, C3, C4, I_bub, B, B_poh, Bm, Bprime, cm,
                          cprime, C, tc.base, tc.exponent, moments, checks)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def c1_finite_difference(cfg, h=1e-3):
    """C1 from a central difference of the shifted marginal, as an independent check."""
    N, m, beta = cfg.N, cfg.m, float(cfg.beta)
    mstar = 2.0 * N / (N - 2 * m)
    pre = _marginal_prefactor(m, N)
    gp = marginal_integral(N, beta - 1.0, h, odd=True)
    gm = marginal_integral(N, beta - 1.0, -h, odd=True)
    gp2 = marginal_integral(N, beta - 1.0, 2 * h, odd=True)
    gm2 = marginal_integral(N, beta - 1.0, -2 * h, odd=True)
    deriv = (8.0 * (gp - gm) - (gp2 - gm2)) / (12.0 * h)
    return -beta * pre * deriv / mstar
