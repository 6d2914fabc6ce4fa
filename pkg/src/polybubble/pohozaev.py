"""Boundary functionals of the translation and dilation Pohozaev identities.

For smooth u, v on a domain Omega,

    int_Omega ((-Delta)^m u d_i v + (-Delta)^m v d_i u) = int_dOmega f_{m,i}(u, v)

    int_Omega ((-Delta)^m u <y-x, grad v> + (-Delta)^m v <y-x, grad u>)
        = int_dOmega g_m(u, v) - (N-2m)/2 int_Omega (v (-Delta)^m u + u (-Delta)^m v).

Both boundary densities are stored as lists of bilinear terms. Each term
pairs one derivative of (-Delta)^k u with one derivative of (-Delta)^l v and
a geometric weight, and is generated by a recursion in m that peels off one
(-Delta) at each step and reuses the form of order m-2 on (-Delta u, -Delta v).
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import IdentityFailure
from .fields import RadialField, random_polynomial, random_smooth_radial
from .quadrature import ball_integral, sphere_integral, surface_area
from .radial import RadialSum, farfield_coefficients, polyharmonic_constant

# factor kinds, applied to (-Delta)^level of a field
VAL = "val"          # phi
D_NU = "d_nu"        # <grad phi, nu>
D_I = "d_i"          # d phi / d y_i
D_R = "d_r"          # <grad phi, y - x>
H_NU_I = "H_nu_i"    # nu^T Hess(phi) e_i
H_NU_R = "H_nu_r"    # nu^T Hess(phi) (y - x)
GRAD = "grad"        # grad phi, only inside a dot contraction

# geometric weights
ONE = "1"
NU_I = "nu_i"
R_NU = "r.nu"


@dataclass(frozen=True)
class PohozaevTerm:
    """coeff(N) * geom * U * V with coeff(N) = c0 + c1 N.

    ``u`` and ``v`` are (kind, level) pairs; ``dot`` means the two factors are
    gradients contracted with each other.
    """

    c0: Fraction
    c1: Fraction
    geom: str
    u: tuple
    v: tuple
    dot: bool = False

    def coeff(self, N):
        return self.c0 + self.c1 * N

    def shifted(self, k):
        return PohozaevTerm(self.c0, self.c1, self.geom, (self.u[0], self.u[1] + k),
                            (self.v[0], self.v[1] + k), self.dot)

    def key(self):
        return (self.geom, self.u, self.v, self.dot)

    @property
    def kind(self):
        """"translation" (carries the index i), "bar" (carries y - x) or "tilde"."""
        parts = {self.geom, self.u[0], self.v[0]}
        if parts & {NU_I, D_I, H_NU_I}:
            return "translation"
        if parts & {R_NU, D_R, H_NU_R}:
            return "bar"
        return "tilde"

    def orders(self):
        """Total derivative orders (of u, of v)."""
        d = {VAL: 0, D_NU: 1, D_I: 1, D_R: 1, GRAD: 1, H_NU_I: 2, H_NU_R: 2}
        return (d[self.u[0]] + 2 * self.u[1], d[self.v[0]] + 2 * self.v[1])


@dataclass(frozen=True)
class PohozaevForm:
    m: int
    variant: str  # "f" or "g"
    terms: tuple

    def canonical(self):
        """Merge like terms; drop zero coefficients; sort."""
        acc = {}
        for t in self.terms:
            c = acc.get(t.key(), (Fraction(0), Fraction(0)))
            acc[t.key()] = (c[0] + t.c0, c[1] + t.c1)
        out = [PohozaevTerm(c0, c1, *key) for key, (c0, c1) in acc.items() if c0 != 0 or c1 != 0]
        return tuple(sorted(out, key=lambda t: (t.key(), t.c0, t.c1)))

    def swap_symmetric(self):
        """True when swapping u and v maps the term set onto itself."""
        canon = self.canonical()
        swapped = PohozaevForm(self.m, self.variant, tuple(
            PohozaevTerm(t.c0, t.c1, t.geom, t.v, t.u, t.dot) for t in canon)).canonical()
        return canon == swapped


def _t(c0, geom, u, v, dot=False, c1=0):
    return PohozaevTerm(Fraction(c0), Fraction(c1), geom, u, v, dot)


def build_f(m):
    """Density f_{m,i}; the index i is supplied at evaluation time."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return PohozaevForm(0, "f", (_t(1, NU_I, (VAL, 0), (VAL, 0)),))
    if m == 1:
        return PohozaevForm(1, "f", (
            _t(-1, ONE, (D_NU, 0), (D_I, 0)),
            _t(-1, ONE, (D_I, 0), (D_NU, 0)),
            _t(1, NU_I, (GRAD, 0), (GRAD, 0), dot=True),
        ))
    w = m - 1
    top = (
        _t(-1, ONE, (D_NU, w), (D_I, 0)),
        _t(-1, ONE, (D_I, 0), (D_NU, w)),
        _t(1, ONE, (VAL, w), (H_NU_I, 0)),
        _t(1, ONE, (H_NU_I, 0), (VAL, w)),
    )
    rest = tuple(t.shifted(1) for t in build_f(m - 2).terms)
    return PohozaevForm(m, "f", top + rest)


def build_g(m):
    """Density g_m with weight vector y - x."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return PohozaevForm(0, "g", (_t(1, R_NU, (VAL, 0), (VAL, 0)),))
    if m == 1:
        # -(N-2)/2 = 1 - N/2
        h = Fraction(-1, 2)
        return PohozaevForm(1, "g", (
            _t(-1, ONE, (D_NU, 0), (D_R, 0)),
            _t(-1, ONE, (D_R, 0), (D_NU, 0)),
            _t(1, R_NU, (GRAD, 0), (GRAD, 0), dot=True),
            _t(1, ONE, (D_NU, 0), (VAL, 0), c1=h),
            _t(1, ONE, (VAL, 0), (D_NU, 0), c1=h),
        ))
    w = m - 1
    # (N-2m)/2 = -m + N/2
    a0, a1 = Fraction(-m), Fraction(1, 2)
    top = (
        _t(-1, ONE, (D_NU, w), (D_R, 0)),
        _t(-1, ONE, (D_R, 0), (D_NU, w)),
        _t(1, ONE, (VAL, w), (H_NU_R, 0)),
        _t(1, ONE, (H_NU_R, 0), (VAL, w)),
        _t(1, ONE, (VAL, w), (D_NU, 0)),
        _t(1, ONE, (D_NU, 0), (VAL, w)),
        _t(a0, ONE, (VAL, w), (D_NU, 0), c1=a1),
        _t(-a0, ONE, (D_NU, w), (VAL, 0), c1=-a1),
        _t(a0, ONE, (D_NU, 0), (VAL, w), c1=a1),
        _t(-a0, ONE, (VAL, 0), (D_NU, w), c1=-a1),
    )
    rest = tuple(t.shifted(1) for t in build_g(m - 2).terms)
    return PohozaevForm(m, "g", top + rest)


def top_tilde_term(form):
    """Coefficient (c0, c1) of  v * d_nu (-Delta)^(m-1) u  in g_m."""
    key = (ONE, (D_NU, form.m - 1), (VAL, 0), False)
    for t in form.canonical():
        if t.key() == key:
            return t.c0, t.c1
    return Fraction(0), Fraction(0)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

class _Jet:
    """Caches (-Delta)^k of a field."""

    def __init__(self, field):
        self.levels = [field]

    def at(self, k):
        while len(self.levels) <= k:
            self.levels.append(self.levels[-1].neg_lap())
        return self.levels[k]


def _factor(jet, kind, level, y, nu, r, i, cache):
    key = (kind, level)
    if key in cache:
        return cache[key]
    f = jet.at(level)
    if kind == VAL:
        out = f.value(y)
    elif kind == GRAD:
        out = f.grad(y)
    elif kind in (D_NU, D_I, D_R):
        g = _factor(jet, GRAD, level, y, nu, r, i, cache)
        if kind == D_NU:
            out = np.einsum("ij,ij->i", g, nu)
        elif kind == D_I:
            out = g[:, i]
        else:
            out = np.einsum("ij,ij->i", g, r)
    elif kind == H_NU_I:
        e = np.zeros_like(nu)
        e[:, i] = 1.0
        out = f.hess_contract(y, nu, e)
    elif kind == H_NU_R:
        out = f.hess_contract(y, nu, r)
    else:
        raise ValueError(kind)
    cache[key] = out
    return out


def evaluate_terms(form, u, v, y, nu, x=None, i=0):
    """Per-term densities at boundary points; returns an (npts, nterms) array."""
    N = y.shape[1]
    x = np.zeros(N) if x is None else np.asarray(x, dtype=np.float64)
    r = y - x
    ju, jv = (u if isinstance(u, _Jet) else _Jet(u)), (v if isinstance(v, _Jet) else _Jet(v))
    cu, cv = {}, {}
    cols = []
    geoms = {ONE: None, NU_I: nu[:, i], R_NU: np.einsum("ij,ij->i", r, nu)}
    for t in form.terms:
        a = _factor(ju, t.u[0], t.u[1], y, nu, r, i, cu)
        b = _factor(jv, t.v[0], t.v[1], y, nu, r, i, cv)
        val = np.einsum("ij,ij->i", a, b) if t.dot else a * b
        g = geoms[t.geom]
        if g is not None:
            val = val * g
        cols.append(float(t.coeff(N)) * val)
    return np.stack(cols, axis=1)


def surface_terms(form, u, v, center, radius, x=None, i=0, degree=30):
    """Per-term integrals over the sphere |y - center| = radius."""
    N = u.N
    ju, jv = _Jet(u), _Jet(v)
    return sphere_integral(lambda y, nu: evaluate_terms(form, ju, jv, y, nu, x, i),
                           N, center, radius, degree)


@dataclass
class RoundTrip:
    volume: float
    surface: float
    scale: float

    @property
    def abs_error(self):
        return abs(self.volume - self.surface)

    @property
    def rel_error(self):
        return self.abs_error / self.scale


def roundtrip_pair(m, u, v, center, radius, i=0, x=None, degree=30, radial_nodes=24, tol=None):
    """Round trips for f_{m,i} and g_m sharing one ball pass and one sphere pass.

    Returns (RoundTrip for f, RoundTrip for g).
    """
    ff, gf = build_f(m), build_g(m)
    N = u.N
    x = np.asarray(center if x is None else x, dtype=np.float64)
    ju, jv = _Jet(u), _Jet(v)
    c = 0.5 * (N - 2 * m)

    def vol(y):
        uu, gu, a = u.value_grad_power(y, m)
        vv, gv, b = v.value_grad_power(y, m)
        r = y - x
        vf = a * gv[:, i] + b * gu[:, i]
        vg = (a * np.einsum("ij,ij->i", r, gv) + b * np.einsum("ij,ij->i", r, gu)
              + c * (vv * a + uu * b))
        return np.stack([vf, vg], axis=1)

    def surf(y, nu):
        return np.concatenate([evaluate_terms(ff, ju, jv, y, nu, x, i),
                               evaluate_terms(gf, ju, jv, y, nu, x, i)], axis=1)

    lhs, lhs_abs = ball_integral(vol, N, center, radius, degree, radial_nodes)
    terms, terms_abs = sphere_integral(surf, N, center, radius, degree)
    k = len(ff.terms)
    out = []
    for col, form, sl in ((0, ff, slice(0, k)), (1, gf, slice(k, None))):
        rt = RoundTrip(float(lhs[col]), float(np.sum(terms[sl])),
                       float(max(lhs_abs[col], np.sum(terms_abs[sl]))))
        _maybe_raise(rt, tol, form, terms[sl])
        out.append(rt)
    return tuple(out)


def divergence_roundtrip_f(m, u, v, center, radius, i=0, degree=30, radial_nodes=24, tol=None):
    """Compare L_{1,i} = int ((-Delta)^m u d_i v + (-Delta)^m v d_i u) with the boundary integral of f_{m,i}."""
    return roundtrip_pair(m, u, v, center, radius, i, None, degree, radial_nodes, tol)[0]


def divergence_roundtrip_g(m, u, v, center, radius, x=None, degree=30, radial_nodes=24, tol=None):
    """Compare L_2 plus the (N-2m)/2 volume correction with the boundary integral of g_m."""
    return roundtrip_pair(m, u, v, center, radius, 0, x, degree, radial_nodes, tol)[1]


def random_pair(rng, N, spread=0.4):
    """Two test fields, each a radial sum about a random center plus a polynomial."""
    u = RadialField(random_smooth_radial(rng, N), rng.uniform(-spread, spread, N)) + random_polynomial(rng, N)
    v = RadialField(random_smooth_radial(rng, N), rng.uniform(-spread, spread, N)) + random_polynomial(rng, N)
    return u, v


def roundtrip_suite(ms=(1, 2, 3), N=5, pairs=10, seed=0, degree=30, radial_nodes=16):
    """Round trips on the unit ball for randomized pairs; one record per (m, pair)."""
    rng = np.random.default_rng(seed)
    records = []
    for m in ms:
        for k in range(pairs):
            u, v = random_pair(rng, N)
            i = int(rng.integers(N))
            x = rng.uniform(-0.3, 0.3, N)
            f, g = roundtrip_pair(m, u, v, np.zeros(N), 1.0, i=i, x=x, degree=degree,
                                  radial_nodes=radial_nodes)
            records.append({"m": m, "pair": k, "i": i,
                            "f_volume": f.volume, "f_surface": f.surface, "f_rel_error": f.rel_error,
                            "g_volume": g.volume, "g_surface": g.surface, "g_rel_error": g.rel_error})
    return records


def _maybe_raise(out, tol, form, terms):
    if tol is not None and out.rel_error > tol:
        k = int(np.argmax(np.abs(terms)))
        raise IdentityFailure(
            f"round trip failed: rel error {out.rel_error:.3e} > {tol:.1e}; largest term #{k} "
            f"{form.terms[k]} = {terms[k]:.6e}",
            report={"volume": out.volume, "surface": out.surface, "terms": terms.tolist()})


def radial_vanishing_f(m, gu, gv, center, radius, i=0, degree=30):
    """Boundary integral of f_{m,i} for two fields radial about the sphere center.

    Returns (integral, termwise absolute scale).
    """
    u = RadialField(gu, center)
    v = RadialField(gv, center)
    terms, terms_abs = surface_terms(build_f(m), u, v, center, radius, None, i, degree)
    return float(np.sum(terms)), float(np.sum(terms_abs))


# ---------------------------------------------------------------------------
# identities for the m-harmonic far field of a bubble
# ---------------------------------------------------------------------------

def farfield_V(m, N, mu, center):
    """V = C_m mu^-s sum_{h<m} alpha_h mu^-2h |y-x|^-(N-2m+2h), as a RadialField (without C_m)."""
    alphas = farfield_coefficients(m, N, m)
    s = Fraction(N - 2 * m, 2)
    terms = {}
    for h, a in enumerate(alphas):
        terms[(-(N - 2 * m + 2 * h), 0)] = a * Fraction(mu) ** (-2 * h)
    prof = RadialSum(terms, N)
    return RadialField(prof.scale(1), center), float(mu) ** (-float(s))


def verify_V_identities(m, N, mu, radius_pair=(0.5, 1.0), degree=6, mixed_degree=16,
                        sources=None, constants=None):
    """Checks on the far-field expansion V of a bubble centered at the origin.

    (a) the boundary integral of g_m(V, V) vanishes relative to its termwise scale;
    (b) for each pair of powers (h, k) the integral I(theta) and its rescaled
        value I(theta) theta^(N-2m+2(h+k)) are reported at both radii;
    (c) the mixed term with an m-harmonic field R built from point sources
        equals (N-2)(N-2m)/2 c'_m |S^(N-1)| R(0) on both spheres.

    Concentric radial integrands are quadratic in the normal, so ``degree``
    can stay small; ``mixed_degree`` controls the off-center term.
    """
    center = np.zeros(N)
    report = {}
    form = build_g(m)
    V, _ = farfield_V(m, N, mu, center)
    r1, r2 = radius_pair
    tot, scale = surface_terms(form, V, V, center, r2, center, 0, degree)
    report["gVV"] = {"value": float(np.sum(tot)), "scale": float(np.sum(scale))}

    pairs = {}
    for h in range(m):
        for k in range(m):
            fh = RadialField(RadialSum.term(1, -(N - 2 * m + 2 * h), 0, N), center)
            fk = RadialField(RadialSum.term(1, -(N - 2 * m + 2 * k), 0, N), center)
            vals = []
            e = N - 2 * m + 2 * (h + k)
            for r in (r1, r2):
                t, a = surface_terms(form, fh, fk, center, r, center, 0, degree)
                vals.append({"radius": r, "integral": float(np.sum(t)), "scale": float(np.sum(a)),
                             "rescaled": float(np.sum(t)) * r ** e,
                             "rescaled_scale": float(np.sum(a)) * r ** e})
            pairs[f"{h},{k}"] = vals
    report["pairs"] = pairs

    if sources is None:
        far = np.zeros(N)
        far[0] = 6.0
        far2 = np.zeros(N)
        far2[1] = -7.0
        sources = [(far, 1.0), (far2, 0.7)]
    G = RadialField(RadialSum.term(1, 2 * m - N, 0, N), center)
    R = None
    for pos, w in sources:
        f = RadialField(RadialSum.term(Fraction(w).limit_denominator(10 ** 12), 2 * m - N, 0, N), pos)
        R = f if R is None else R + f
    cprime = polyharmonic_constant(m, N)
    pref = 0.5 * (N - 2) * (N - 2 * m) * float(cprime) * surface_area(N)
    expected = pref * float(R.value(center[None, :])[0])
    mixed = []
    for r in (r1, r2):
        t, a = surface_terms(form, G, R, center, r, center, 0, mixed_degree)
        mixed.append({"radius": r, "integral": float(np.sum(t)), "scale": float(np.sum(a))})
    report["mixed"] = {"expected": expected, "prefactor": pref, "values": mixed}
    if constants is not None:
        report["mixed"]["Bm_over_Cm"] = constants.Bm / constants.tildeC_m
    return report
