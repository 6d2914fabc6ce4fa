"""Exact calculus on sums of c * r^p * (1 + r^2)^(-q), q a multiple of 1/2.

The family is closed under d/dr, under multiplication and under the radial
Laplacian f'' + (N-1)/r f'. Coefficients are ``fractions.Fraction`` and the
power of (1 + r^2) is stored as the integer h = 2q, so every identity in this
module is decided exactly.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import AlgebraError


@dataclass(frozen=True)
class RadialTerm:
    coeff: Fraction
    p: int
    h: int

    @property
    def q(self):
        return Fraction(self.h, 2)


class RadialSum:
    """Canonical linear combination of r^p (1+r^2)^(-h/2) in dimension N.

    Canonical form: within each parity class of h all terms share one h, the
    smallest admissible one (0 for integer q, 1 for half-integer q) unless the
    numerator polynomial cannot absorb another factor of (1 + r^2). Two sums
    represent the same function iff their canonical term sets coincide.
    """

    __slots__ = ("dimension", "_terms", "_cache")

    def __init__(self, terms, dimension):
        self.dimension = int(dimension)
        self._terms = _canonicalize(terms)
        self._cache = None

    # construction -----------------------------------------------------------

    @classmethod
    def term(cls, coeff, p, q, dimension):
        """Single term coeff * r^p * (1+r^2)^(-q)."""
        h = Fraction(q) * 2
        if h.denominator != 1:
            raise ValueError(f"q must be a multiple of 1/2, got {q}")
        return cls({(int(p), int(h)): Fraction(coeff)}, dimension)

    @classmethod
    def zero(cls, dimension):
        return cls({}, dimension)

    # structure ----------------------------------------------------------------

    @property
    def terms(self):
        return [RadialTerm(c, p, h) for (p, h), c in sorted(self._terms.items())]

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, RadialSum):
            return NotImplemented
        return self.dimension == other.dimension and self._terms == other._terms

    def __hash__(self):
        return hash((self.dimension, tuple(sorted(self._terms.items()))))

    def __repr__(self):
        if not self._terms:
            return f"RadialSum(0; N={self.dimension})"
        parts = [f"{c}*r^{p}*(1+r^2)^(-{Fraction(h, 2)})" for (p, h), c in sorted(self._terms.items())]
        return f"RadialSum({' + '.join(parts)}; N={self.dimension})"

    # arithmetic ---------------------------------------------------------------

    def _check(self, other):
        if self.dimension != other.dimension:
            raise ValueError("radial sums live in different dimensions")

    def __add__(self, other):
        self._check(other)
        out = dict(self._terms)
        for key, c in other._terms.items():
            out[key] = out.get(key, 0) + c
        return RadialSum(out, self.dimension)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        factor = Fraction(factor)
        return RadialSum({key: c * factor for key, c in self._terms.items()}, self.dimension)

    def __mul__(self, other):
        if not isinstance(other, RadialSum):
            return self.scale(other)
        self._check(other)
        out = {}
        for (p1, h1), c1 in self._terms.items():
            for (p2, h2), c2 in other._terms.items():
                key = (p1 + p2, h1 + h2)
                out[key] = out.get(key, 0) + c1 * c2
        return RadialSum(out, self.dimension)

    __rmul__ = __mul__

    def shift_r(self, k):
        """Multiply by r^k."""
        return RadialSum({(p + k, h): c for (p, h), c in self._terms.items()}, self.dimension)

    # calculus -----------------------------------------------------------------

    def derivative(self):
        """d/dr, exact."""
        out = {}
        for (p, h), c in self._terms.items():
            if p != 0:
                out[(p - 1, h)] = out.get((p - 1, h), 0) + c * p
            if h != 0:
                out[(p + 1, h + 2)] = out.get((p + 1, h + 2), 0) - c * h
        return RadialSum(out, self.dimension)

    def laplacian(self):
        return radial_laplacian(self)

    def neg_laplacian_power(self, k):
        """(-Delta)^k applied k times."""
        f = self
        for _ in range(k):
            f = -radial_laplacian(f)
        return f

    # numerics -----------------------------------------------------------------

    def _arrays(self):
        if self._cache is None:
            items = sorted(self._terms.items())
            self._cache = (np.array([float(c) for _, c in items]),
                           np.array([p for (p, _), _ in items], dtype=np.float64),
                           np.array([h for (_, h), _ in items], dtype=np.float64))
        return self._cache

    def __call__(self, r):
        """Evaluate at radii r (array-like). Negative powers of r need r > 0."""
        r = np.asarray(r, dtype=np.float64)
        if not self._terms:
            return np.zeros_like(r)
        coeffs, p, h = self._arrays()
        return _kernels.radial_eval(r.ravel(), coeffs, p, h).reshape(r.shape)

    def min_power(self):
        return min((p for p, _ in self._terms), default=0)


def _canonicalize(terms):
    """Bring a {(p, h): coeff} map to the unique reduced form."""
    classes = {}
    for (p, h), c in dict(terms).items():
        c = Fraction(c)
        if c == 0:
            continue
        classes.setdefault(h % 2, []).append((int(p), int(h), c))
    out = {}
    for parity, items in classes.items():
        base = parity
        H = max(max(h for _, h, _ in items), base)
        poly = {}
        for p, h, c in items:
            j = (H - h) // 2
            for i in range(j + 1):
                key = p + 2 * i
                poly[key] = poly.get(key, 0) + c * math.comb(j, i)
        poly = {p: c for p, c in poly.items() if c != 0}
        if not poly:
            continue
        while H - 2 >= base:
            quotient = _divide_one_plus_r2(poly)
            if quotient is None:
                break
            poly = quotient
            H -= 2
        for p, c in poly.items():
            out[(p, H)] = c
    return out


def _divide_one_plus_r2(poly):
    """Exact quotient of a Laurent polynomial by (1 + r^2), or None."""
    lo = min(poly)
    hi = max(poly)
    coef = [Fraction(0)] * (hi - lo + 1)
    for p, c in poly.items():
        coef[p - lo] = Fraction(c)
    if len(coef) < 3:
        return None
    quot = [Fraction(0)] * (len(coef) - 2)
    for d in range(len(coef) - 1, 1, -1):
        c = coef[d]
        if c:
            quot[d - 2] = c
            coef[d - 2] -= c
            coef[d] = 0
    if coef[0] != 0 or coef[1] != 0:
        return None
    return {i + lo: c for i, c in enumerate(quot) if c != 0}


def radial_laplacian(f):
    """Delta f = f'' + (N-1)/r f' for a radial function, exact."""
    d1 = f.derivative()
    return d1.derivative() + d1.shift_r(-1).scale(f.dimension - 1)


# ---------------------------------------------------------------------------
# the standard bubble
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BubbleConstant:
    """base ** exponent with an integer base and a rational exponent."""

    base: int
    exponent: Fraction

    def __float__(self):
        return float(self.base) ** float(self.exponent)

    def power(self, e):
        """(base ** exponent) ** e as a float."""
        return float(self.base) ** float(self.exponent * Fraction(e))


def bubble_product(m, N):
    """prod_{h=-m}^{m-1} (N + 2h)."""
    return math.prod(N + 2 * h for h in range(-m, m))


def bubble_constant(m, N):
    """Normalising constant of the standard bubble U_{0,1}."""
    if not N > 2 * m:
        raise ValueError(f"the bubble profile needs N > 2m, got N={N}, m={m}")
    return BubbleConstant(bubble_product(m, N), Fraction(N - 2 * m, 4 * m))


def bubble_profile(m, N):
    """(1 + r^2)^(-(N-2m)/2): the bubble U_{0,1} divided by its constant."""
    return RadialSum.term(1, 0, Fraction(N - 2 * m, 2), N)


def verify_bubble_pde(m, N, perturb=None):
    """Residual of (-Delta)^m U - U^((N+2m)/(N-2m)) for U = U_{0,1}.

    Both sides carry the common factor C_m (the bubble constant), because
    C_m^(4m/(N-2m)) is the integer prod(N+2h); the returned sum is the
    residual divided by C_m and must be exactly zero. ``perturb`` adds a
    rational to the nonlinearity coefficient (a negative control).
    """
    if not N > 2 * m:
        raise ValueError(f"the bubble profile needs N > 2m, got N={N}, m={m}")
    g = bubble_profile(m, N)
    lhs = g.neg_laplacian_power(m)
    coeff = Fraction(bubble_product(m, N))
    if perturb is not None:
        coeff += Fraction(perturb)
    rhs = RadialSum.term(coeff, 0, Fraction(N + 2 * m, 2), N)
    return lhs - rhs


def generalized_binomial(a, i):
    a = Fraction(a)
    out = Fraction(1)
    for j in range(i):
        out *= (a - j) / (j + 1)
    return out


def farfield_coefficients(m, N, count):
    """alpha_0..alpha_{count-1} of U's expansion in powers r^-(N-2m+2i).

    Only the first m of these powers are m-harmonic, so ``count`` is capped
    at m.
    """
    if count > m:
        raise ValueError(
            f"requested {count} far-field terms but only the first m={m} are m-harmonic")
    if count < 0:
        raise ValueError("count must be nonnegative")
    return [generalized_binomial(Fraction(-(N - 2 * m), 2), i) for i in range(count)]


def polyharmonic_constant(m, N):
    """c'_m with (-Delta)^(m-1) r^(2m-N) = c'_m r^(2-N)."""
    if not N > 2 * m:
        raise ValueError(f"need N > 2m, got N={N}, m={m}")
    f = RadialSum.term(1, 2 * m - N, 0, N).neg_laplacian_power(m - 1)
    terms = f.terms
    if len(terms) != 1 or terms[0].p != 2 - N or terms[0].h != 0:
        raise AlgebraError(f"(-Delta)^(m-1) r^(2m-N) is not a multiple of r^(2-N): {f!r}")
    return terms[0].coeff


def psi0_profile(m, N):
    """d/dlambda of (1 + lambda^2 r^2)^(-s) lambda^s at lambda = 1, over C_m.

    Equals s (1 - r^2)(1 + r^2)^(-s-1) with s = (N-2m)/2.
    """
    s = Fraction(N - 2 * m, 2)
    base = RadialSum.term(1, 0, s + 1, N)
    return (RadialSum.term(s, 0, 0, N) - RadialSum.term(s, 2, 0, N)) * base
