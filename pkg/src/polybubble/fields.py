"""Scalar fields on R^N with exact iterated Laplacians, gradients and Hessians."""

from fractions import Fraction

import numpy as np

from . import _kernels
from .radial import RadialSum


class Field:
    """Interface: values, gradients, Hessian contractions and (-Delta)."""

    N = None

    def value(self, y):
        raise NotImplementedError

    def grad(self, y):
        raise NotImplementedError

    def hess_contract(self, y, a, b):
        """a^T Hess b at every row of y; a and b are (n, N) arrays."""
        raise NotImplementedError

    def neg_lap(self):
        raise NotImplementedError

    def neg_lap_power(self, k):
        cache = self.__dict__.setdefault("_lap_cache", {})
        if k not in cache:
            f = self
            for _ in range(k):
                f = f.neg_lap()
            cache[k] = f
        return cache[k]

    def value_grad_power(self, y, m):
        """(phi, grad phi, (-Delta)^m phi) at the rows of y."""
        return self.value(y), self.grad(y), self.neg_lap_power(m).value(y)

    def __add__(self, other):
        return SumField([self, other])


class RadialField(Field):
    """phi(y) = g(|y - c|) for a RadialSum g."""

    def __init__(self, profile, center):
        self.profile = profile
        self.N = profile.dimension
        self.center = np.asarray(center, dtype=np.float64)
        if self.center.shape != (self.N,):
            raise ValueError(f"center must have {self.N} coordinates")
        d1 = profile.derivative()
        self._g1_over_r = d1.shift_r(-1)
        # (g'' - g'/r) / r^2, the coefficient of (y-c)(y-c)^T in the Hessian
        self._hess_rr = (d1.derivative() - self._g1_over_r).shift_r(-2)
        self._arr0 = self._packed(profile)
        self._arr1 = self._packed(self._g1_over_r)
        self._lap_arrays = {}

    def _rho(self, y):
        d = np.atleast_2d(y) - self.center
        return d, np.sqrt(np.einsum("ij,ij->i", d, d))

    @staticmethod
    def _packed(g):
        return _kernels.pack_dense(*g._arrays())

    def _jet(self, y):
        # value and gradient come from one fused pass; cache the last query
        memo = getattr(self, "_memo", None)
        if memo is not None and memo[0] is y:
            return memo[1], memo[2]
        val, grad, _ = _kernels.radial_jet(y, self.center, self._arr0, self._arr1)
        self._memo = (y, val, grad)
        return val, grad

    def value(self, y):
        return self._jet(y)[0]

    def grad(self, y):
        return self._jet(y)[1]

    def value_grad_power(self, y, m):
        if m not in self._lap_arrays:
            self._lap_arrays[m] = self._packed(self.profile.neg_laplacian_power(m))
        return _kernels.radial_jet(y, self.center, self._arr0, self._arr1, self._lap_arrays[m])

    def hess_contract(self, y, a, b):
        d, rho = self._rho(y)
        ad = np.einsum("ij,ij->i", a, d)
        bd = np.einsum("ij,ij->i", b, d)
        ab = np.einsum("ij,ij->i", a, b)
        return self._hess_rr(rho) * ad * bd + self._g1_over_r(rho) * ab

    def neg_lap(self):
        return RadialField(-self.profile.laplacian(), self.center)

    def __repr__(self):
        return f"RadialField({self.profile!r}, center={self.center.tolist()})"


class PolynomialField(Field):
    """Polynomial sum_e c_e y^e with exact calculus on the exponent map."""

    def __init__(self, coeffs, N):
        self.N = int(N)
        clean = {}
        for e, c in dict(coeffs).items():
            e = tuple(int(t) for t in e)
            if len(e) != self.N or min(e, default=0) < 0:
                raise ValueError(f"bad exponent {e} for N={self.N}")
            c = Fraction(c) if isinstance(c, (int, Fraction)) else float(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        self.coeffs = {e: c for e, c in clean.items() if c != 0}

    @classmethod
    def from_terms(cls, N, terms):
        return cls(dict(terms), N)

    def degree(self):
        return max((sum(e) for e in self.coeffs), default=0)

    def _deriv(self, i):
        cache = self.__dict__.setdefault("_dcache", {})
        if i not in cache:
            cache[i] = self._deriv_uncached(i)
        return cache[i]

    def _deriv_uncached(self, i):
        out = {}
        for e, c in self.coeffs.items():
            if e[i] > 0:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = out.get(tuple(f), 0) + c * e[i]
        return PolynomialField(out, self.N)

    def _packed(self):
        if "_pack" not in self.__dict__:
            items = sorted(self.coeffs.items())
            exps = np.array([e for e, _ in items], dtype=np.int64).reshape(-1, self.N)
            self._pack = (exps, np.array([float(c) for _, c in items]))
        return self._pack

    def _eval_coeffs(self, y, coeffs):
        y = np.atleast_2d(y)
        if not coeffs:
            return np.zeros(y.shape[0])
        exps, c = self._packed()
        return _kernels.poly_eval(y, exps, c)

    def value(self, y):
        return self._eval_coeffs(y, self.coeffs)

    def grad(self, y):
        return self._value_grad(y)[1]

    def _value_grad(self, y):
        y = np.atleast_2d(y)
        if not self.coeffs:
            return np.zeros(y.shape[0]), np.zeros(y.shape)
        exps, c = self._packed()
        return _kernels.poly_value_grad(y, exps, c)

    def value_grad_power(self, y, m):
        val, grad = self._value_grad(y)
        return val, grad, self.neg_lap_power(m).value(y)

    def hess_contract(self, y, a, b):
        y = np.atleast_2d(y)
        out = np.zeros(y.shape[0])
        for i in range(self.N):
            di = self._deriv(i)
            if not di.coeffs:
                continue
            for j in range(self.N):
                dij = di._deriv(j)
                if dij.coeffs:
                    out += a[:, i] * b[:, j] * dij.value(y)
        return out

    def neg_lap(self):
        out = {}
        for i in range(self.N):
            for e, c in self._deriv(i)._deriv(i).coeffs.items():
                out[e] = out.get(e, 0) - c
        return PolynomialField(out, self.N)

    def is_zero(self):
        return not self.coeffs

    def __repr__(self):
        return f"PolynomialField({self.coeffs}, N={self.N})"


class SumField(Field):
    def __init__(self, parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, SumField) else [p])
        if not flat:
            raise ValueError("empty sum")
        self.parts = flat
        self.N = flat[0].N
        if any(p.N != self.N for p in flat):
            raise ValueError("summands live in different dimensions")

    def value(self, y):
        return sum(p.value(y) for p in self.parts)

    def grad(self, y):
        return sum(p.grad(y) for p in self.parts)

    def hess_contract(self, y, a, b):
        return sum(p.hess_contract(y, a, b) for p in self.parts)

    def neg_lap(self):
        return SumField([p.neg_lap() for p in self.parts])

    def value_grad_power(self, y, m):
        acc = None
        for p in self.parts:
            part = p.value_grad_power(y, m)
            if acc is None:
                acc = [np.array(a, copy=True) for a in part]
            else:
                for a, b in zip(acc, part):
                    a += b
        return tuple(acc)

    def __repr__(self):
        return f"SumField({self.parts!r})"


def radial_power_field(N, p, center, coeff=1):
    """coeff * |y - c|^p."""
    return RadialField(RadialSum.term(coeff, p, 0, N), center)


def random_smooth_radial(rng, N, max_terms=3, max_p=4):
    """Random RadialSum built from even powers r^(2j) (1+r^2)^(-q); smooth at r = 0."""
    terms = {}
    nterms = int(rng.integers(1, max_terms + 1))
    for _ in range(nterms):
        p = 2 * int(rng.integers(0, max_p // 2 + 1))
        h = int(rng.integers(1, 2 * N + 1))
        c = Fraction(int(rng.integers(-9, 10)) or 1, int(rng.integers(1, 6)))
        terms[(p, h)] = terms.get((p, h), 0) + c
    return RadialSum(terms, N)


def random_polynomial(rng, N, degree=3, nterms=4):
    coeffs = {}
    for _ in range(nterms):
        e = [0] * N
        for _ in range(int(rng.integers(0, degree + 1))):
            e[int(rng.integers(0, N))] += 1
        c = Fraction(int(rng.integers(-9, 10)) or 1, int(rng.integers(1, 4)))
        coeffs[tuple(e)] = coeffs.get(tuple(e), 0) + c
    return PolynomialField(coeffs, N)
