"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with identical semantics. The backend is
picked once at import time:

    POLYBUBBLE_NUMBA=0   force the numpy path
    POLYBUBBLE_NUMBA=1   require numba (ImportError if missing)
    unset                numba if importable, numpy otherwise

Both paths are deterministic. Parallel loops only run over independent
output slots; no floating-point reduction crosses a thread boundary.
"""

import os
import warnings

import numpy as np

_flag = os.environ.get("POLYBUBBLE_NUMBA", "").strip()

if _flag == "0":
    HAVE_NUMBA = False
else:
    try:
        import numba
        HAVE_NUMBA = True
        # old system TBB: numba falls back to another threading layer on its own
        warnings.filterwarnings("ignore", message="The TBB threading layer")
    except ImportError:
        if _flag == "1":
            raise
        HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def _np_pairwise_rowsums(points, exponent):
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    out = np.empty(n)
    for j in range(n):
        diff = pts - pts[j]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        mask = np.ones(n, dtype=bool)
        mask[j] = False
        out[j] = _np_neumaier(dist[mask] ** (-exponent))
    return out


def _np_neumaier(values):
    s = 0.0
    c = 0.0
    for x in values:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


def _np_radial_eval(rho, coeffs, p, h):
    rho = np.asarray(rho, dtype=np.float64)
    w = 1.0 / np.sqrt(1.0 + rho * rho)
    out = np.zeros_like(rho)
    for c, pi, hi in zip(coeffs, p, h):
        out += c * rho ** float(pi) * w ** float(hi)
    return out


def _np_dense_sum(r, w, hs, pmins, offs, dense):
    acc = np.zeros_like(r)
    for g in range(hs.shape[0]):
        poly = np.zeros_like(r)
        for t in range(offs[g + 1] - 1, offs[g] - 1, -1):
            poly = poly * r + dense[t]
        acc += poly * r ** float(pmins[g]) * w ** float(hs[g])
    return acc


def _np_radial_jet(y, center, *packs):
    d = y - center
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    w = 1.0 / np.sqrt(1.0 + r * r)
    v0, v1, v2 = (_np_dense_sum(r, w, *packs[4 * k: 4 * k + 4]) for k in range(3))
    return v0, v1[:, None] * d, v2


def _np_poly_eval(y, exps, coeffs):
    out = np.zeros(y.shape[0])
    for e, c in zip(exps, coeffs):
        term = np.full(y.shape[0], c)
        for t, p in enumerate(e):
            if p:
                term = term * y[:, t] ** int(p)
        out += term
    return out


def _np_poly_value_grad(y, exps, coeffs):
    out = np.zeros(y.shape)
    for i in range(y.shape[1]):
        mask = exps[:, i] > 0
        if not np.any(mask):
            continue
        e = exps[mask].copy()
        c = coeffs[mask] * e[:, i]
        e[:, i] -= 1
        out[:, i] = _np_poly_eval(y, e, c)
    return _np_poly_eval(y, exps, coeffs), out


def _np_weight_sum(y, centers, mu, amp_exp, decay_exp):
    out = np.zeros(y.shape[0])
    for j in range(centers.shape[0]):
        d = np.sqrt(np.sum((y - centers[j]) ** 2, axis=1))
        out += mu[j] ** amp_exp / (1.0 + mu[j] * d) ** decay_exp
    return out


def _np_sigma(y, centers, mu, tau):
    best = np.ones(y.shape[0])
    for j in range(centers.shape[0]):
        d = np.sqrt(np.sum((y - centers[j]) ** 2, axis=1))
        best = np.minimum(best, ((1.0 + mu[j] * d) / mu[j]) ** (tau - 1.0))
    return best


def _np_bubble_values(y, centers, mu, amp, s):
    n = centers.shape[0]
    out = np.empty((y.shape[0], n))
    for j in range(n):
        d2 = np.sum((y - centers[j]) ** 2, axis=1)
        out[:, j] = amp * mu[j] ** s / (1.0 + mu[j] ** 2 * d2) ** s
    return out


def _np_power_excess(vals, expo):
    """W^e - sum_j U_j^e with W = sum_j U_j, evaluated without cancellation."""
    imax = np.argmax(vals, axis=1)
    rows = np.arange(vals.shape[0])
    top = vals[rows, imax]
    rest = vals.sum(axis=1) - top
    others = (vals ** expo).sum(axis=1) - top ** expo
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(top > 0.0, top ** expo * np.expm1(expo * np.log1p(rest / top)), 0.0)
    return lead - others


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, parallel=True)
    def _nb_pairwise_rowsums(points, exponent):
        n = points.shape[0]
        dim = points.shape[1]
        out = np.empty(n)
        for j in numba.prange(n):
            s = 0.0
            c = 0.0
            for i in range(n):
                if i == j:
                    continue
                d2 = 0.0
                for t in range(dim):
                    diff = points[i, t] - points[j, t]
                    d2 += diff * diff
                x = d2 ** (-0.5 * exponent)
                tt = s + x
                if abs(s) >= abs(x):
                    c += (s - tt) + x
                else:
                    c += (x - tt) + s
                s = tt
            out[j] = s + c
        return out

    @numba.njit(cache=True, parallel=True)
    def _nb_radial_eval(rho, coeffs, p, h):
        n = rho.shape[0]
        out = np.empty(n)
        for k in numba.prange(n):
            r = rho[k]
            w = 1.0 / np.sqrt(1.0 + r * r)
            acc = 0.0
            for t in range(coeffs.shape[0]):
                acc += coeffs[t] * r ** p[t] * w ** h[t]
            out[k] = acc
        return out

    @numba.njit(cache=True, parallel=True)
    def _nb_radial_eval_int(rho, coeffs, p, h):
        # integer exponents: repeated multiplication instead of pow
        n = rho.shape[0]
        out = np.empty(n)
        for k in numba.prange(n):
            r = rho[k]
            w = 1.0 / np.sqrt(1.0 + r * r)
            acc = 0.0
            for t in range(coeffs.shape[0]):
                acc += coeffs[t] * r ** p[t] * w ** h[t]
            out[k] = acc
        return out

    @numba.njit(cache=True, inline="always")
    def _nb_dense_sum(r, w, hs, pmins, offs, dense):
        # one Horner polynomial in r per distinct h
        acc = 0.0
        for g in range(hs.shape[0]):
            poly = 0.0
            for t in range(offs[g + 1] - 1, offs[g] - 1, -1):
                poly = poly * r + dense[t]
            acc += poly * r ** pmins[g] * w ** hs[g]
        return acc

    @numba.njit(cache=True, parallel=True)
    def _nb_radial_jet(y, center, h0, q0, o0, d0, h1, q1, o1, d1, h2, q2, o2, d2):
        n = y.shape[0]
        dim = y.shape[1]
        val = np.empty(n)
        extra = np.empty(n)
        grad = np.empty((n, dim))
        for k in numba.prange(n):
            r2 = 0.0
            for t in range(dim):
                diff = y[k, t] - center[t]
                r2 += diff * diff
            r = np.sqrt(r2)
            w = 1.0 / np.sqrt(1.0 + r2)
            val[k] = _nb_dense_sum(r, w, h0, q0, o0, d0)
            extra[k] = _nb_dense_sum(r, w, h2, q2, o2, d2)
            b = _nb_dense_sum(r, w, h1, q1, o1, d1)
            for t in range(dim):
                grad[k, t] = b * (y[k, t] - center[t])
        return val, grad, extra

    @numba.njit(cache=True, parallel=True)
    def _nb_poly_value_grad(y, exps, coeffs):
        n = y.shape[0]
        dim = y.shape[1]
        nt = coeffs.shape[0]
        val = np.zeros(n)
        out = np.zeros((n, dim))
        for k in numba.prange(n):
            for t in range(nt):
                term = coeffs[t]
                for j in range(dim):
                    for _ in range(exps[t, j]):
                        term *= y[k, j]
                val[k] += term
                for i in range(dim):
                    e_i = exps[t, i]
                    if e_i == 0:
                        continue
                    d = coeffs[t] * e_i
                    for j in range(dim):
                        e = exps[t, j] - (1 if j == i else 0)
                        for _ in range(e):
                            d *= y[k, j]
                    out[k, i] += d
        return val, out

    @numba.njit(cache=True, parallel=True)
    def _nb_poly_eval(y, exps, coeffs):
        n = y.shape[0]
        out = np.empty(n)
        for k in numba.prange(n):
            acc = 0.0
            for t in range(coeffs.shape[0]):
                term = coeffs[t]
                for i in range(exps.shape[1]):
                    for _ in range(exps[t, i]):
                        term *= y[k, i]
                acc += term
            out[k] = acc
        return out

    @numba.njit(cache=True, parallel=True)
    def _nb_weight_sum(y, centers, mu, amp_exp, decay_exp):
        npts = y.shape[0]
        nb = centers.shape[0]
        dim = y.shape[1]
        out = np.empty(npts)
        for k in numba.prange(npts):
            acc = 0.0
            for j in range(nb):
                d2 = 0.0
                for t in range(dim):
                    diff = y[k, t] - centers[j, t]
                    d2 += diff * diff
                acc += mu[j] ** amp_exp / (1.0 + mu[j] * np.sqrt(d2)) ** decay_exp
            out[k] = acc
        return out

    @numba.njit(cache=True, parallel=True)
    def _nb_sigma(y, centers, mu, tau):
        npts = y.shape[0]
        nb = centers.shape[0]
        dim = y.shape[1]
        out = np.empty(npts)
        for k in numba.prange(npts):
            best = 1.0
            for j in range(nb):
                d2 = 0.0
                for t in range(dim):
                    diff = y[k, t] - centers[j, t]
                    d2 += diff * diff
                v = ((1.0 + mu[j] * np.sqrt(d2)) / mu[j]) ** (tau - 1.0)
                if v < best:
                    best = v
            out[k] = best
        return out

    @numba.njit(cache=True, parallel=True)
    def _nb_bubble_values(y, centers, mu, amp, s):
        npts = y.shape[0]
        nb = centers.shape[0]
        dim = y.shape[1]
        out = np.empty((npts, nb))
        for k in numba.prange(npts):
            for j in range(nb):
                d2 = 0.0
                for t in range(dim):
                    diff = y[k, t] - centers[j, t]
                    d2 += diff * diff
                out[k, j] = amp * mu[j] ** s / (1.0 + mu[j] * mu[j] * d2) ** s
        return out

    @numba.njit(cache=True, parallel=True)
    def _nb_power_excess(vals, expo):
        npts = vals.shape[0]
        nb = vals.shape[1]
        out = np.empty(npts)
        for k in numba.prange(npts):
            imax = 0
            for j in range(1, nb):
                if vals[k, j] > vals[k, imax]:
                    imax = j
            top = vals[k, imax]
            rest = 0.0
            others = 0.0
            for j in range(nb):
                if j != imax:
                    rest += vals[k, j]
                    others += vals[k, j] ** expo
            if top > 0.0:
                out[k] = top ** expo * np.expm1(expo * np.log1p(rest / top)) - others
            else:
                out[k] = -others
        return out


# ---------------------------------------------------------------------------
# public dispatch
# ---------------------------------------------------------------------------

def pairwise_rowsums(points, exponent, backend=None):
    """Row sums of |P_i - P_j|^(-exponent), i != j, with compensated summation."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if _use_numba(backend):
        return _nb_pairwise_rowsums(pts, float(exponent))
    return _np_pairwise_rowsums(pts, float(exponent))


def radial_eval(rho, coeffs, p, h, backend=None):
    """Evaluate sum_t c_t rho^p_t (1+rho^2)^(-h_t/2) at every rho."""
    rho = np.ascontiguousarray(rho, dtype=np.float64).ravel()
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    if _use_numba(backend):
        if np.all(p == np.round(p)) and np.all(h == np.round(h)):
            return _nb_radial_eval_int(rho, coeffs, p.astype(np.int64), h.astype(np.int64))
        return _nb_radial_eval(rho, coeffs, p, h)
    return _np_radial_eval(rho, coeffs, p, h)


def pack_dense(coeffs, p, h):
    """Group terms by h into dense coefficient runs p_min..p_max for Horner evaluation.

    Returns (hs, pmins, offsets, dense) with group g occupying
    dense[offsets[g]:offsets[g+1]].
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    p = np.asarray(p, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    hs, pmins, offs, dense = [], [], [0], []
    for hv in np.unique(h):
        sel = h == hv
        lo, hi = int(p[sel].min()), int(p[sel].max())
        run = np.zeros(hi - lo + 1)
        np.add.at(run, p[sel] - lo, coeffs[sel])
        hs.append(int(hv))
        pmins.append(lo)
        dense.extend(run.tolist())
        offs.append(len(dense))
    return (np.array(hs, dtype=np.int64), np.array(pmins, dtype=np.int64),
            np.array(offs, dtype=np.int64), np.array(dense, dtype=np.float64))


_EMPTY = pack_dense([], [], [])


def radial_jet(y, center, profile, profile_d1_over_r, extra=None, backend=None):
    """Value g, gradient (g'/r)(y-c) and a second profile e, all at r = |y-c|.

    Profiles come from ``pack_dense``. Returns (g, grad g, e); e is zero
    when ``extra`` is None.
    """
    y = np.ascontiguousarray(np.atleast_2d(y), dtype=np.float64)
    center = np.ascontiguousarray(center, dtype=np.float64)
    args = [a for prof in (profile, profile_d1_over_r, extra or _EMPTY) for a in prof]
    if _use_numba(backend):
        return _nb_radial_jet(y, center, *args)
    return _np_radial_jet(y, center, *args)


def poly_eval(y, exps, coeffs, backend=None):
    """sum_t coeffs_t prod_i y_i^exps[t, i]."""
    y = np.ascontiguousarray(np.atleast_2d(y), dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.int64).reshape(-1, y.shape[1])
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if _use_numba(backend):
        return _nb_poly_eval(y, exps, coeffs)
    return _np_poly_eval(y, exps, coeffs)


def poly_value_grad(y, exps, coeffs, backend=None):
    """Value and gradient (npts, N) of sum_t coeffs_t prod_i y_i^exps[t, i]."""
    y = np.ascontiguousarray(np.atleast_2d(y), dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.int64).reshape(-1, y.shape[1])
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if _use_numba(backend):
        return _nb_poly_value_grad(y, exps, coeffs)
    return _np_poly_value_grad(y, exps, coeffs)


def weight_sum(y, centers, mu, amp_exp, decay_exp, backend=None):
    """sum_j mu_j^amp_exp / (1 + mu_j |y - x_j|)^decay_exp for each row of y."""
    y, centers, mu = _prep(y, centers, mu)
    if _use_numba(backend):
        return _nb_weight_sum(y, centers, mu, float(amp_exp), float(decay_exp))
    return _np_weight_sum(y, centers, mu, float(amp_exp), float(decay_exp))


def sigma(y, centers, mu, tau, backend=None):
    """min(1, min_j ((1 + mu_j |y - x_j|) / mu_j)^(tau - 1)) for each row of y."""
    y, centers, mu = _prep(y, centers, mu)
    if _use_numba(backend):
        return _nb_sigma(y, centers, mu, float(tau))
    return _np_sigma(y, centers, mu, float(tau))


def bubble_values(y, centers, mu, amp, s, backend=None):
    """Matrix of amp * mu_j^s / (1 + mu_j^2 |y - x_j|^2)^s, shape (npts, nbubbles)."""
    y, centers, mu = _prep(y, centers, mu)
    if _use_numba(backend):
        return _nb_bubble_values(y, centers, mu, float(amp), float(s))
    return _np_bubble_values(y, centers, mu, float(amp), float(s))


def power_excess(vals, expo, backend=None):
    """(sum_j v_j)^expo - sum_j v_j^expo per row, stable when one v_j dominates."""
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if _use_numba(backend):
        return _nb_power_excess(vals, float(expo))
    return _np_power_excess(vals, float(expo))


def _use_numba(backend):
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    return backend == "numba"


def _prep(y, centers, mu):
    return (np.ascontiguousarray(np.atleast_2d(y), dtype=np.float64),
            np.ascontiguousarray(np.atleast_2d(centers), dtype=np.float64),
            np.ascontiguousarray(np.atleast_1d(mu), dtype=np.float64))
