from fractions import Fraction

import numpy as np
import pytest

from polybubble import pohozaev as P
from polybubble.errors import IdentityFailure
from polybubble.fields import PolynomialField, RadialField, random_smooth_radial
from polybubble.pohozaev import (D_I, D_NU, D_R, GRAD, H_NU_I, H_NU_R, NU_I, ONE, R_NU, VAL,
                                 PohozaevForm, PohozaevTerm)
from polybubble.radial import bubble_profile


def T(c0, geom, u, v, dot=False, c1=0):
    return PohozaevTerm(Fraction(c0), Fraction(c1), geom, u, v, dot)


def _canon(terms, m, variant):
    return PohozaevForm(m, variant, tuple(terms)).canonical()


def test_f1_golden():
    golden = [T(-1, ONE, (D_NU, 0), (D_I, 0)), T(-1, ONE, (D_I, 0), (D_NU, 0)),
              T(1, NU_I, (GRAD, 0), (GRAD, 0), dot=True)]
    assert P.build_f(1).canonical() == _canon(golden, 1, "f")
    assert len(P.build_f(1).canonical()) == 3


def test_f2_golden():
    # -d_nu(-Lap u) d_i v - d_nu(-Lap v) d_i u + (-Lap u) nu.Hess v e_i + (-Lap v) nu.Hess u e_i + Lap u Lap v nu_i
    golden = [T(-1, ONE, (D_NU, 1), (D_I, 0)), T(-1, ONE, (D_I, 0), (D_NU, 1)),
              T(1, ONE, (VAL, 1), (H_NU_I, 0)), T(1, ONE, (H_NU_I, 0), (VAL, 1)),
              T(1, NU_I, (VAL, 1), (VAL, 1))]
    assert P.build_f(2).canonical() == _canon(golden, 2, "f")
    assert len(P.build_f(2).canonical()) == 5


def test_g1_golden():
    golden = [T(-1, ONE, (D_NU, 0), (D_R, 0)), T(-1, ONE, (D_R, 0), (D_NU, 0)),
              T(1, R_NU, (GRAD, 0), (GRAD, 0), dot=True),
              T(1, ONE, (D_NU, 0), (VAL, 0), c1=Fraction(-1, 2)),
              T(1, ONE, (VAL, 0), (D_NU, 0), c1=Fraction(-1, 2))]
    assert P.build_g(1).canonical() == _canon(golden, 1, "g")


def test_g2_golden_hand_expanded():
    # explicit m = 2 boundary density, written with W = -Lap u, X = -Lap v:
    #   -d_nu W <r, grad v> - d_nu X <r, grad u> + W nu.Hess v r + X nu.Hess u r
    #   + W d_nu v + X d_nu u + <r, nu> W X
    #   - (N-4)/2 (-d_nu u X + u d_nu X - d_nu v W + v d_nu W)
    h = Fraction(1, 2)
    golden = [
        T(-1, ONE, (D_NU, 1), (D_R, 0)), T(-1, ONE, (D_R, 0), (D_NU, 1)),
        T(1, ONE, (VAL, 1), (H_NU_R, 0)), T(1, ONE, (H_NU_R, 0), (VAL, 1)),
        T(1, ONE, (VAL, 1), (D_NU, 0)), T(1, ONE, (D_NU, 0), (VAL, 1)),
        T(1, R_NU, (VAL, 1), (VAL, 1)),
        # -(N-4)/2 * (-1) = (N-4)/2 = -2 + N/2
        T(-2, ONE, (D_NU, 0), (VAL, 1), c1=h), T(-2, ONE, (VAL, 1), (D_NU, 0), c1=h),
        # -(N-4)/2 = 2 - N/2
        T(2, ONE, (VAL, 0), (D_NU, 1), c1=-h), T(2, ONE, (D_NU, 1), (VAL, 0), c1=-h),
    ]
    canon = P.build_g(2).canonical()
    assert canon == _canon(golden, 2, "g")
    assert len(canon) == 9


@pytest.mark.parametrize("m", range(1, 7))
def test_top_tilde_coefficient(m):
    c0, c1 = P.top_tilde_term(P.build_g(m))
    # coefficient of v d_nu (-Lap)^(m-1) u is -(N-2m)/2 for every N
    for N in (2 * m + 1, 2 * m + 3, 20):
        assert c0 + c1 * N == -Fraction(N - 2 * m, 2)


@pytest.mark.parametrize("m", range(1, 7))
def test_term_orders_and_kinds(m):
    for t in P.build_f(m).canonical():
        assert t.kind == "translation"
        assert sum(t.orders()) == 2 * m
        assert min(t.orders()) >= 1 or t.geom == NU_I
    for t in P.build_g(m).canonical():
        assert t.kind in ("bar", "tilde")
        assert sum(t.orders()) == (2 * m if t.kind == "bar" else 2 * m - 1)


@pytest.mark.parametrize("m", range(0, 6))
def test_forms_are_symmetric_in_u_and_v(m):
    assert P.build_f(m).swap_symmetric()
    assert P.build_g(m).swap_symmetric()


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        P.build_f(-1)


def test_bubble_pair_m1_ball():
    N = 5
    U = RadialField(bubble_profile(1, N), np.zeros(N))
    f, g = P.roundtrip_pair(1, U, U, np.zeros(N), 1.0)
    assert f.rel_error < 1e-8
    assert g.rel_error < 1e-8
    assert g.volume != 0.0


def test_bubble_and_quadratic_m2_ball():
    N = 5
    U = RadialField(bubble_profile(2, N), np.zeros(N))
    r2 = PolynomialField({tuple(2 * (i == j) for i in range(N)): 1 for j in range(N)}, N)
    for i in range(2):
        f, g = P.roundtrip_pair(2, U, r2, np.zeros(N), 1.0, i=i, x=np.full(N, 0.1))
        assert f.rel_error < 1e-8
        assert g.rel_error < 1e-8


@pytest.mark.parametrize("m", [1, 2, 3])
def test_randomized_round_trips(m, rng):
    N = 5
    for _ in range(2):
        u, v = P.random_pair(rng, N)
        f, g = P.roundtrip_pair(m, u, v, rng.uniform(-0.1, 0.1, N), 0.9, i=int(rng.integers(N)),
                                x=rng.uniform(-0.3, 0.3, N), radial_nodes=16)
        assert f.rel_error < 1e-7
        assert g.rel_error < 1e-7


def test_round_trip_failure_names_largest_term(rng):
    N = 5
    u, v = P.random_pair(rng, N)
    with pytest.raises(IdentityFailure, match="largest term"):
        # an under-resolved sphere rule cannot meet a tight tolerance
        P.roundtrip_pair(3, u, v, np.zeros(N), 1.0, degree=2, radial_nodes=4, tol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_radial_fields_have_vanishing_f(m, rng):
    N = 7
    c = rng.uniform(-0.5, 0.5, N)
    for i in range(3):
        val, scale = P.radial_vanishing_f(m, random_smooth_radial(rng, N), random_smooth_radial(rng, N),
                                          c, 0.7, i, degree=12)
        assert abs(val) < 1e-10 * scale
        assert scale > 0


def test_V_identities_m1():
    rep = P.verify_V_identities(1, 7, 2.0)
    assert abs(rep["gVV"]["value"]) < 1e-9 * rep["gVV"]["scale"]
    for v in rep["mixed"]["values"]:
        assert v["integral"] == pytest.approx(rep["mixed"]["expected"], rel=1e-8)


def test_V_identities_m2_pairs_transport():
    rep = P.verify_V_identities(2, 7, 2.0)
    assert set(rep["pairs"]) == {"0,0", "0,1", "1,0", "1,1"}
    for a, b in rep["pairs"].values():
        # the (1,1) pair is identically zero: both powers are harmonic and every
        # term of g_2 carries one Laplacian
        scale = max(a["rescaled_scale"], b["rescaled_scale"])
        assert abs(a["rescaled"] - b["rescaled"]) <= 1e-8 * scale
    assert rep["pairs"]["0,1"][0]["scale"] > 0
    assert abs(rep["gVV"]["value"]) < 1e-9 * rep["gVV"]["scale"]


def test_two_centre_far_field_transport():
    # V_1 + V_2 is m-harmonic on an annulus around centre 1 that excludes centre 2,
    # so the boundary integrals on the two spheres coincide
    m, N = 2, 7
    V1, _ = P.farfield_V(m, N, 2.0, np.zeros(N))
    c2 = np.zeros(N)
    c2[0] = 3.0
    V2, _ = P.farfield_V(m, N, 1.5, c2)
    V = V1 + V2
    x = np.zeros(N)
    for form in (P.build_g(m), P.build_f(m)):
        vals = []
        for r in (0.5, 1.0):
            t, a = P.surface_terms(form, V, V, np.zeros(N), r, x, 0, degree=16)
            vals.append((np.sum(t), np.sum(a)))
        assert abs(vals[0][0]) > 1e-6 * vals[0][1]
        assert abs(vals[0][0] - vals[1][0]) < 1e-8 * max(vals[0][1], vals[1][1])
