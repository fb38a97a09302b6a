import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from ringapprox.poly import (
    MonomialIndex,
    Poly2,
    affine_reparam,
    compose_with_map,
    partial_derivative,
    poly_add,
    poly_eval,
    poly_mul,
    poly_pow,
    reparam_to_cell,
    scale_physical,
)


def brute_mul(a, b):
    """Independent oracle: plain double-loop convolution."""
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(b.shape[0]):
                for l in range(b.shape[1]):
                    out[i + k, j + l] += a[i, j] * b[k, l]
    return out


# the curved-element map used across modules: (u + u^2 v - u^2 v^2, v)
GX = Poly2([[0, 0, 0], [1, 0, 0], [0, 1, -1]])
GY = Poly2([[0, 1], [0, 0]])


def test_eval_constant():
    assert poly_eval(Poly2([[1.0]]), 0.3, 0.7) == 1.0


def test_eval_monomial():
    assert poly_eval(Poly2([[0, 0], [0, 1.0]]), 2.0, 3.0) == 6.0


def test_eval_curved_map_x_component():
    # direct substitution u=v=1: 1 + 1 - 1 = 1
    assert poly_eval(GX, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_mul_simple():
    u = Poly2([[0], [1.0]])
    v = Poly2([[0, 1.0]])
    uv = poly_mul(u, v)
    assert uv.du == 1 and uv.dv == 1
    assert uv.coeffs[1, 1] == 1.0


def test_square_of_sum():
    s = Poly2([[0, 1.0], [1.0, 0]])  # u + v
    sq = poly_pow(s, 2)
    expect = np.array([[0, 0, 1.0], [0, 2.0, 0], [1.0, 0, 0]])
    np.testing.assert_allclose(sq.coeffs, expect, atol=1e-15)


def test_square_of_curved_x_has_u4v4_term():
    sq = poly_pow(GX, 2)
    oracle = brute_mul(GX.coeffs, GX.coeffs)
    np.testing.assert_allclose(sq.coeffs, oracle, atol=1e-14)
    assert abs(sq.coeffs[4, 4]) > 0  # bidegree (4,4) is genuinely reached


def test_compose_x_with_curved_map():
    comp = compose_with_map(MonomialIndex(1, 0), (GX, GY))
    np.testing.assert_allclose(comp.trim().coeffs, GX.coeffs, atol=1e-15)


def test_compose_y_with_curved_map():
    comp = compose_with_map(MonomialIndex(0, 1), (GX, GY))
    np.testing.assert_allclose(comp.trim().coeffs, GY.trim().coeffs, atol=1e-15)


def test_compose_identity_map():
    ident = (Poly2([[0], [1.0]]), Poly2([[0, 1.0]]))
    comp = compose_with_map(MonomialIndex(2, 0), ident)
    assert comp.trim().du == 2 and comp.trim().dv == 0
    assert comp.coeffs[2, 0] == pytest.approx(1.0)


def test_compose_poly_identity_renames():
    # psi(x,y) = 3 + x^2 y through the identity comes back unchanged
    psi = Poly2([[3.0, 0], [0, 0], [0, 1.0]])
    ident = (Poly2([[0], [1.0]]), Poly2([[0, 1.0]]))
    comp = compose_with_map(psi, ident).trim()
    np.testing.assert_allclose(comp.coeffs, psi.coeffs, atol=1e-15)


def test_reparam_halving():
    u = Poly2([[0], [1.0]])
    r = reparam_to_cell(u, 0, 0, 1)
    assert r.coeffs[1, 0] == pytest.approx(0.5)
    assert r.coeffs[0, 0] == pytest.approx(0.0)
    r2 = reparam_to_cell(u, 1, 0, 1)
    assert r2.coeffs[0, 0] == pytest.approx(0.5)
    assert r2.coeffs[1, 0] == pytest.approx(0.5)


def test_reparam_uv_cell():
    uv = Poly2([[0, 0], [0, 1.0]])
    r = reparam_to_cell(uv, 1, 1, 2)
    # (1+u)(1+v)/16
    expect = np.array([[1, 1], [1, 1.0]]) / 16.0
    np.testing.assert_allclose(r.coeffs, expect, atol=1e-16)


def test_reparam_rejects_bad_cell():
    with pytest.raises(ValueError):
        reparam_to_cell(GX, 2, 0, 1)


def test_scale_physical_values():
    assert scale_physical(MonomialIndex(0, 0), 0.37) == 1.0
    assert scale_physical(MonomialIndex(2, 0), 0.5) == pytest.approx(0.25)
    assert scale_physical(MonomialIndex(1, 1), 0.549988) == pytest.approx(0.302487, abs=1e-6)


def test_partial_derivative():
    p = Poly2([[0, 0], [0, 0], [0, 1.0]])  # u^2 v
    d = partial_derivative(p, "u").trim()
    assert d.coeffs[1, 1] == pytest.approx(2.0)
    dv = partial_derivative(Poly2([[0], [1.0]]), "v").trim()
    assert dv.du == 0 and dv.dv == 0 and dv.coeffs[0, 0] == 0.0


def test_partial_derivative_of_curved_x():
    d = partial_derivative(GX, "u").trim()
    expect = np.array([[1.0, 0, 0], [0, 2.0, -2.0]])
    np.testing.assert_allclose(d.coeffs, expect, atol=1e-15)


def test_trim():
    p = Poly2([[1.0, 0, 0], [0, 0, 0]])
    t = p.trim()
    assert t.du == 0 and t.dv == 0


def test_exact_mode_reparam_is_exact():
    p = Poly2([[0, 0], [0, 1]], exact=True)
    r = reparam_to_cell(p, 1, 1, 2)
    assert r.coeffs[0, 0] == Fraction(1, 16)
    assert r.coeffs[1, 1] == Fraction(1, 16)


coeffs2d = st.lists(
    st.lists(st.integers(min_value=-4, max_value=4), min_size=1, max_size=3),
    min_size=1,
    max_size=3,
).map(lambda rows: [r + [0] * (max(len(x) for x in rows) - len(r)) for r in rows])


@settings(max_examples=50, deadline=None)
@given(coeffs2d, coeffs2d, st.integers(-3, 3), st.integers(-3, 3))
def test_compose_is_linear(c1, c2, a, b):
    p1, p2 = Poly2(c1), Poly2(c2)
    lhs = compose_with_map(a * p1 + b * p2, (GX, GY))
    rhs = a * compose_with_map(p1, (GX, GY)) + b * compose_with_map(p2, (GX, GY))
    diff = (lhs - rhs).coeffs
    scale = max(np.max(np.abs(lhs.coeffs)), 1.0)
    assert np.max(np.abs(diff)) <= 1e-13 * scale


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 1), st.integers(0, 1), st.integers(0, 3), st.integers(0, 3))
def test_reparam_nesting_is_dyadic(j1a, j2a, j1b, j2b):
    # cell-of-cell equals one finer cell with combined indices
    p = poly_mul(GX, GY)
    inner = reparam_to_cell(reparam_to_cell(p, j1a, j2a, 1), j1b, j2b, 2)
    combined = reparam_to_cell(p, 4 * j1a + j1b, 4 * j2a + j2b, 3)
    scale = max(np.max(np.abs(combined.coeffs)), 1e-30)
    assert np.max(np.abs(inner.coeffs - combined.coeffs)) <= 1e-13 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.floats(0.05, 2.0))
def test_scale_physical_matches_evaluation(alpha, beta, mu):
    psi = MonomialIndex(alpha, beta)
    fac = scale_physical(psi, mu)
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.1, 1.0, size=(10, 2))
    direct = (mu * pts[:, 0]) ** alpha * (mu * pts[:, 1]) ** beta
    scaled = fac * pts[:, 0] ** alpha * pts[:, 1] ** beta
    np.testing.assert_allclose(direct, scaled, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(coeffs2d, coeffs2d)
def test_mul_matches_brute_force(c1, c2):
    p1, p2 = Poly2(c1), Poly2(c2)
    np.testing.assert_allclose(
        poly_mul(p1, p2).coeffs, brute_mul(p1.coeffs, p2.coeffs), atol=1e-12
    )


def test_exact_and_float_composition_agree():
    gxe = Poly2([[0, 0, 0], [1, 0, 0], [0, 1, -1]], exact=True)
    gye = Poly2([[0, 1], [0, 0]], exact=True)
    ce = compose_with_map(MonomialIndex(2, 1), (gxe, gye))
    cf = compose_with_map(MonomialIndex(2, 1), (GX, GY))
    np.testing.assert_allclose(ce.coeffs.astype(float), cf.coeffs, atol=1e-13)
