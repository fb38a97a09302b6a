import json

import numpy as np
import pytest

from ringapprox.geometry import (
    CapKind,
    CapUnavailable,
    Cell,
    ElementMap,
    RingSpec,
    build_mesh,
    build_tensor_mesh,
    cell_map,
    check_regular,
    jacobian,
    make_sb1,
    make_sb2,
    mesh_to_json,
)
from ringapprox.numkernel import gauss_legendre
from ringapprox.poly import Poly2

IDENTITY = ElementMap(Poly2([[0], [1.0]]), Poly2([[0, 1.0]]), q=1)
CURVED = ElementMap(Poly2([[0, 0, 0], [1, 0, 0], [0, 1, -1]]), Poly2([[0, 1.0], [0, 0]]), q=2)


def test_sb1_boundary_points():
    gmap, _ = make_sb1()
    assert gmap(1.0, 1.0) == pytest.approx((1.0, 0.0), abs=1e-15)
    assert gmap(1.0, 0.0) == pytest.approx((0.0, 1.0), abs=1e-15)


def test_sb1_ring_is_affine_restriction():
    gmap, ring = make_sb1()
    for v in np.linspace(0, 1, 7):
        assert ring.elements[0](0.0, v) == pytest.approx(gmap(0.5, v), abs=1e-14)
        assert ring.elements[0](1.0, v) == pytest.approx(gmap(1.0, v), abs=1e-14)


def test_sb2_apex_and_degree():
    gmap, ring = make_sb2()
    assert gmap(1.0, 1.0) == pytest.approx((1.0, 0.0), abs=1e-15)
    for v in np.linspace(0, 1, 5):
        assert gmap(0.0, v) == pytest.approx((0.0, 0.0), abs=1e-15)
    el = ring.elements[0]
    assert el.gx.du <= 3 and el.gx.dv <= 3 and el.gy.du <= 3 and el.gy.dv <= 3


def test_mesh_cell_counts_sb1():
    _, ring = make_sb1()
    mesh0 = build_mesh(ring, 0)
    assert len(mesh0.cells) == 1 and len(mesh0.cap.maps) == 1
    mesh2 = build_mesh(ring, 2)
    assert len(mesh2.cells) == 16 + 4 + 1


def test_mesh_cell_count_formula_many_levels():
    _, ring = make_sb1()
    for lvl in range(7):
        mesh = build_mesh(ring, lvl)
        assert len(mesh.cells) == mesh.cell_count_expected()


def test_mesh_cell_count_n20():
    el = make_sb1()[1].elements[0]
    ring = RingSpec(elements=(el,) * 20, lam=0.5, global_map=make_sb1()[0])
    for lvl in (0, 3, 6):
        mesh = build_mesh(ring, lvl)
        assert len(mesh.cells) == 20 * sum(4 ** (lvl - i) for i in range(lvl + 1))


def test_15_patch_ring_level1_count():
    # three patches per sector, five sectors
    el = make_sb1()[1].elements[0]
    ring = RingSpec(elements=(el,) * 15, lam=0.5, global_map=make_sb1()[0])
    mesh = build_mesh(ring, 1)
    assert len(mesh.cells) == 15 * (4 + 1)


def test_cell_map_level0_unchanged():
    _, ring = make_sb1()
    mesh = build_mesh(ring, 0)
    cm = cell_map(mesh, Cell(0, 0, 0, 0, 0))
    np.testing.assert_allclose(cm.gx.coeffs, ring.elements[0].gx.coeffs, atol=1e-15)


def test_cell_map_scaling():
    _, ring = make_sb1()
    mesh = build_mesh(ring, 1)
    cm = cell_map(mesh, Cell(1, 0, 0, 0, 0))
    np.testing.assert_allclose(cm.gx.coeffs, 0.5 * ring.elements[0].gx.coeffs, atol=1e-15)


def test_self_similarity_coefficientwise():
    _, ring = make_sb1()
    mesh3 = build_mesh(ring, 3)
    a = cell_map(mesh3, Cell(2, 0, 1, 1, 1))
    b = cell_map(mesh3, Cell(1, 0, 1, 1, 1))
    np.testing.assert_allclose(a.gx.coeffs, 0.5 * b.gx.coeffs, rtol=1e-13, atol=1e-16)
    np.testing.assert_allclose(a.gy.coeffs, 0.5 * b.gy.coeffs, rtol=1e-13, atol=1e-16)


def test_cell_diameters_follow_two_lambda_scaling():
    _, ring = make_sb1()
    lvl = 3
    mesh = build_mesh(ring, lvl)
    diams = {}
    for i in range(lvl + 1):
        c = next(c for c in mesh.cells if c.i == i and c.j1 == 0 and c.j2 == 0)
        diams[i] = cell_map(mesh, c).diameter_estimate()
    # diam ~ lam^i / 2^(lvl-i): consecutive ratio (2*lam)^1 = 1 here, within factor 4
    for i in range(1, lvl + 1):
        ratio = diams[i] / diams[0] / (2 * ring.lam) ** i
        assert 0.25 < ratio < 4.0


def test_jacobian_identity():
    J, det = jacobian(IDENTITY, 0.3, 0.8)
    np.testing.assert_allclose(J, np.eye(2), atol=1e-15)
    assert det == pytest.approx(1.0)


def test_jacobian_sb1_singular_apex():
    gmap, _ = make_sb1()
    _, det = jacobian(gmap, 0.0, 0.5)
    assert det == pytest.approx(0.0, abs=1e-15)


def test_jacobian_curved_example_value():
    _, det = jacobian(CURVED, 0.5, 0.5)
    assert det == pytest.approx(1.25)


def test_regularity_check():
    nodes = gauss_legendre(6).nodes
    check_regular(CURVED, nodes)
    gmap, ring = make_sb1()
    check_regular(ring.elements[0], nodes)  # constant-sign det passes
    from ringapprox.geometry import SingularJacobian

    nonsing = ElementMap(gmap.gx, gmap.gy, q=2, allow_singular=False)
    # the full scaled-boundary patch is fine at interior Gauss nodes but the
    # folded map u -> (u-ized) with a sign change must be rejected
    fold = ElementMap(Poly2([[0, 0], [0, 0], [-1, 2.0]]), Poly2([[0, 1.0]]), q=2)
    with pytest.raises(SingularJacobian):
        check_regular(fold, nodes)


def test_ring_cells_tile_ring():
    # sum of |det J| integrals over ring-i cells = area(ring 0) * lam^(2i)
    _, ring = make_sb1()
    lvl = 2
    mesh = build_mesh(ring, lvl)
    rule = gauss_legendre(8)
    U, V = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    W = np.outer(rule.weights, rule.weights)
    areas = [0.0] * (lvl + 1)
    for c in mesh.cells:
        det = cell_map(mesh, c).jacobian_eval(U, V)[4]
        areas[c.i] += float(np.sum(W * np.abs(det)))
    for i in range(1, lvl + 1):
        assert areas[i] == pytest.approx(areas[0] * ring.lam ** (2 * i), rel=1e-10)


def test_tensor_mesh_counts():
    gmap, _ = make_sb2()
    assert len(build_tensor_mesh(gmap, 0).cells) == 4
    assert len(build_tensor_mesh(gmap, 2).cells) == 64
    assert build_tensor_mesh(gmap, 1).cap.kind is CapKind.EXCLUDED


def test_cap_requires_data():
    el = make_sb1()[1].elements[0]
    ring = RingSpec(elements=(el,), lam=0.5)
    with pytest.raises(CapUnavailable):
        build_mesh(ring, 0, CapKind.SCALED_SINGULAR)
    with pytest.raises(CapUnavailable):
        build_mesh(ring, 0, CapKind.COONS_PATCH)


def test_excluded_cap():
    _, ring = make_sb1()
    mesh = build_mesh(ring, 1, CapKind.EXCLUDED)
    assert mesh.cap.maps == ()


def test_mesh_json_export():
    _, ring = make_sb1()
    doc = json.loads(mesh_to_json(build_mesh(ring, 1)))
    assert doc["level"] == 1
    assert doc["lambda"] == 0.5
    assert len(doc["cells"]) == 5
    assert doc["cap"]["kind"] == "scaled-singular"
    assert doc["cap"]["scale"] == pytest.approx(0.25)


def test_bad_ring_spec():
    el = make_sb1()[1].elements[0]
    with pytest.raises(ValueError):
        RingSpec(elements=(el,), lam=1.5)
    with pytest.raises(ValueError):
        RingSpec(elements=(el,), lam=0.5, sector=(3,))
