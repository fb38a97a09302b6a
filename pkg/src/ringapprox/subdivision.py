"""Doo-Sabin and Catmull-Clark characteristic rings around an extraordinary vertex.

Control-net indexing
--------------------
Both schemes use the same sector bookkeeping around the center.  For valence
n, sector s (s = 0..n-1, counterclockwise) carries a quadrant grid with
integer coordinates (a, b); a runs outward along spoke s, b toward spoke
s+1.  Shared points are resolved by

    (a, 0) of sector s   ==  (0, a) of sector s-1        (spoke s points)
    (a,-1) of sector s   ==  (1, a) of sector s-1        (across spoke s)
    (-1,b) of sector s   ==  (b, 1) of sector s+1        (across spoke s+1)

Catmull-Clark (primal): control points sit at grid vertices.  The stored
neighborhood is the full three-ring, center plus per sector the 12 points
(a,b) with a in 1..3, b in 0..3; total 12n+1.  This is closed under one
subdivision step and large enough to hold the 4x4 control blocks of the
three bicubic patches per sector that form the characteristic ring (the
faces [1,2]x[0,1], [1,2]^2 and [0,1]x[1,2] of each sector).

Doo-Sabin (dual): control points sit at face centroids of the primal grid;
point (a, b) of sector s is the centroid of the primal face
[a,a+1]x[b,b+1], so nothing is shared between sectors.  The invariant core
is the n sector quads [(0,0),(1,0),(1,1),(0,1)] (4n points, cyclically
arranged); one subdivision application extends the core to the two-ring
(a,b in 0..2, 9n points), which feeds the 3x3 blocks of the three
biquadratic patches per sector (primal faces as above).

Normalization: the eigennet is rotated so spoke 0 maps onto the positive
x-axis and scaled so the ring's outermost point there is (1,0): that point
is the grid-(2,0) surface corner, i.e. patch [1,2]x[0,1] evaluated at (1,0).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .geometry import CapSpec, CapKind, ElementMap, RingSpec
from .numkernel import real_eigen_small
from .poly import Poly2, poly_add, poly_eval, poly_mul


class UnsupportedValence(Exception):
    pass


class DegenerateEigenspace(Exception):
    pass


class Scheme(Enum):
    DOO_SABIN = "doo-sabin"
    CATMULL_CLARK = "catmull-clark"


@dataclass(frozen=True)
class SchemeId:
    scheme: Scheme
    valence: int

    def __post_init__(self):
        if self.valence < 3:
            raise UnsupportedValence("valence must be >= 3")
        if self.valence > 50:
            raise UnsupportedValence("valence above 50 not supported")

    @property
    def degree(self) -> int:
        return 2 if self.scheme is Scheme.DOO_SABIN else 3

    @property
    def is_extraordinary(self) -> bool:
        return self.valence != 4


# -- Catmull-Clark matrix on the 12n+1 three-ring -----------------------------

_CC_TYPES = [(a, b) for a in (1, 2, 3) for b in (0, 1, 2, 3)]
_CC_TYPE_INDEX = {t: i for i, t in enumerate(_CC_TYPES)}


def _cc_index(n: int):
    def idx(s: int, a: int, b: int) -> int:
        s %= n
        if a == 0:
            if b == 0:
                return 0
            return idx(s + 1, b, 0)
        return 1 + 12 * s + _CC_TYPE_INDEX[(a, b)]

    return idx


def _cc_matrix(n: int) -> np.ndarray:
    # exact rational stencils; affine invariance (row sums 1) holds exactly
    N = 12 * n + 1
    idx = _cc_index(n)
    A = np.full((N, N), Fraction(0), dtype=object)

    def face(s, a0, b0):
        w = np.full(N, Fraction(0), dtype=object)
        for (a, b) in ((a0, b0), (a0 + 1, b0), (a0 + 1, b0 + 1), (a0, b0 + 1)):
            w[idx(s, a, b)] += Fraction(1, 4)
        return w

    def edge_pt(v0, v1, fA, fB):
        w = fA * Fraction(1, 4) + fB * Fraction(1, 4)
        w[v0] += Fraction(1, 4)
        w[v1] += Fraction(1, 4)
        return w

    def vertex_pt(v, edges, diags):
        w = np.full(N, Fraction(0), dtype=object)
        w[v] += Fraction(9, 16)
        for e in edges:
            w[e] += Fraction(3, 32)
        for d in diags:
            w[d] += Fraction(1, 64)
        return w

    row = np.full(N, Fraction(0), dtype=object)
    row[0] = 1 - Fraction(7, 4 * n)
    for s in range(n):
        row[idx(s, 1, 0)] += Fraction(3, 2 * n * n)
        row[idx(s, 1, 1)] += Fraction(1, 4 * n * n)
    A[0] = row

    for s in range(n):
        F00 = face(s, 0, 0)
        F00m = face(s - 1, 0, 0)
        F10 = face(s, 1, 0)
        F11 = face(s, 1, 1)
        F01 = face(s, 0, 1)
        F01m = face(s - 1, 0, 1)
        A[idx(s, 1, 0)] = edge_pt(0, idx(s, 1, 0), F00, F00m)
        A[idx(s, 1, 1)] = F00
        A[idx(s, 2, 0)] = vertex_pt(
            idx(s, 1, 0),
            [0, idx(s, 2, 0), idx(s, 1, 1), idx(s - 1, 1, 1)],
            [idx(s, 0, 1), idx(s, 2, 1), idx(s - 1, 1, 2), idx(s - 1, 1, 0)],
        )
        A[idx(s, 2, 1)] = edge_pt(idx(s, 1, 0), idx(s, 1, 1), F00, F10)
        A[idx(s, 2, 2)] = vertex_pt(
            idx(s, 1, 1),
            [idx(s, 1, 0), idx(s, 0, 1), idx(s, 2, 1), idx(s, 1, 2)],
            [0, idx(s, 2, 0), idx(s, 2, 2), idx(s, 0, 2)],
        )
        A[idx(s, 1, 2)] = edge_pt(idx(s, 1, 1), idx(s, 0, 1), F00, F01)
        A[idx(s, 3, 0)] = edge_pt(idx(s, 1, 0), idx(s, 2, 0), F10, F01m)
        A[idx(s, 3, 1)] = F10
        A[idx(s, 3, 2)] = edge_pt(idx(s, 1, 1), idx(s, 2, 1), F10, F11)
        A[idx(s, 3, 3)] = F11
        A[idx(s, 2, 3)] = edge_pt(idx(s, 1, 1), idx(s, 1, 2), F01, F11)
        A[idx(s, 1, 3)] = F01
    return A


# -- Doo-Sabin matrix on the 4n core -------------------------------------------

_DS_TYPES = [(0, 0), (1, 0), (1, 1), (0, 1)]
_DS_TYPE_INDEX = {t: i for i, t in enumerate(_DS_TYPES)}


def doo_sabin_weights(n: int) -> np.ndarray:
    """Classical Doo-Sabin stencil for an n-gon face.

    w_j = (3 + 2 cos(2 pi j / n)) / (4n) for j != 0; the vertex weight
    (n+5)/(4n) is formed as the complement so float row sums are exactly one.
    """
    w = np.array([(3 + 2 * np.cos(2 * np.pi * j / n)) / (4 * n) for j in range(n)])
    w[0] = 1.0 - np.sum(w[1:])
    return w


def _ds_index(n: int):
    def idx(s: int, t) -> int:
        return 4 * (s % n) + _DS_TYPE_INDEX[t]

    return idx


def _ds_matrix(n: int) -> np.ndarray:
    N = 4 * n
    idx = _ds_index(n)
    w = doo_sabin_weights(n)
    A = np.zeros((N, N))
    q9, q3, q1 = 9 / 16, 3 / 16, 1 / 16
    for s in range(n):
        for j in range(n):
            A[idx(s, (0, 0)), idx(s + j, (0, 0))] += float(w[j])
        A[idx(s, (1, 0)), idx(s, (0, 0))] += q9
        A[idx(s, (1, 0)), idx(s, (1, 0))] += q3
        A[idx(s, (1, 0)), idx(s - 1, (0, 0))] += q3
        A[idx(s, (1, 0)), idx(s - 1, (0, 1))] += q1
        A[idx(s, (0, 1)), idx(s, (0, 0))] += q9
        A[idx(s, (0, 1)), idx(s, (0, 1))] += q3
        A[idx(s, (0, 1)), idx(s + 1, (0, 0))] += q3
        A[idx(s, (0, 1)), idx(s + 1, (1, 0))] += q1
        A[idx(s, (1, 1)), idx(s, (0, 0))] += q9
        A[idx(s, (1, 1)), idx(s, (1, 0))] += q3
        A[idx(s, (1, 1)), idx(s, (0, 1))] += q3
        A[idx(s, (1, 1)), idx(s, (1, 1))] += q1
    return A


def _ds_extend(n: int, val):
    """One Doo-Sabin step on per-sector core values -> two-ring of the refined net.

    ``val(s, t)`` returns the core value (any linear-space element) for sector
    s and core type t; the result dict maps (s, a, b), a,b in 0..2.
    """
    out = {}
    for s in range(n):
        c00 = val(s, (0, 0))
        c10 = val(s, (1, 0))
        c11 = val(s, (1, 1))
        c01 = val(s, (0, 1))
        c00m = val(s - 1, (0, 0))
        c01m = val(s - 1, (0, 1))
        c00p = val(s + 1, (0, 0))
        c10p = val(s + 1, (1, 0))
        w = doo_sabin_weights(n)
        out[(s, 0, 0)] = sum(float(w[j]) * val(s + j, (0, 0)) for j in range(n))
        out[(s, 1, 0)] = (9 * c00 + 3 * c10 + 3 * c00m + c01m) / 16
        out[(s, 0, 1)] = (9 * c00 + 3 * c01 + 3 * c00p + c10p) / 16
        out[(s, 1, 1)] = (9 * c00 + 3 * c10 + 3 * c01 + c11) / 16
        out[(s, 2, 0)] = (9 * c10 + 3 * c00 + 3 * c01m + c00m) / 16
        out[(s, 2, 1)] = (9 * c10 + 3 * c00 + 3 * c11 + c01) / 16
        out[(s, 2, 2)] = (9 * c11 + 3 * c10 + 3 * c01 + c00) / 16
        out[(s, 1, 2)] = (9 * c01 + 3 * c11 + 3 * c00 + c10) / 16
        out[(s, 0, 2)] = (9 * c01 + 3 * c10p + 3 * c00 + c00p) / 16
    return out


# -- public matrix / eigen API --------------------------------------------------


def subdivision_matrix(scheme_id: SchemeId) -> np.ndarray:
    """Local subdivision matrix on the invariant control neighborhood.

    Doo-Sabin: 4n x 4n (the n sector quads incident to the extraordinary
    face).  Catmull-Clark: (12n+1) x (12n+1) (full three-ring).  Rows sum
    to one exactly.
    """
    n = scheme_id.valence
    if scheme_id.scheme is Scheme.DOO_SABIN:
        return _ds_matrix(n)
    return _cc_matrix(n).astype(float)


def _fourier_block(scheme_id: SchemeId, k: int) -> np.ndarray:
    """Block of the subdivision matrix at cyclic frequency k.

    Per-sector point types are coupled only through sector shifts, so the
    matrix block-diagonalizes over the cyclic group; the center point (CC)
    contributes only to the k=0 block.
    """
    n = scheme_id.valence
    A = subdivision_matrix(scheme_id)
    if scheme_id.scheme is Scheme.DOO_SABIN:
        ntypes, off = 4, 0
    else:
        ntypes, off = 12, 1
    om = np.exp(2j * np.pi * k / n)
    B = np.zeros((ntypes, ntypes), dtype=complex)
    for t in range(ntypes):
        for d in range(n):
            B[t, :] += A[off + t, off + ntypes * d : off + ntypes * d + ntypes] * om**d
    if scheme_id.scheme is Scheme.CATMULL_CLARK and k % n == 0:
        full = np.zeros((ntypes + 1, ntypes + 1), dtype=complex)
        full[1:, 1:] = B
        full[0, 0] = A[0, 0]
        for d in range(n):
            full[0, 1:] += A[0, 1 + 12 * d : 1 + 12 * d + 12]
        full[1:, 0] = A[1 : 13, 0]
        return full
    return B


def subdominant_lambda(scheme_id: SchemeId) -> float:
    """Second-largest eigenvalue modulus, from the k=1 cyclic-Fourier block."""
    pairs = real_eigen_small(_fourier_block(scheme_id, 1))
    if not pairs:
        raise DegenerateEigenspace("k=1 block has no real eigenvalue")
    lam = pairs[0][0]
    # geometric multiplicity two: the conjugate block carries the partner
    partner = real_eigen_small(_fourier_block(scheme_id, scheme_id.valence - 1))[0][0]
    if abs(lam - partner) > 1e-9:
        raise DegenerateEigenspace("k=1 and k=n-1 blocks disagree")
    if not 0.0 < lam < 1.0:
        raise DegenerateEigenspace(f"subdominant eigenvalue {lam} outside ]0,1[")
    return lam


def eigenvalue_profile(scheme_id: SchemeId) -> np.ndarray:
    """All eigenvalue moduli of the neighborhood matrix, sorted descending."""
    vals = np.linalg.eigvals(subdivision_matrix(scheme_id))
    return np.sort(np.abs(vals))[::-1]


# -- characteristic ring ---------------------------------------------------------


@dataclass(frozen=True)
class CharacteristicRing:
    scheme_id: SchemeId
    lam: float
    sector_maps: tuple  # sector-major: n entries of (P10, P11, P01)
    sector: tuple  # element indices of the report sector in the flat list
    net: dict  # (s, a, b) -> complex control point (x + iy)

    @property
    def elements(self):
        return tuple(m for sec in self.sector_maps for m in sec)

    def ring_spec(self) -> RingSpec:
        caps, tags = _coons_cap_base(self)
        return RingSpec(
            elements=self.elements,
            lam=self.lam,
            sector=self.sector,
            cap_base=caps,
            cap_sectors=tags,
        )


def _bspline_span_basis(deg: int) -> np.ndarray:
    """Monomial coefficients of the uniform B-spline mid-span basis.

    Row i holds the t-polynomial of control point i over one knot span.
    """
    if deg == 2:
        return np.array([[0.5, -1.0, 0.5], [0.5, 1.0, -1.0], [0.0, 0.0, 0.5]])
    if deg == 3:
        return (
            np.array(
                [[1, -3, 3, -1], [4, 0, -6, 3], [1, 3, 3, -3], [0, 0, 0, 1]],
                dtype=float,
            )
            / 6.0
        )
    raise ValueError("unsupported degree")


def _patch_from_block(D: np.ndarray, deg: int, allow_singular=False) -> ElementMap:
    Bc = _bspline_span_basis(deg)
    gx = np.einsum("ia,jb,ij->ab", Bc, Bc, D.real)
    gy = np.einsum("ia,jb,ij->ab", Bc, Bc, D.imag)
    return ElementMap(Poly2(gx), Poly2(gy), q=deg, allow_singular=allow_singular)


def characteristic_ring(scheme_id: SchemeId) -> CharacteristicRing:
    """Build the characteristic ring as per-sector polynomial patches.

    The subdominant eigenvector of the k=1 Fourier block plants the 2D
    control net (complex encoding x+iy, sector s = sector 0 times
    exp(2*pi*i*s/n)); B-spline mid-span extraction yields three patches per
    sector; the net is then rotated/scaled per the module docstring.
    """
    n = scheme_id.valence
    lam = subdominant_lambda(scheme_id)
    block = _fourier_block(scheme_id, 1)
    pairs = [pv for pv in real_eigen_small(block) if abs(pv[0] - lam) <= 1e-9 * max(lam, 1)]
    if not pairs:
        raise DegenerateEigenspace("subdominant eigenvector not found in k=1 block")
    yhat = np.asarray(pairs[0][1], dtype=complex)
    om = np.exp(2j * np.pi / n)

    if scheme_id.scheme is Scheme.CATMULL_CLARK:
        idx_of = _CC_TYPE_INDEX

        def raw(s, a, b):
            if a == 0 and b == 0:
                return 0j
            if b == -1:
                return raw(s - 1, 1, a)
            if a == -1:
                return raw(s + 1, b, 1)
            if a == 0:
                return raw(s + 1, b, 0)
            return yhat[idx_of[(a, b)]] * om ** (s % n)

        net_get = raw
        deg = 3
    else:
        core = {}
        for s in range(n):
            for t in _DS_TYPES:
                core[(s % n, t)] = yhat[_DS_TYPE_INDEX[t]] * om ** (s % n)
        ext = _ds_extend(n, lambda s, t: core[(s % n, t)])

        def raw(s, a, b):
            s %= n
            if b == -1:
                return raw(s - 1, 0, a)
            if a == -1:
                return raw(s + 1, b, 0)
            return ext[(s, a, b)]

        net_get = raw
        deg = 2

    # spoke alignment: patch [1,2]x[0,1] of sector 0 evaluated at (1,0) is the
    # outermost spoke point; rotate it onto +x and scale it to (1,0).
    probe = _block_apply(net_get, 0, 1, 0, deg)
    pm = _patch_from_block(probe, deg)
    zx, zy = pm(1.0, 0.0)
    z = complex(zx, zy)
    if abs(z) == 0:
        raise DegenerateEigenspace("degenerate spoke point")
    factor = 1.0 / z

    def net(s, a, b):
        return net_get(s, a, b) * factor

    # orientation: counterclockwise sectors; mirror via conjugation if needed
    test = _patch_from_block(_block_apply(net, 0, 1, 0, deg), deg)
    det_mid = test.jacobian_eval(0.5, 0.5)[4]
    conj = det_mid < 0

    def net_final(s, a, b):
        z = net_get(s, a, b) * factor
        return z.conjugate() if conj else z

    sector_maps = []
    for s in range(n):
        patches = []
        for (a0, b0) in ((1, 0), (1, 1), (0, 1)):
            D = _block_apply(net_final, s, a0, b0, deg)
            patches.append(_patch_from_block(D, deg))
        sector_maps.append(tuple(patches))

    net_dict = {}
    rng = range(0, 4) if deg == 3 else range(0, 3)
    for s in range(n):
        for a in rng:
            for b in rng:
                net_dict[(s, a, b)] = net_final(s, a, b)

    ring = CharacteristicRing(
        scheme_id=scheme_id,
        lam=lam,
        sector_maps=tuple(sector_maps),
        sector=(0, 1, 2),
        net=net_dict,
    )
    _validate_ring(ring)
    return ring


def _block_apply(net, s, a0, b0, deg) -> np.ndarray:
    m = deg + 1
    D = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            D[i, j] = net(s, a0 - 1 + i, b0 - 1 + j)
    return D


def _validate_ring(ring: CharacteristicRing, tol: float = 1e-9) -> None:
    p10 = ring.sector_maps[0][0]
    x1, y1 = p10(1.0, 0.0)
    if abs(x1 - 1.0) > 1e-12 or abs(y1) > 1e-12:
        raise DegenerateEigenspace("spoke normalization failed")
    # self-similarity along the spoke: grid (1,0) point is lam * grid (2,0)
    x0, y0 = p10(0.0, 0.0)
    if abs(x0 - ring.lam) > tol or abs(y0) > tol:
        raise DegenerateEigenspace("eigennet is not self-similar along the spoke")


# -- Coons cap -------------------------------------------------------------------


def _edge_poly_u(gmap: ElementMap, v_fixed: float):
    """The u-curve of a patch at fixed v, as a pair of 1-d coefficient rows."""
    Sv = np.array([v_fixed**j for j in range(gmap.gx.dv + 1)])
    return gmap.gx.coeffs @ Sv, gmap.gy.coeffs @ Sv


def _edge_poly_v(gmap: ElementMap, u_fixed: float):
    Su = np.array([u_fixed**i for i in range(gmap.gx.du + 1)])
    return Su @ gmap.gx.coeffs, Su @ gmap.gy.coeffs


def _coons_piece(p10: ElementMap, p01: ElementMap, deg: int) -> ElementMap:
    """Bilinearly blended Coons patch for one sector of the level-0 hole.

    Boundary: straight spokes from the origin to the inner ring corners, and
    the two inner-ring edges (inner edge of the [1,2]x[0,1] patch and of the
    [0,1]x[1,2] patch).
    """
    ax, ay = p10(0.0, 0.0)  # inner spoke-s corner
    bx, by = p01(0.0, 0.0)  # inner spoke-(s+1) corner
    dx, dy = p10(0.0, 1.0)  # inner diagonal corner
    rx, ry = _edge_poly_v(p10, 0.0)  # right edge r(v) = P10(0, v)
    tx, ty = _edge_poly_u(p01, 0.0)  # top edge t(u) = P01(u, 0)

    def assemble(rc, tc, A, Bq, D):
        out = np.zeros((deg + 1, deg + 1))
        # (1-v) * (u*A): bottom straight spoke
        out[1, 0] += A
        out[1, 1] -= A
        # v * t(u)
        out[: len(tc), 1] += tc
        # (1-u) * (v*B): left straight spoke
        out[0, 1] += Bq
        out[1, 1] -= Bq
        # u * r(v)
        out[1, : len(rc)] += rc
        # corner corrections: -(u(1-v)A + uvD + (1-u)vB)
        out[1, 0] -= A
        out[1, 1] += A
        out[1, 1] -= D
        out[0, 1] -= Bq
        out[1, 1] += Bq
        return out

    gx = assemble(rx, tx, ax, bx, dx)
    gy = assemble(ry, ty, ay, by, dy)
    return ElementMap(Poly2(gx), Poly2(gy), q=deg, allow_singular=True)


def _coons_cap_base(ring: CharacteristicRing):
    maps = []
    tags = []
    deg = ring.scheme_id.degree
    for s in range(ring.scheme_id.valence):
        p10, _, p01 = ring.sector_maps[s]
        maps.append(_coons_piece(p10, p01, deg))
        tags.append(s)
    return tuple(maps), tuple(tags)


def coons_cap(ring: CharacteristicRing, level: int) -> CapSpec:
    """Per-sector Coons cap for the level-`level` mesh, scaled by lam**(level+1)."""
    maps, tags = _coons_cap_base(ring)
    mu = ring.lam**level  # base pieces already cover the level-0 hole
    return CapSpec(
        kind=CapKind.COONS_PATCH,
        maps=tuple(m.scaled(mu) for m in maps),
        scale=ring.lam ** (level + 1),
        sectors=tags,
    )
