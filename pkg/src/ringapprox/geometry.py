"""Element maps, self-similar rings, level meshes with caps.

A ring domain is the union of scaled copies ``lam**i * Omega0`` of a level-0
ring, where Omega0 consists of N polynomial element maps on the unit square.
The level-L mesh refines ring i dyadically L-i times and closes the center
hole with a single-layer cap.

Orientation note: an element map is accepted as regular when det J keeps one
sign and stays away from zero on the quadrature grid.  The scaled-boundary
examples below are regular in this sense but negatively oriented as printed;
integration uses |det J| throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .poly import Poly2, affine_reparam, partial_derivative, poly_eval, reparam_to_cell


class SingularJacobian(Exception):
    """Jacobian vanished on an element that was not flagged allow_singular."""


class CapUnavailable(Exception):
    """Requested cap kind cannot be built from the ring data."""


class ElementMap:
    """Planar polynomial map G = (gx, gy) from the unit square."""

    __slots__ = ("gx", "gy", "q", "allow_singular", "_jac")

    def __init__(self, gx: Poly2, gy: Poly2, q: int, allow_singular: bool = False):
        object.__setattr__(self, "gx", gx)
        object.__setattr__(self, "gy", gy)
        object.__setattr__(self, "q", int(q))
        object.__setattr__(self, "allow_singular", bool(allow_singular))
        object.__setattr__(self, "_jac", None)

    def __setattr__(self, *_):
        raise AttributeError("ElementMap is immutable")

    def __call__(self, u, v):
        return poly_eval(self.gx, u, v), poly_eval(self.gy, u, v)

    def _jac_polys(self):
        jac = object.__getattribute__(self, "_jac")
        if jac is None:
            jac = (
                partial_derivative(self.gx, "u"),
                partial_derivative(self.gx, "v"),
                partial_derivative(self.gy, "u"),
                partial_derivative(self.gy, "v"),
            )
            object.__setattr__(self, "_jac", jac)
        return jac

    def jacobian_eval(self, u, v):
        """(xu, xv, yu, yv, det) evaluated at points (vectorized)."""
        xu_p, xv_p, yu_p, yv_p = self._jac_polys()
        xu = poly_eval(xu_p, u, v)
        xv = poly_eval(xv_p, u, v)
        yu = poly_eval(yu_p, u, v)
        yv = poly_eval(yv_p, u, v)
        return xu, xv, yu, yv, xu * yv - xv * yu

    def scaled(self, mu: float) -> "ElementMap":
        return ElementMap(mu * self.gx, mu * self.gy, self.q, self.allow_singular)

    def restricted_to_cell(self, j1: int, j2: int, k: int) -> "ElementMap":
        return ElementMap(
            reparam_to_cell(self.gx, j1, j2, k),
            reparam_to_cell(self.gy, j1, j2, k),
            self.q,
            self.allow_singular,
        )

    def boundary_samples(self, n: int = 20) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n)
        zeros = np.zeros_like(t)
        ones = np.ones_like(t)
        us = np.concatenate([t, t, zeros, ones])
        vs = np.concatenate([zeros, ones, t, t])
        x, y = self(us, vs)
        return np.column_stack([x, y])

    def diameter_estimate(self, n: int = 20) -> float:
        pts = self.boundary_samples(n)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(np.max(d2)))


def jacobian(G: ElementMap, u: float, v: float):
    """2x2 Jacobian matrix and its determinant at one point."""
    xu, xv, yu, yv, det = G.jacobian_eval(u, v)
    return np.array([[xu, xv], [yu, yv]]), float(det)


def check_regular(G: ElementMap, quad_nodes: np.ndarray, tol: float = 1e-12) -> None:
    """Raise SingularJacobian unless det J keeps one sign on the node grid."""
    U, V = np.meshgrid(quad_nodes, quad_nodes, indexing="ij")
    det = G.jacobian_eval(U, V)[4]
    scale = float(np.max(np.abs(det)))
    if scale == 0.0 or np.min(np.abs(det)) <= tol * scale or np.min(det) * np.max(det) < 0:
        if not G.allow_singular:
            raise SingularJacobian("det J vanishes or changes sign on quadrature grid")


class CapKind(Enum):
    SCALED_SINGULAR = "scaled-singular"
    COONS_PATCH = "coons-patch"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class RingSpec:
    """Level-0 ring: N element maps, shrink factor, optional report sector.

    ``global_map`` backs scaled-singular caps (scaled-boundary domains);
    ``cap_base`` holds per-sector cap maps covering the level-0 hole
    (subdivision rings), with ``cap_sectors`` tagging each piece.
    """

    elements: tuple
    lam: float
    sector: Optional[tuple] = None
    global_map: Optional[ElementMap] = None
    cap_base: Optional[tuple] = None
    cap_sectors: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in ]0,1[")
        if len(self.elements) < 1:
            raise ValueError("ring needs at least one element")
        if self.sector is not None:
            bad = [n for n in self.sector if not 0 <= n < len(self.elements)]
            if bad:
                raise ValueError(f"sector indices out of range: {bad}")


@dataclass(frozen=True)
class Cell:
    """One mesh cell: dyadic sub-square (j1, j2) at refinement k of element n in ring i."""

    i: int
    n: int
    j1: int
    j2: int
    k: int

    def __post_init__(self):
        if not (0 <= self.j1 < 2**self.k and 0 <= self.j2 < 2**self.k):
            raise ValueError("dyadic indices out of range")


@dataclass(frozen=True)
class CapSpec:
    kind: CapKind
    maps: tuple
    scale: float
    sectors: Optional[tuple] = None  # per-piece sector tag, None entries always included


@dataclass(frozen=True)
class MeshLevel:
    level: int
    ring: RingSpec
    cells: tuple
    cap: CapSpec
    kind: str = "ring"  # "ring" | "tensor"

    def cell_count_expected(self) -> int:
        if self.kind == "tensor":
            return 4 ** (self.level + 1)
        N = len(self.ring.elements)
        return N * sum(4 ** (self.level - i) for i in range(self.level + 1))


def cell_map(mesh: MeshLevel, cell: Cell) -> ElementMap:
    """lam**i * G0_n restricted to the dyadic cell."""
    base = mesh.ring.elements[cell.n]
    lam = 1.0 if mesh.kind == "tensor" else mesh.ring.lam
    return base.restricted_to_cell(cell.j1, cell.j2, cell.k).scaled(lam**cell.i)


def build_mesh(ring: RingSpec, level: int, cap: CapKind = CapKind.SCALED_SINGULAR) -> MeshLevel:
    """Rings 0..level with dyadic refinement level-i, plus the chosen cap."""
    if level < 0:
        raise ValueError("level must be >= 0")
    cells = []
    for i in range(level + 1):
        k = level - i
        for n in range(len(ring.elements)):
            for j1 in range(2**k):
                for j2 in range(2**k):
                    cells.append(Cell(i=i, n=n, j1=j1, j2=j2, k=k))
    cap_spec = _make_cap(ring, level, cap)
    mesh = MeshLevel(level=level, ring=ring, cells=tuple(cells), cap=cap_spec)
    assert len(mesh.cells) == mesh.cell_count_expected()
    return mesh


def _make_cap(ring: RingSpec, level: int, cap: CapKind) -> CapSpec:
    scale = ring.lam ** (level + 1)
    if cap is CapKind.EXCLUDED:
        return CapSpec(kind=cap, maps=(), scale=scale)
    if cap is CapKind.SCALED_SINGULAR:
        if ring.global_map is None:
            raise CapUnavailable("scaled-singular cap needs the ring's global map")
        m = ring.global_map.scaled(scale)
        m = ElementMap(m.gx, m.gy, m.q, allow_singular=True)
        return CapSpec(kind=cap, maps=(m,), scale=scale, sectors=(None,))
    if cap is CapKind.COONS_PATCH:
        if not ring.cap_base:
            raise CapUnavailable("Coons cap needs inner boundary data (cap_base)")
        mu = ring.lam**level  # cap_base already covers the level-0 hole = lam * Omega
        maps = tuple(m.scaled(mu) for m in ring.cap_base)
        return CapSpec(kind=cap, maps=maps, scale=scale, sectors=ring.cap_sectors)
    raise CapUnavailable(f"unknown cap kind {cap}")


def build_tensor_mesh(global_map: ElementMap, level: int) -> MeshLevel:
    """The whole patch uniformly bisected level+1 times; no ring structure, no cap."""
    if level < 0:
        raise ValueError("level must be >= 0")
    k = level + 1
    gm = ElementMap(global_map.gx, global_map.gy, global_map.q, allow_singular=True)
    ring = RingSpec(elements=(gm,), lam=0.5, global_map=gm)
    cells = tuple(
        Cell(i=0, n=0, j1=j1, j2=j2, k=k) for j1 in range(2**k) for j2 in range(2**k)
    )
    cap = CapSpec(kind=CapKind.EXCLUDED, maps=(), scale=0.5 ** (level + 1))
    return MeshLevel(level=level, ring=ring, cells=cells, cap=cap, kind="tensor")


# -- scaled-boundary examples ------------------------------------------------


def _sb_maps(x_curve: Sequence[float], q: int, lam: float):
    """Scaled-boundary global map (u * c(v)) and its level-0 ring element.

    x_curve holds the v-coefficients of the boundary curve's x-component;
    the y-component is fixed to 1 - v**2.  The level-0 ring is the image of
    ]lam,1[ x ]0,1[, realized as G0(u,v) = Ghat(lam + (1-lam) u, v).
    """
    gx = np.zeros((2, len(x_curve)))
    gx[1, :] = x_curve
    gy = np.zeros((2, 3))
    gy[1, 0] = 1.0
    gy[1, 2] = -1.0
    ghat = ElementMap(Poly2(gx), Poly2(gy), q=q, allow_singular=True)
    g0 = ElementMap(
        affine_reparam(ghat.gx, lam, 1.0 - lam, 0.0, 1.0),
        affine_reparam(ghat.gy, lam, 1.0 - lam, 0.0, 1.0),
        q=q,
    )
    ring = RingSpec(elements=(g0,), lam=lam, global_map=ghat)
    return ghat, ring


def make_sb1(lam: float = 0.5):
    """Biquadratic scaled-boundary example: Ghat(u,v) = (u(2v - v^2), u(1 - v^2))."""
    return _sb_maps([0.0, 2.0, -1.0], q=2, lam=lam)


def make_sb2(lam: float = 0.5):
    """Bicubic scaled-boundary example: Ghat(u,v) = (u(v + v^2 - v^3), u(1 - v^2))."""
    return _sb_maps([0.0, 1.0, 1.0, -1.0], q=3, lam=lam)


# -- export -------------------------------------------------------------------


def mesh_to_json(mesh: MeshLevel) -> str:
    doc = {
        "level": mesh.level,
        "lambda": mesh.ring.lam,
        "cells": [
            {"i": c.i, "n": c.n, "j1": c.j1, "j2": c.j2, "k": c.k} for c in mesh.cells
        ],
        "cap": {"kind": mesh.cap.kind.value, "scale": mesh.cap.scale},
    }
    return json.dumps(doc, indent=2)
