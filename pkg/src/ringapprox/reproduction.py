"""Reproduction degree of mapped polynomial spaces.

kappa[omega] is the largest total degree t such that every physical
polynomial of degree <= t pulls back through the element map into the
bidegree-p space.  By linearity it suffices to test monomials; restriction
to sub-cells and uniform scaling leave kappa unchanged, so the ring minimum
is taken over level-0 elements only (with a random sub-cell spot check).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Union

import numpy as np

from .geometry import ElementMap, MeshLevel, RingSpec
from .poly import MonomialIndex, compose_with_map

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ReproductionReport:
    kappa: int
    per_degree: Dict[int, List[MonomialIndex]]  # failing monomials per degree <= kappa+1
    tol_used: float

    def failing(self, t: int) -> List[MonomialIndex]:
        return self.per_degree.get(t, [])


def _in_bidegree_space(comp, p: int, tol: float) -> bool:
    """Membership of a composite in Q^p: tail coefficients below tol * max|c|."""
    a = comp.coeffs
    if comp.exact:
        tail_rows = a[p + 1 :, :]
        tail_cols = a[: p + 1, p + 1 :]
        return all(c == 0 for c in tail_rows.flat) and all(c == 0 for c in tail_cols.flat)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return True
    bound = tol * scale
    if a.shape[0] > p + 1 and np.max(np.abs(a[p + 1 :, :])) > bound:
        return False
    if a.shape[1] > p + 1 and np.max(np.abs(a[: p + 1, p + 1 :])) > bound:
        return False
    return True


def reproduction_degree(G, p: int, tol: float = DEFAULT_TOL) -> ReproductionReport:
    """kappa of the mapped space S[p; omega] for the element map G.

    G may be an ElementMap or a (gx, gy) pair (exact-rational audits pass
    Fraction-coefficient pairs with tol=0).  The search stops at the first
    total degree with a failing monomial; no map reproduces beyond total
    degree p, so the loop is capped there.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    per_degree: Dict[int, List[MonomialIndex]] = {}
    kappa = -1
    for t in range(0, p + 1):
        fails = []
        for alpha in range(t, -1, -1):
            psi = MonomialIndex(alpha, t - alpha)
            comp = compose_with_map(psi, G)
            if not _in_bidegree_space(comp, p, tol):
                fails.append(psi)
        per_degree[t] = fails
        if fails:
            break
        kappa = t
    return ReproductionReport(kappa=kappa, per_degree=per_degree, tol_used=tol)


def min_reproduction_degree(
    ring: Union[RingSpec, MeshLevel], p: int, tol: float = DEFAULT_TOL, subcell_check: bool = True
) -> int:
    """Minimum kappa over the level-0 elements.

    Sub-cells inherit kappa from their level-0 element; a seeded spot check
    on three random sub-cells guards the implementation.
    """
    spec = ring.ring if isinstance(ring, MeshLevel) else ring
    kappas = [reproduction_degree(G, p, tol).kappa for G in spec.elements]
    k0 = min(kappas)
    if subcell_check:
        rng = np.random.default_rng(20240 + p)
        for _ in range(3):
            n = int(rng.integers(len(spec.elements)))
            k = int(rng.integers(1, 3))
            j1 = int(rng.integers(2**k))
            j2 = int(rng.integers(2**k))
            sub = spec.elements[n].restricted_to_cell(j1, j2, k)
            if reproduction_degree(sub, p, tol).kappa != kappas[n]:
                raise AssertionError("sub-cell reproduction degree differs from parent")
    return k0


def maximizing_monomials(kappa0: int) -> List[MonomialIndex]:
    """The kappa0+2 physical monomials of exact total degree kappa0+1."""
    if kappa0 < 0:
        raise ValueError("kappa0 must be >= 0")
    t = kappa0 + 1
    return [MonomialIndex(t - b, b) for b in range(t + 1)]
