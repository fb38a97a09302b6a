"""Dense bivariate polynomial algebra.

Coefficient layout: ``coeffs[i, j]`` multiplies ``u**i * v**j``.  All values
are immutable after construction and every operation is pure, so concurrent
use needs no locking.

Two coefficient modes share one code path:

* float64 arrays (default), with a relative trim tolerance, and
* ``fractions.Fraction`` object arrays for exact arithmetic.  The exact mode
  exists for auditing polynomial-reproduction questions on maps with
  rational coefficients; dyadic reparameterizations stay exact there.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

TRIM_REL_TOL = 1e-12


def _as_coeff_array(coeffs, exact: bool) -> np.ndarray:
    if exact:
        a = np.empty(np.shape(coeffs), dtype=object)
        flat = np.asarray(coeffs, dtype=object)
        for idx in np.ndindex(a.shape):
            a[idx] = Fraction(flat[idx])
        return a
    return np.array(coeffs, dtype=float)


class Poly2:
    """Bivariate polynomial with bidegree bounds (du, dv)."""

    __slots__ = ("coeffs", "exact")

    def __init__(self, coeffs, exact: bool = False):
        a = _as_coeff_array(coeffs, exact)
        if a.ndim != 2:
            raise ValueError("coeffs must be a 2-d array")
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, *_):
        raise AttributeError("Poly2 is immutable")

    @property
    def du(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dv(self) -> int:
        return self.coeffs.shape[1] - 1

    @staticmethod
    def zero(exact: bool = False) -> "Poly2":
        return Poly2([[0]], exact=exact)

    @staticmethod
    def constant(c, exact: bool = False) -> "Poly2":
        return Poly2([[c]], exact=exact)

    @staticmethod
    def monomial_uv(i: int, j: int, c=1, exact: bool = False) -> "Poly2":
        a = np.zeros((i + 1, j + 1), dtype=object if exact else float)
        a[i, j] = Fraction(c) if exact else float(c)
        return Poly2(a, exact=exact)

    def to_float(self) -> "Poly2":
        if not self.exact:
            return self
        return Poly2(self.coeffs.astype(float), exact=False)

    def trim(self, rel_tol: float = TRIM_REL_TOL) -> "Poly2":
        """Drop trailing all-zero rows/columns (|c| <= rel_tol * max|c|)."""
        a = self.coeffs
        if self.exact:
            mask = np.vectorize(lambda c: c != 0, otypes=[bool])(a)
        else:
            m = np.max(np.abs(a)) if a.size else 0.0
            mask = np.abs(a) > rel_tol * m if m > 0 else np.zeros_like(a, bool)
        if not mask.any():
            return Poly2.zero(exact=self.exact)
        iu = int(np.max(np.nonzero(mask.any(axis=1))[0]))
        iv = int(np.max(np.nonzero(mask.any(axis=0))[0]))
        return Poly2(a[: iu + 1, : iv + 1], exact=self.exact)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other) -> "Poly2":
        return poly_add(self, _coerce(other, self.exact))

    __radd__ = __add__

    def __sub__(self, other) -> "Poly2":
        o = _coerce(other, self.exact)
        return poly_add(self, poly_scale(o, -1))

    def __rsub__(self, other) -> "Poly2":
        return _coerce(other, self.exact) - self

    def __mul__(self, other):
        if isinstance(other, Poly2):
            return poly_mul(self, other)
        return poly_scale(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly2":
        return poly_pow(self, n)

    def __neg__(self) -> "Poly2":
        return poly_scale(self, -1)

    def __call__(self, u, v):
        return poly_eval(self, u, v)

    def __repr__(self):
        return f"Poly2(du={self.du}, dv={self.dv}, exact={self.exact})"


@dataclass(frozen=True)
class MonomialIndex:
    """Exponents of a physical monomial x**alpha * y**beta."""

    alpha: int
    beta: int

    @property
    def total_degree(self) -> int:
        return self.alpha + self.beta


def _coerce(x, exact: bool) -> Poly2:
    if isinstance(x, Poly2):
        return x
    return Poly2.constant(x, exact=exact)


def _both_exact(p: Poly2, q: Poly2) -> bool:
    return p.exact and q.exact


def poly_eval(p: Poly2, u, v):
    """Evaluate by nested Horner in u then v."""
    a = p.coeffs
    if p.exact:
        acc = 0
        for i in range(a.shape[0] - 1, -1, -1):
            row = 0
            for j in range(a.shape[1] - 1, -1, -1):
                row = row * v + a[i, j]
            acc = acc * u + row
        return acc
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    out = np.polynomial.polynomial.polyval2d(u, v, a)
    return float(out) if out.ndim == 0 else out


def poly_add(p: Poly2, q: Poly2) -> Poly2:
    exact = _both_exact(p, q)
    nu = max(p.du, q.du) + 1
    nv = max(p.dv, q.dv) + 1
    a = np.zeros((nu, nv), dtype=object if exact else float)
    if exact:
        a[:, :] = Fraction(0)
    a[: p.du + 1, : p.dv + 1] += p.coeffs if exact else p.coeffs.astype(float)
    a[: q.du + 1, : q.dv + 1] += q.coeffs if exact else q.coeffs.astype(float)
    return Poly2(a, exact=exact)


def poly_scale(p: Poly2, c) -> Poly2:
    if p.exact:
        return Poly2(p.coeffs * Fraction(c), exact=True)
    return Poly2(p.coeffs * float(c), exact=False)


def poly_mul(p: Poly2, q: Poly2) -> Poly2:
    exact = _both_exact(p, q)
    pa = p.coeffs if exact else p.coeffs.astype(float)
    qa = q.coeffs if exact else q.coeffs.astype(float)
    out = np.zeros((p.du + q.du + 1, p.dv + q.dv + 1), dtype=object if exact else float)
    if exact:
        out[:, :] = Fraction(0)
    for i in range(pa.shape[0]):
        for j in range(pa.shape[1]):
            c = pa[i, j]
            if c == 0:
                continue
            out[i : i + qa.shape[0], j : j + qa.shape[1]] += c * qa
    return Poly2(out, exact=exact)


def poly_pow(p: Poly2, n: int) -> Poly2:
    if n < 0:
        raise ValueError("negative power")
    out = Poly2.constant(1, exact=p.exact)
    for _ in range(n):
        out = poly_mul(out, p)
    return out


def compose_with_map(psi, gmap) -> Poly2:
    """Expand psi(G_x(u,v), G_y(u,v)) exactly.

    psi is a MonomialIndex or a Poly2 whose coefficients are read as a
    polynomial in physical coordinates (x, y).  gmap is anything with gx/gy
    Poly2 attributes, or a (gx, gy) pair.
    """
    gx, gy = _map_components(gmap)
    if isinstance(psi, MonomialIndex):
        return poly_mul(poly_pow(gx, psi.alpha), poly_pow(gy, psi.beta))
    exact = psi.exact and gx.exact and gy.exact
    out = Poly2.zero(exact=exact)
    xpow = [Poly2.constant(1, exact=exact)]
    for _ in range(psi.du):
        xpow.append(poly_mul(xpow[-1], gx))
    ypow = [Poly2.constant(1, exact=exact)]
    for _ in range(psi.dv):
        ypow.append(poly_mul(ypow[-1], gy))
    for a in range(psi.du + 1):
        for b in range(psi.dv + 1):
            c = psi.coeffs[a, b]
            if c == 0:
                continue
            out = poly_add(out, poly_scale(poly_mul(xpow[a], ypow[b]), c))
    return out


def _map_components(gmap):
    if isinstance(gmap, tuple):
        return gmap
    return gmap.gx, gmap.gy


def _subst_matrix(deg: int, a, b, exact: bool) -> np.ndarray:
    # substitution u <- a + b*u as a coefficient transform
    S = np.zeros((deg + 1, deg + 1), dtype=object if exact else float)
    if exact:
        S[:, :] = Fraction(0)
    for i in range(deg + 1):
        for m in range(i + 1):
            S[m, i] = comb(i, m) * a ** (i - m) * b**m
    return S


def affine_reparam(p: Poly2, au, bu, av, bv) -> Poly2:
    """Substitute u <- au + bu*u and v <- av + bv*v; bidegree unchanged."""
    exact = p.exact
    if exact:
        au, bu, av, bv = (Fraction(t) for t in (au, bu, av, bv))
    Su = _subst_matrix(p.du, au, bu, exact)
    Sv = _subst_matrix(p.dv, av, bv, exact)
    return Poly2(Su @ p.coeffs @ Sv.T, exact=exact)


def reparam_to_cell(p: Poly2, j1: int, j2: int, k: int) -> Poly2:
    """Restrict to the dyadic cell: u <- (j1+u)/2**k, v <- (j2+v)/2**k."""
    if not (0 <= j1 < 2**k and 0 <= j2 < 2**k):
        raise ValueError(f"cell indices ({j1},{j2}) out of range for k={k}")
    if p.exact:
        h = Fraction(1, 2**k)
        return affine_reparam(p, j1 * h, h, j2 * h, h)
    h = 0.5**k
    return affine_reparam(p, j1 * h, h, j2 * h, h)


def scale_physical(psi: MonomialIndex, mu: float) -> float:
    """Factor with psi(mu*x, mu*y) = factor * psi(x, y)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return mu ** (psi.alpha + psi.beta)


def partial_derivative(p: Poly2, direction: str) -> Poly2:
    """Formal derivative with respect to 'u' or 'v'."""
    a = p.coeffs
    if direction == "u":
        if p.du == 0:
            return Poly2.zero(exact=p.exact)
        rng = np.arange(1, p.du + 1)
        return Poly2(a[1:, :] * rng[:, None], exact=p.exact)
    if direction == "v":
        if p.dv == 0:
            return Poly2.zero(exact=p.exact)
        rng = np.arange(1, p.dv + 1)
        return Poly2(a[:, 1:] * rng[None, :], exact=p.exact)
    raise ValueError("direction must be 'u' or 'v'")
