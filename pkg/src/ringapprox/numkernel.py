"""Small dense numeric kernels: quadrature, SPD/PSD solves, eigenpairs.

Backed by numpy.linalg (LAPACK) behind the module contracts; tolerances are
chosen for the ill-conditioned Gram matrices that mapped polynomial bases
produce on small cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPD_TOL = 1e-13
PSD_TOL = 1e-10


class NotSPD(Exception):
    """Matrix failed the symmetric positive-definite check."""


class NoConvergence(Exception):
    """Eigenvalue iteration did not converge."""


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the unit interval ]0,1[."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        self.nodes.flags.writeable = False
        self.weights.flags.writeable = False


def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule mapped from [-1,1] to [0,1]."""
    if not 1 <= n <= 64:
        raise ValueError(f"quadrature order {n} outside [1, 64]")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(nodes=(x + 1.0) / 2.0, weights=w / 2.0, order=n)


def solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve; raises NotSPD when a pivot is (numerically) not positive."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as e:
        raise NotSPD(str(e)) from e
    dmax = float(np.max(np.diag(A)))
    if np.min(np.diag(L)) ** 2 <= SPD_TOL * dmax:
        raise NotSPD("pivot below spd_tol * max diagonal")
    y = np.linalg.solve(L, b)
    x = np.linalg.solve(L.T, y)
    # one refinement step; Gram matrices here are routinely ill-conditioned
    x += np.linalg.solve(L.T, np.linalg.solve(L, b - A @ x))
    return x


def lstsq_psd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm minimizer of the PSD quadratic form via eigen pseudo-inverse.

    Eigenvalues below PSD_TOL * lambda_max are truncated, so semi-definite
    input is handled without failure.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    wmax = float(np.max(w)) if w.size else 0.0
    if wmax <= 0.0:
        return np.zeros_like(b)
    keep = w > PSD_TOL * wmax
    Vk = V[:, keep]
    return Vk @ ((Vk.T @ b) / w[keep])


def real_eigen_small(A: np.ndarray, imag_tol: float = 1e-9):
    """Real eigenpairs of a small dense (possibly complex) matrix.

    Returns [(eigenvalue, eigenvector), ...] sorted by descending modulus,
    keeping only eigenvalues with negligible imaginary part.  Residuals
    ||A v - lambda v|| <= 1e-10 * ||A|| * ||v|| are enforced.
    """
    A = np.asarray(A)
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(str(e)) from e
    scale = max(np.linalg.norm(A, 2), 1.0)
    out = []
    for i in np.argsort(-np.abs(vals)):
        lam = vals[i]
        if abs(lam.imag) > imag_tol * max(abs(lam), 1.0):
            continue
        v = vecs[:, i]
        if np.linalg.norm(A @ v - lam * v) > 1e-10 * scale * np.linalg.norm(v):
            raise NoConvergence("eigenpair residual above tolerance")
        if np.max(np.abs(v.imag)) <= imag_tol * np.max(np.abs(v)):
            v = v.real
        out.append((float(lam.real), v))
    return out
