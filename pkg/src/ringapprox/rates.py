"""Observed convergence rates and theoretical best-possible rate bounds.

The bound compares A = lambda**(kappa0+2-r) (self-similar ring scaling)
against B = 2**-(p+1-r) (dyadic refinement); whichever is larger dictates
the achievable rate, with an extra sqrt(level+1) factor when they tie.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class RateReport:
    per_step: List[Optional[float]]  # log(e_{l-1}/e_l)/log(base); None when undefined
    asymptotic: Optional[float]  # least-squares slope over the last 3 points
    base: float


def observed_rates(
    errors: Sequence[float], base: float = 2.0, remove_sqrt_factor: bool = False
) -> RateReport:
    """Per-step rates and a tail fit for a level-indexed error sequence.

    With remove_sqrt_factor the sequence is divided by sqrt(level+1) first
    (the tie-case correction), so the fit recovers the pure power.
    """
    if len(errors) < 2:
        raise ValueError("need at least two errors")
    if base <= 0 or base == 1:
        raise ValueError("rate base must be positive and != 1")
    e = [float(x) for x in errors]
    if remove_sqrt_factor:
        e = [x / np.sqrt(lev + 1.0) for lev, x in enumerate(e)]
    lb = np.log(base)
    steps: List[Optional[float]] = []
    for a, b in zip(e[:-1], e[1:]):
        steps.append(float(np.log(a / b) / lb) if a > 0 and b > 0 else None)
    tail = [(lev, x) for lev, x in enumerate(e) if x > 0][-3:]
    fit = None
    if len(tail) >= 2:
        xs = np.array([lv for lv, _ in tail], dtype=float)
        ys = np.array([np.log(x) / lb for _, x in tail])
        fit = float(-np.polyfit(xs, ys, 1)[0])
    return RateReport(per_step=steps, asymptotic=fit, base=base)


@dataclass(frozen=True)
class BoundPrediction:
    A: float
    B: float
    case: str  # 'a' (A > B), 'b' (tie), 'c' (B > A)
    rate_descriptor: str
    linf_rate: float
    p: int
    kappa0: int
    lam: float
    r: int

    @property
    def per_level_factor(self) -> float:
        return max(self.A, self.B)


def predict_bounds(p: int, kappa0: int, lam: float, r: int) -> BoundPrediction:
    """Best-possible per-level error factors from the lower-bound theory."""
    if not 0 <= r <= kappa0 + 1:
        raise ValueError(f"seminorm order r={r} outside [0, kappa0+1]")
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in ]0,1[")
    A = lam ** (kappa0 + 2 - r)
    B = 2.0 ** -(p + 1 - r)
    if abs(A - B) <= 1e-12 * max(A, B):
        case = "b"
        desc = f"sqrt(level+1) * {A:.6g}^level"
    elif A > B:
        case = "a"
        desc = f"{A:.6g}^level"
    else:
        case = "c"
        desc = f"{B:.6g}^level"
    linf_rate = max(lam ** (kappa0 + 1), 2.0 ** -(p + 1))
    return BoundPrediction(
        A=A, B=B, case=case, rate_descriptor=desc, linf_rate=linf_rate,
        p=p, kappa0=kappa0, lam=lam, r=r,
    )


# -- summary tables ----------------------------------------------------------------


def _h_exponent(factor: float, lam: float) -> float:
    # express a per-level factor as a power of the mesh size h ~ max(lam, 1/2)^level
    base = max(lam, 0.5)
    return float(np.log(factor) / np.log(base))


def _rate_entry(factor: float, lam: float, tie: bool) -> str:
    hexp = _h_exponent(factor, lam)
    log2f = float(np.log2(factor))
    core = f"h^{hexp:.5f} ~ 2^{log2f:.5f}"
    return f"sqrt(1-log2(h)) * {core}" if tie else core


def summary_table_rows(lambdas_cc=None):
    """Structured rows behind the fixed-format rate tables.

    Doo-Sabin uses p = 2 with lambda = 1/2 for every valence; Catmull-Clark
    uses p = 3 with the per-valence subdominant eigenvalue (computed by the
    subdivision module unless supplied).
    """
    from .subdivision import Scheme, SchemeId, subdominant_lambda

    if lambdas_cc is None:
        lambdas_cc = {
            v: subdominant_lambda(SchemeId(Scheme.CATMULL_CLARK, v)) for v in (3, 4, 5, 6)
        }
    rows = []
    # Doo-Sabin, p = 2
    for label, kappa0 in (("4", 2), ("!=4", 1)):
        lam = 0.5
        ent = {}
        for col, r in (("L2", 0), ("H1", 1)):
            b = predict_bounds(2, kappa0, lam, r)
            ent[col] = _rate_entry(b.per_level_factor, lam, b.case == "b")
        binf = predict_bounds(2, kappa0, lam, 0)
        ent["Linf"] = _rate_entry(binf.linf_rate, lam, False)
        rows.append(("DS", label, ent["Linf"], ent["L2"], ent["H1"]))
    # Catmull-Clark, p = 3
    for v in (3, 4, 5, 6):
        lam = lambdas_cc[v]
        kappa0 = 3 if v == 4 else 1
        ent = {}
        for col, r in (("L2", 0), ("H1", 1)):
            b = predict_bounds(3, kappa0, lam, r)
            ent[col] = _rate_entry(b.per_level_factor, lam, b.case == "b")
        binf = predict_bounds(3, kappa0, lam, 0)
        ent["Linf"] = _rate_entry(binf.linf_rate, lam, False)
        rows.append(("CC", str(v), ent["Linf"], ent["L2"], ent["H1"]))
    return rows


def summary_tables() -> str:
    """Fixed-format text of the best-possible convergence-rate tables.

    Column meaning: per-level error reduction factor written both as a power
    of the mesh size h and as a power of two; a sqrt(1-log2(h)) prefix marks
    the tie case.  The output is byte-stable for fixed lambda values.
    """
    rows = summary_table_rows()
    header = f"{'scheme':8}{'valence':9}{'Linf-rate':44}{'L2-rate':44}{'H1-rate':44}".rstrip()
    lines = ["Best possible convergence rates", header, "-" * 149]
    for scheme, val, linf, l2, h1 in rows:
        lines.append(f"{scheme:8}{val:9}{linf:44}{l2:44}{h1:44}".rstrip())
    return "\n".join(lines) + "\n"


def summary_tables_csv() -> str:
    rows = summary_table_rows()
    lines = ["scheme,valence,linf_rate,l2_rate,h1_rate"]
    for scheme, val, linf, l2, h1 in rows:
        lines.append(f"{scheme},{val},{linf},{l2},{h1}")
    return "\n".join(lines) + "\n"
