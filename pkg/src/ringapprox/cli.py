"""Batch front-end: configure an experiment, run it, emit CSV/JSON.

Subcommands
-----------
convergence   best-approximation errors over mesh levels -> CSV
kappa         reproduction-degree report per element -> text table
char-ring     characteristic-ring dump (lambda, net, patches) -> JSON
tables        best-possible convergence-rate tables -> text

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import geometry
from .approx import TargetFunction, default_quad_order, linf_proxy, mesh_error
from .geometry import CapKind, ElementMap, RingSpec, build_mesh, build_tensor_mesh
from .numkernel import NoConvergence, NotSPD, gauss_legendre
from .poly import Poly2
from .rates import observed_rates, summary_tables
from .reproduction import min_reproduction_degree, reproduction_degree
from .subdivision import (
    DegenerateEigenspace,
    Scheme,
    SchemeId,
    UnsupportedValence,
    characteristic_ring,
)


class ConfigError(Exception):
    """Invalid experiment configuration; message names the offending field."""


NUMERICAL_ERRORS = (NotSPD, NoConvergence, DegenerateEigenspace, geometry.SingularJacobian)


@dataclass
class ExperimentConfig:
    domain: str = "sb1"
    p: List[int] = field(default_factory=lambda: [2])
    levels: int = 3
    target: str = "x^2"
    norm: str = "l2"
    cap: str = "auto"
    sector_only: bool = False
    tensor: bool = False
    quad_order: Optional[int] = None
    threads: int = 0  # 0 -> all cores
    output: Optional[str] = None

    def validate(self):
        if not re.fullmatch(r"sb1|sb2|ds:\d+|cc:\d+|custom:.+", self.domain):
            raise ConfigError(f"domain: unrecognized value {self.domain!r}")
        if not self.p or any(q < 0 for q in self.p):
            raise ConfigError("p: need a non-empty list of non-negative degrees")
        if self.levels < 0:
            raise ConfigError("levels: must be >= 0")
        if self.norm not in ("l2", "h1", "h2", "linf"):
            raise ConfigError(f"norm: unknown norm {self.norm!r}")
        if self.cap not in ("auto", "coons", "scaled", "excluded"):
            raise ConfigError(f"cap: unknown cap kind {self.cap!r}")
        if self.quad_order is not None and not 1 <= self.quad_order <= 64:
            raise ConfigError("quad_order: must lie in [1, 64]")
        if self.threads < 0:
            raise ConfigError("threads: must be >= 0")
        if self.tensor and not self.domain.startswith("sb"):
            raise ConfigError("tensor: tensor-grid mode applies to sb domains only")


# -- target parsing ---------------------------------------------------------------

_NAMED_TARGETS = {
    "cos-sin": TargetFunction.cos_sin,
    "sin-cos": TargetFunction.sin_cos,
    "x^2+y^2": TargetFunction.sum_squares,
}

_TERM_RE = re.compile(
    r"^\s*([+-]?\s*\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*(x(?:\^(\d+))?)?\s*\*?\s*(y(?:\^(\d+))?)?\s*$"
)


def parse_target(text: str) -> TargetFunction:
    """Polynomial expressions like 'x^2', '2*x*y - y^3', or a named target."""
    text = text.strip()
    if text in _NAMED_TARGETS:
        return _NAMED_TARGETS[text]()
    terms = re.findall(r"[+-]?[^+-]+", text.replace(" ", ""))
    if not terms:
        raise ConfigError(f"target: cannot parse {text!r}")
    entries = {}
    for term in terms:
        m = _TERM_RE.match(term)
        if not m:
            raise ConfigError(f"target: cannot parse term {term!r}")
        cs, xs, xe, ys, ye = m.groups()
        cs = (cs or "").replace(" ", "")
        if cs in ("", "+", "-"):
            coeff = 1.0 if cs != "-" else -1.0
        else:
            coeff = float(cs)
        a = int(xe) if xe else (1 if xs else 0)
        b = int(ye) if ye else (1 if ys else 0)
        if not xs and not ys and cs in ("", "+", "-"):
            raise ConfigError(f"target: cannot parse term {term!r}")
        entries[(a, b)] = entries.get((a, b), 0.0) + coeff
    du = max(a for a, _ in entries)
    dv = max(b for _, b in entries)
    c = np.zeros((du + 1, dv + 1))
    for (a, b), val in entries.items():
        c[a, b] = val
    return TargetFunction.from_poly_xy(Poly2(c), kind=text)


# -- domain construction ------------------------------------------------------------

_CUSTOM_SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "schemas", "custom_domain.schema.json")


def _load_custom_domain(path: str):
    import jsonschema

    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"domain: cannot read custom file: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"domain: invalid JSON in custom file: {e}")
    with open(_CUSTOM_SCHEMA_PATH) as fh:
        schema = json.load(fh)
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        path_str = "/".join(str(x) for x in e.absolute_path) or "(root)"
        raise ConfigError(f"domain: custom file field {path_str}: {e.message}")
    elements = tuple(
        ElementMap(Poly2(el["gx"]), Poly2(el["gy"]), q=el["q"]) for el in doc["elements"]
    )
    gmap = None
    if "global_map" in doc:
        g = doc["global_map"]
        gmap = ElementMap(Poly2(g["gx"]), Poly2(g["gy"]), q=g["q"], allow_singular=True)
    sector = tuple(doc["sector"]) if "sector" in doc else None
    ring = RingSpec(elements=elements, lam=doc["lambda"], sector=sector, global_map=gmap)
    return gmap, ring


def resolve_domain(cfg: ExperimentConfig):
    """Returns (global_map_or_None, RingSpec, default CapKind)."""
    d = cfg.domain
    if d == "sb1":
        gmap, ring = geometry.make_sb1()
        return gmap, ring, CapKind.SCALED_SINGULAR
    if d == "sb2":
        gmap, ring = geometry.make_sb2()
        return gmap, ring, CapKind.SCALED_SINGULAR
    if d.startswith(("ds:", "cc:")):
        scheme = Scheme.DOO_SABIN if d.startswith("ds:") else Scheme.CATMULL_CLARK
        try:
            valence = int(d.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"domain: bad valence in {d!r}")
        try:
            ring = characteristic_ring(SchemeId(scheme, valence)).ring_spec()
        except UnsupportedValence as e:
            raise ConfigError(f"domain: {e}")
        return None, ring, CapKind.COONS_PATCH
    if d.startswith("custom:"):
        gmap, ring = _load_custom_domain(d.split(":", 1)[1])
        kind = CapKind.SCALED_SINGULAR if gmap is not None else CapKind.EXCLUDED
        return gmap, ring, kind
    raise ConfigError(f"domain: unrecognized value {d!r}")


def _cap_kind(cfg: ExperimentConfig, default: CapKind) -> CapKind:
    return {
        "auto": default,
        "coons": CapKind.COONS_PATCH,
        "scaled": CapKind.SCALED_SINGULAR,
        "excluded": CapKind.EXCLUDED,
    }[cfg.cap]


# -- subcommands ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def cmd_convergence(cfg: ExperimentConfig) -> str:
    cfg.validate()
    gmap, ring, cap_default = resolve_domain(cfg)
    phi = parse_target(cfg.target)
    cap_kind = _cap_kind(cfg, cap_default)
    threads = cfg.threads or (os.cpu_count() or 1)
    r = {"l2": 0, "h1": 1, "h2": 2, "linf": 0}[cfg.norm]
    lines = ["p,level,ring_index,error,log2_error,rate"]
    for p in cfg.p:
        quad = gauss_legendre(cfg.quad_order) if cfg.quad_order else None
        totals = []
        for level in range(cfg.levels + 1):
            if cfg.tensor:
                mesh = build_tensor_mesh(gmap, level)
            else:
                mesh = build_mesh(ring, level, cap_kind)
            rep = mesh_error(
                phi, mesh, p, r=r, quad=quad, sector_only=cfg.sector_only, threads=threads
            )
            rows = rep.to_csv_rows()
            if cfg.norm == "linf":
                overall, _, _ = linf_proxy(phi, mesh, p, quad=quad, sector_only=cfg.sector_only)
                rows.append((level, "linf", overall))
            err_total = rep.total
            totals.append(err_total)
            rate = ""
            if level > 0 and totals[-2] > 0 and err_total > 0:
                rate = _fmt(np.log2(totals[-2] / err_total))
            for lev, tag, err in rows:
                l2e = np.log2(err) if err > 0 else float("-inf")
                rrate = rate if tag == "total" else ""
                lines.append(f"{p},{lev},{tag},{_fmt(err)},{_fmt(l2e)},{rrate}")
    return "\n".join(lines) + "\n"


def cmd_kappa(cfg: ExperimentConfig) -> str:
    cfg.validate()
    _, ring, _ = resolve_domain(cfg)
    out = []
    for p in cfg.p:
        out.append(f"reproduction degrees for p={p}")
        kappas = []
        for n, el in enumerate(ring.elements):
            rep = reproduction_degree(el, p)
            kappas.append(rep.kappa)
            out.append(f"  element {n}: kappa = {rep.kappa}")
            for t in sorted(rep.per_degree):
                fails = {(m.alpha, m.beta) for m in rep.per_degree[t]}
                cells = [
                    f"x^{a}*y^{t - a}:{'FAIL' if (a, t - a) in fails else 'pass'}"
                    for a in range(t, -1, -1)
                ]
                out.append(f"    degree {t}: " + "  ".join(cells))
        k0 = min_reproduction_degree(ring, p)
        assert k0 == min(kappas)
        out.append(f"  ring minimum kappa_0 = {k0}")
    return "\n".join(out) + "\n"


def cmd_char_ring(scheme: str, valence: int, samples: int = 17) -> str:
    sid = SchemeId(Scheme.DOO_SABIN if scheme == "ds" else Scheme.CATMULL_CLARK, valence)
    ring = characteristic_ring(sid)
    t = np.linspace(0.0, 1.0, samples)
    patches = []
    for s, sec in enumerate(ring.sector_maps):
        for name, m in zip(("P10", "P11", "P01"), sec):
            X, Y = m(*np.meshgrid(t, t, indexing="ij"))
            patches.append(
                {
                    "sector": s,
                    "patch": name,
                    "gx": m.gx.coeffs.tolist(),
                    "gy": m.gy.coeffs.tolist(),
                    "samples_x": X.tolist(),
                    "samples_y": Y.tolist(),
                }
            )
    doc = {
        "scheme": sid.scheme.value,
        "valence": valence,
        "lambda": ring.lam,
        "control_net": [
            {"sector": s, "a": a, "b": b, "x": z.real, "y": z.imag}
            for (s, a, b), z in sorted(ring.net.items())
        ],
        "patches": patches,
    }
    return json.dumps(doc, indent=2)


def cmd_tables() -> str:
    return summary_tables()


# -- argument plumbing -----------------------------------------------------------------


def _add_experiment_args(sp):
    sp.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override")
    sp.add_argument("--domain")
    sp.add_argument("--p", help="comma-separated degrees, e.g. 2,3,4")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--target")
    sp.add_argument("--norm", choices=["l2", "h1", "h2", "linf"])
    sp.add_argument("--cap", choices=["auto", "coons", "scaled", "excluded"])
    sp.add_argument("--sector-only", action="store_true", default=None)
    sp.add_argument("--tensor", action="store_true", default=None)
    sp.add_argument("--quad-order", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("-o", "--output")


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"config: cannot load {args.config!r}: {e}")
        for key, val in doc.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"config: unknown field {key!r}")
            setattr(cfg, key, val)
    overrides = {
        "domain": args.domain,
        "levels": args.levels,
        "target": args.target,
        "norm": args.norm,
        "cap": args.cap,
        "sector_only": args.sector_only,
        "tensor": args.tensor,
        "quad_order": args.quad_order,
        "threads": args.threads,
        "output": args.output,
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    if args.p is not None:
        try:
            cfg.p = [int(x) for x in str(args.p).split(",") if x != ""]
        except ValueError:
            raise ConfigError(f"p: cannot parse degree list {args.p!r}")
    if isinstance(cfg.p, int):
        cfg.p = [cfg.p]
    return cfg


def _emit(text: str, output: Optional[str]):
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ringapprox", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("convergence", help="error sweep over mesh levels (CSV)")
    _add_experiment_args(sp)

    sk = sub.add_parser("kappa", help="reproduction-degree report")
    _add_experiment_args(sk)

    sc = sub.add_parser("char-ring", help="characteristic ring dump (JSON)")
    sc.add_argument("ring", help="scheme:valence, e.g. cc:5 or ds:3")
    sc.add_argument("-o", "--output")

    st = sub.add_parser("tables", help="best-possible convergence-rate tables")
    st.add_argument("-o", "--output")

    args = ap.parse_args(argv)
    try:
        if args.command == "convergence":
            cfg = _config_from_args(args)
            _emit(cmd_convergence(cfg), cfg.output)
        elif args.command == "kappa":
            cfg = _config_from_args(args)
            _emit(cmd_kappa(cfg), cfg.output)
        elif args.command == "char-ring":
            m = re.fullmatch(r"(ds|cc):(\d+)", args.ring)
            if not m:
                raise ConfigError(f"ring: expected ds:<valence> or cc:<valence>, got {args.ring!r}")
            _emit(cmd_char_ring(m.group(1), int(m.group(2))) + "\n", args.output)
        elif args.command == "tables":
            _emit(cmd_tables(), args.output)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
