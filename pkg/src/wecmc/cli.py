"""Command-line driver: verify | surface | invariants | ode | tables.

Exit codes: 0 success, 1 usage or I/O error, 2 measured failure (errata
candidate, leakage, failed gate). Reports are deterministic JSON on stdout
and, with --out, in files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import FAMILIES, SWEEP, build_family, parse_params, variant_scan
from .complexcore import DEFAULT_H, DomainGrid
from .errors import (BadParams, EmptyDomain, LeakageExceeded, ParameterConstraintViolated,
                     PoleApproached, StencilOnSingularity, TailTooLarge, UnknownFamily, WecmcError)
from .geometry import charge_auto, curvature, immerse_patch
from .painleve import (PainleveParams, default_entry, integrate_p, scan_row,
                       tables_json, tables_report)
from .verification import (FIRST_ORDER_TOL, NESTED_TOL, VerificationReport, current, outer_step,
                           verify_field, we_residual)


EXIT_OK, EXIT_USAGE, EXIT_MEASURED = 0, 1, 2

# flags whose values may start with "-" (negative numbers)
_VALUE_FLAGS = {"--domain", "--params", "--base", "--eps", "--A", "--K", "--p0", "--dp0",
                "--s0", "--s-end", "--step", "--fd-step", "--tol", "--nx", "--ny"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    command: str
    family: str | None = None
    params: dict = field(default_factory=dict)
    domain: DomainGrid | None = None
    fd_step: float = DEFAULT_H
    tol: float = FIRST_ORDER_TOL
    base: complex = 0j
    out: Path | None = None
    force: bool = False


def _complex(text: str) -> complex:
    parts = [t for t in text.split(",")]
    try:
        vals = [float(t) for t in parts]
    except ValueError:
        raise BadParams(f"not a number: {text!r}") from None
    if len(vals) == 1:
        vals.append(0.0)
    if len(vals) != 2 or not all(np.isfinite(vals)):
        raise BadParams(f"complex values are 're,im': {text!r}")
    return complex(vals[0], vals[1])


def parse_domain(text: str | None, nx: int, ny: int) -> DomainGrid:
    """Grid from "xmin,xmax,ymin,ymax" or "annulus rmin,rmax" (centred square, ring mask)."""
    if nx < 2 or ny < 2:
        raise EmptyDomain("nx and ny must be at least 2")
    if text is None:
        return DomainGrid.rect(-3, 3, -3, 3, nx, ny)
    words = text.split()
    try:
        if words[0] == "annulus":
            if len(words) != 2:
                raise ValueError
            rmin, rmax = (float(v) for v in words[1].split(","))
            if not (np.isfinite(rmin) and np.isfinite(rmax)):
                raise ValueError
            return DomainGrid.annulus(rmin, rmax, nx, ny)
        vals = [float(v) for v in text.split(",")]
        if len(vals) != 4 or not all(np.isfinite(vals)):
            raise ValueError
    except ValueError:
        raise BadParams(f"bad domain {text!r}; use xmin,xmax,ymin,ymax or 'annulus rmin,rmax'") from None
    return DomainGrid.rect(*vals, nx, ny)


def _preprocess(argv: list[str]) -> list[str]:
    """Glue flag values that argparse would mistake for options (negative numbers, "annulus a,b")."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            val = argv[i + 1]
            i += 2
            if tok == "--domain" and val in ("annulus",) and i < len(argv):
                val = f"{val} {argv[i]}"
                i += 1
            out.append(f"{tok}={val}")
            continue
        out.append(tok)
        i += 1
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return None
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _clean_params(params: dict) -> dict:
    return json.loads(json.dumps(params, default=_jsonable))


def _emit(text: str, out: Path | None, name: str) -> None:
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _family_report(family: str, params: dict, grid: DomainGrid, h: float, tol: float, constraint):
    f = build_family(family, params, grid)
    rep = verify_field(f, grid, h, tol, NESTED_TOL, constraint)
    scan = []
    if not rep.passed() or f.errata_candidate:
        scan = variant_scan(family, params, grid, lambda g: we_residual(g, grid, h).max_abs)
        for r in scan:
            r["pass"] = r["residual"] is not None and r["residual"] < tol
    return rep, f, scan


def cmd_verify(cfg: RunConfig, all_families: bool = False, constraint=None) -> int:
    if all_families:
        combined = VerificationReport({})
        scans = {}
        for fam in sorted(FAMILIES):
            try:
                rep, _, scan = _family_report(fam, parse_params(SWEEP[fam]), cfg.domain, cfg.fd_step,
                                              cfg.tol, None)
            except (WecmcError, FloatingPointError) as e:
                combined = combined.with_errata(f"{fam}: not evaluated ({type(e).__name__}: {e})")
                continue
            for name, (s, t) in rep.results.items():
                combined = combined.add(f"{fam}/{name}", s, t)
            combined = combined.with_errata(*rep.errata)
            if scan:
                scans[fam] = scan
        body = combined.to_dict()
        body["families"] = {fam: SWEEP[fam] for fam in sorted(FAMILIES)}
        body["variant_scan"] = scans
        _emit(_dump(body), cfg.out, "errata_report.json")
        return EXIT_OK if combined.passed() and not combined.errata else EXIT_MEASURED
    rep, f, scan = _family_report(cfg.family, cfg.params, cfg.domain, cfg.fd_step, cfg.tol, constraint)
    body = rep.to_dict()
    body["variant_scan"] = scan
    body.update({"family": cfg.family, "params": _clean_params(f.params), "variant": f.variant,
                 "errata_candidate": bool(f.errata_candidate)})
    _emit(_dump(body), cfg.out, f"verify_{cfg.family}.json")
    return EXIT_OK if rep.passed() else EXIT_MEASURED


def cmd_surface(cfg: RunConfig) -> int:
    f = build_family(cfg.family, cfg.params, cfg.domain)
    if bool(f.singular(np.asarray(cfg.base), 10 * cfg.fd_step)) or not np.all(np.isfinite(f.p(cfg.base))):
        raise StencilOnSingularity(f"base point {cfg.base} is singular for {cfg.family}")
    gate = we_residual(f, cfg.domain, cfg.fd_step)
    gate_ok = gate.max_abs < cfg.tol
    body = {"family": cfg.family, "params": _clean_params(f.params), "variant": f.variant,
            "we_gate": gate.as_record(cfg.tol)}
    if not gate_ok and not cfg.force:
        body["written"] = []
        body["reason"] = "family fails the first-order gate; rerun with --force to write anyway"
        sys.stdout.write(_dump(body))
        return EXIT_MEASURED
    try:
        patch = immerse_patch(f, cfg.base, cfg.domain, cfg.fd_step, enforce=not cfg.force)
    except LeakageExceeded as e:
        body["written"] = []
        body["leakage"] = e.leakage
        body["reason"] = str(e)
        sys.stdout.write(_dump(body))
        return EXIT_MEASURED
    out = cfg.out or Path(".")
    files = patch.write(out, f"surface_{cfg.family}", cfg.family, _clean_params(f.params))
    body.update(patch.summary(cfg.family, _clean_params(f.params)))
    body["vertices"] = int(patch.active.sum())
    body["written"] = [p.name for p in files]
    sys.stdout.write(_dump(body))
    return EXIT_OK if gate_ok else EXIT_MEASURED


def cmd_invariants(cfg: RunConfig, charge_tol: float = 5e-3, rmax: float = 40.0) -> int:
    grid = cfg.domain
    f = build_family(cfg.family, cfg.params, grid)
    step = outer_step(cfg.fd_step)
    g = grid.masked_for(f.predicate(10 * step, cuts=False))
    Z = g.Z[g.active]
    if Z.size == 0:
        raise EmptyDomain("no unmasked nodes")
    K = curvature(f, Z, step)
    K = K[np.isfinite(K)]
    body = {"family": cfg.family, "params": _clean_params(f.params), "variant": f.variant,
            "K_mean": float(np.mean(K)), "K_std": float(np.std(K)),
            "K_min": float(np.min(K)), "K_max": float(np.max(K)), "K_nodes": int(K.size)}
    code = EXIT_OK
    try:
        ch = charge_auto(f, tol=charge_tol, rmax=rmax, h=cfg.fd_step)
        body["charge"] = {"value": ch.value, "radius": ch.radius, "tail": ch.tail,
                          "imag_leakage": ch.imag_leakage, "nodes": ch.nodes,
                          "rounding_distance": ch.rounding_distance}
    except TailTooLarge as e:
        body["charge"] = {"value": None, "reason": str(e)}
        code = EXIT_MEASURED
    idx = np.linspace(0, Z.size - 1, 5).astype(int)
    samples = []
    for z in Z[idx]:
        try:
            jv = current(f, z, cfg.fd_step, continuation=True)
            samples.append({"z": [z.real, z.imag], "j": [jv.real, jv.imag]})
        except StencilOnSingularity:
            continue
    body["current_samples"] = samples
    _emit(_dump(body), cfg.out, f"invariants_{cfg.family}.json")
    return code


def cmd_ode(args, out: Path | None) -> int:
    if args.p0 == 0:
        raise BadParams("p0 must be nonzero")
    if args.dp0 == "consistent":
        params = PainleveParams.consistent(args.eps, args.A, args.K, args.p0, args.s0)
    else:
        try:
            dp0 = float(args.dp0)
        except ValueError:
            raise BadParams("--dp0 takes a number or 'consistent'") from None
        params = PainleveParams(args.eps, args.A, args.K, args.p0, dp0, args.s0)
    try:
        prof = integrate_p(params, args.s_end, args.step)
    except PoleApproached as e:
        prof = e.profile
    half = None
    if args.convergence:
        try:
            half = integrate_p(params, args.s_end, args.step / 2).max_drift
        except PoleApproached as e:
            half = e.profile.max_drift
    body = prof.summary()
    if half is not None:
        body["max_H_drift_half_step"] = half
        body["drift_ratio"] = prof.max_drift / half if half > 0 else None
    dest = out or Path(".")
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "profile.csv").write_text(prof.csv_text())
    _emit(_dump(body), out, "ode.json")
    return EXIT_OK


def cmd_tables(args, out: Path | None) -> int:
    if args.all or args.table is None:
        rep = tables_report()
    else:
        if args.row is None:
            raise BadParams("--row is required with --table")
        kw = {}
        if args.K is not None:
            kw["K"] = args.K
        if args.A is not None:
            kw["A"] = args.A
        e = default_entry(args.table, args.row, **kw)
        v = scan_row(e)
        rep = {e.key: v.to_record(), "errata": [] if v.passed else [v.note()]}
    _emit(tables_json(rep), out, "tables.json")
    return EXIT_MEASURED if rep["errata"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wecmc", description="Spinor-field families, residual checks and immersed surfaces.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, family_required=True):
        p.add_argument("--family", required=family_required)
        p.add_argument("--params", default="")
        p.add_argument("--domain", default=None)
        p.add_argument("--nx", type=int, default=40)
        p.add_argument("--ny", type=int, default=40)
        p.add_argument("--fd-step", type=float, default=DEFAULT_H)
        p.add_argument("--tol", type=float, default=FIRST_ORDER_TOL)
        p.add_argument("--base", default="0.5,0")
        p.add_argument("--out", default=None)

    v = sub.add_parser("verify")
    common(v, family_required=False)
    v.add_argument("--all-families", action="store_true")
    v.add_argument("--constraint", choices=["+1", "-1", "both"], default=None)
    s = sub.add_parser("surface")
    common(s)
    s.add_argument("--force", action="store_true")
    i = sub.add_parser("invariants")
    common(i)
    i.add_argument("--charge-tol", type=float, default=5e-3)
    i.add_argument("--rmax", type=float, default=40.0)

    o = sub.add_parser("ode")
    o.add_argument("--eps", type=int, choices=[-1, 1], default=-1)
    o.add_argument("--A", type=float, default=0.2)
    o.add_argument("--K", type=float, default=1.0)
    o.add_argument("--p0", type=float, default=0.7)
    o.add_argument("--dp0", default="consistent")
    o.add_argument("--s0", type=float, default=0.0)
    o.add_argument("--s-end", type=float, default=5.0)
    o.add_argument("--step", type=float, default=1e-3)
    o.add_argument("--convergence", action="store_true")
    o.add_argument("--out", default=None)

    t = sub.add_parser("tables")
    t.add_argument("--all", action="store_true")
    t.add_argument("--table", type=int, choices=[1, 2])
    t.add_argument("--row", type=int, choices=range(1, 7))
    t.add_argument("--K", type=float, default=None)
    t.add_argument("--A", type=float, default=None)
    t.add_argument("--out", default=None)
    return ap


def _config(args) -> RunConfig:
    for name in ("fd_step", "tol"):
        val = getattr(args, name)
        if not (np.isfinite(val) and val > 0):
            raise BadParams(f"--{name.replace('_', '-')} must be positive and finite")
    grid = parse_domain(args.domain, args.nx, args.ny)
    return RunConfig(args.command, args.family, parse_params(args.params), grid, args.fd_step, args.tol,
                     _complex(args.base), Path(args.out) if args.out else None,
                     bool(getattr(args, "force", False)))


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_preprocess(argv))
        out = Path(args.out) if getattr(args, "out", None) else None
        if args.command == "ode":
            for name in ("A", "K", "p0", "s0", "s_end", "step"):
                if not np.isfinite(getattr(args, name)):
                    raise BadParams(f"--{name} must be finite")
            if not args.step > 0:
                raise BadParams("--step must be positive")
            return cmd_ode(args, out)
        if args.command == "tables":
            return cmd_tables(args, out)
        cfg = _config(args)
        if args.command == "verify":
            if not args.all_families and not cfg.family:
                raise BadParams("--family or --all-families is required")
            eps = {"+1": 1, "-1": -1, "both": "both", None: None}[args.constraint]
            return cmd_verify(cfg, args.all_families, eps)
        if args.command == "surface":
            return cmd_surface(cfg)
        return cmd_invariants(cfg, args.charge_tol, args.rmax)
    except (UsageError, UnknownFamily, BadParams, EmptyDomain, StencilOnSingularity,
            ParameterConstraintViolated, ValueError, OSError) as e:
        sys.stderr.write(f"wecmc: error: {e}\n")
        return EXIT_USAGE
    except WecmcError as e:
        # a measured failure raised from inside a computation
        sys.stderr.write(f"wecmc: {type(e).__name__}: {e}\n")
        sys.stdout.write(_dump({"error": type(e).__name__, "message": str(e)}))
        return EXIT_MEASURED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
