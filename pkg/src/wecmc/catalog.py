"""String-addressable family catalog: id + key=value record -> FieldSampler."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .complexcore import DomainGrid
from .errors import BadParams, UnknownFamily, WecmcError
from .families import (FieldSampler, from_potential, make_bump, make_exponential,
                       make_exponential_linear, make_multi_soliton, make_one_soliton,
                       make_plane_wave, make_rational, make_superposition, potential_one_soliton,
                       potential_rational)
from .linearized import constant_profile, integrate_linearized
from .painleve import TableEntry, profile_map

Params = dict


def parse_params(text: str | None) -> Params:
    """Parse "k=v,k=v" records.

    A bare number right after a value is that value's imaginary part
    ("a=1,0" is a = 1+0i); "x:y:z" is a list; non-numeric values stay strings.
    """
    out: Params = {}
    if not text:
        return out
    last = None
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            raise BadParams(f"empty field in parameter record {text!r}")
        if "=" in tok:
            key, val = (s.strip() for s in tok.split("=", 1))
            if not key:
                raise BadParams(f"missing key in {tok!r}")
            if key in out:
                raise BadParams(f"duplicate parameter {key!r}")
            out[key] = _value(val)
            last = key
            continue
        if last is None or not isinstance(out[last], (int, float)) or isinstance(out[last], bool):
            raise BadParams(f"stray token {tok!r} in parameter record")
        try:
            im = float(tok)
        except ValueError:
            raise BadParams(f"imaginary part {tok!r} is not a number") from None
        out[last] = complex(out[last], im)
        last = None
    return out


def _value(v: str):
    if ":" in v:
        return [_value(x) for x in v.split(":")]
    try:
        x = float(v)
    except ValueError:
        return v
    if not np.isfinite(x):
        raise BadParams(f"non-finite value {v!r}")
    return int(x) if x.is_integer() and "." not in v and "e" not in v.lower() else x


def _take(params: Params, spec: dict) -> dict:
    unknown = set(params) - set(spec)
    if unknown:
        raise BadParams(f"unknown parameters: {', '.join(sorted(unknown))}")
    out = {}
    for key, (kind, default) in spec.items():
        v = params.get(key, default)
        if v is _REQUIRED:
            raise BadParams(f"missing parameter {key!r}")
        try:
            out[key] = _coerce(v, kind)
        except (TypeError, ValueError):
            raise BadParams(f"parameter {key!r} = {v!r} is not a valid {kind}") from None
    return out


_REQUIRED = object()


def _coerce(v, kind):
    if v is None:
        return None
    if kind == "int":
        if isinstance(v, complex) or float(v) != int(v):
            raise ValueError
        return int(v)
    if kind == "real":
        if isinstance(v, complex):
            if v.imag != 0:
                raise ValueError
            v = v.real
        if isinstance(v, str):
            raise ValueError
        return float(v)
    if kind == "complex":
        if isinstance(v, str):
            raise ValueError
        return complex(v)
    if kind == "reals":
        vals = v if isinstance(v, list) else [v]
        return [_coerce(x, "real") for x in vals]
    if kind == "str":
        return str(v)
    raise ValueError


def _rational(p, grid):
    q = _take(p, {"m": ("int", 1), "n": ("int", 0), "k": ("int", 0), "variant": ("str", "printed")})
    return make_rational(q["m"], q["n"], q["k"], q["variant"])


def _one_soliton(p, grid):
    q = _take(p, {"a": ("real", 1.0), "b": ("real", -1.0), "n": ("int", 0), "k": ("int", 0),
                  "variant": ("str", "printed")})
    return make_one_soliton(q["a"], q["b"], q["n"], q["k"], q["variant"])


def _multi_soliton(p, grid):
    q = _take(p, {"a": ("reals", [1.0]), "b": ("reals", [-1.0]), "n": ("int", 0), "k": ("int", 0)})
    return make_multi_soliton(q["a"], q["b"], q["n"], q["k"])


def _potential(p, grid):
    q = _take(p, {"g": ("str", "rational"), "m": ("int", 1), "a": ("real", 1.0), "b": ("real", -1.0),
                  "n": ("int", 0), "k": ("int", 0)})
    if q["g"] == "rational":
        g, dg = potential_rational(q["m"])
        poles = [0j] if q["m"] < 0 else []
        rec = {"g": "rational", "m": q["m"]}
    elif q["g"] == "one-soliton":
        g, dg = potential_one_soliton(q["a"], q["b"])
        poles = []
        rec = {"g": "one-soliton", "a": q["a"], "b": q["b"]}
    else:
        raise BadParams("potential g must be 'rational' or 'one-soliton'")
    return from_potential(g, dg, q["n"], q["k"], poles=poles, params=rec)


def _exponential(p, grid):
    q = _take(p, {"q": ("real", 0.5), "a": ("complex", 1.0), "n": ("int", 0), "k": ("int", 0),
                  "argument": ("str", "difference")})
    return make_exponential(q["q"], q["a"], q["n"], q["k"], q["argument"])


def _exponential_linear(p, grid):
    q = _take(p, {"a": ("complex", 1.0)})
    return make_exponential_linear(q["a"], grid)


def _plane_wave(p, grid):
    q = _take(p, {"A": ("complex", 2 ** -0.5), "h": ("real", 1.0), "k": ("real", 1.0)})
    return make_plane_wave(q["A"], q["h"], q["k"])


def _superposition(p, grid):
    q = _take(p, {"A1": ("complex", 0.5), "A2": ("complex", 0.5), "alpha1": ("complex", 1j),
                  "alpha2": ("complex", 1.0), "B1": ("complex", None), "B2": ("complex", None)})
    return make_superposition(q["A1"], q["A2"], q["alpha1"], q["alpha2"], q["B1"], q["B2"])


def _bump(p, grid):
    q = _take(p, {"c": ("real", 1.0), "lambda": ("real", 1.0), "E": ("real", 1.0),
                  "variant": ("str", "printed")})
    return make_bump(q["c"], q["lambda"], q["E"], q["variant"])


def _linearized(p, grid):
    q = _take(p, {"p0": ("real", 1.0), "eps": ("int", 1), "j": ("complex", -1.0),
                  "psi1": ("complex", 2 ** -0.5), "psi2": ("complex", 1j * 2 ** -0.5),
                  "base": ("complex", 0j), "table": ("int", None), "row": ("int", None),
                  "K": ("real", None), "A": ("real", None), "s0": ("real", 0.0),
                  "eps1": ("int", 1), "branch": ("int", 1), "reduced": ("str", "printed")})
    if q["table"] is None:
        prof = constant_profile(q["p0"])
    else:
        if q["row"] is None or q["K"] is None or q["A"] is None:
            raise BadParams("table profiles need table, row, K and A")
        prof = profile_map(TableEntry(q["table"], q["row"], q["K"], q["A"], q["eps1"], q["branch"], q["s0"]))
    g = grid if grid is not None else DomainGrid.rect(-1, 1, -1, 1, 21, 21)
    return integrate_linearized(prof, q["eps"], q["j"], (q["psi1"], q["psi2"]), g, base=q["base"],
                                reduced=q["reduced"])


FAMILIES: dict[str, Callable[[Params, DomainGrid | None], FieldSampler]] = {
    "rational": _rational,
    "one-soliton": _one_soliton,
    "multi-soliton": _multi_soliton,
    "potential": _potential,
    "exponential": _exponential,
    "exponential-linear": _exponential_linear,
    "plane-wave": _plane_wave,
    "superposition": _superposition,
    "bump": _bump,
    "linearized": _linearized,
}

# parameter records used by the errata sweep
SWEEP = {
    "rational": "m=1",
    "one-soliton": "a=1,b=-1",
    "multi-soliton": "a=1:2,b=-1:-2",
    "potential": "g=one-soliton,a=1,b=-1",
    "exponential": "q=0.5,a=1,0",
    "exponential-linear": "a=1,0",
    "plane-wave": "A=1,h=2,k=0.5",
    "superposition": "",
    "bump": "c=1,lambda=1,E=1",
    "linearized": "",
}


def _variant_alternatives(name: str, params: Params, grid: DomainGrid | None):
    """Labelled rewrites of a family to try when the printed form fails."""
    if name in ("rational", "one-soliton", "bump"):
        q = dict(params, variant="consistent")
        return [("consistent amplitude/phase", q)]
    if name == "exponential":
        q = {k: v for k, v in params.items() if k != "argument"}
        a = q.get("a", 1.0)
        return [("argument q(z^2 + zbar^2)", dict(q, argument="sum")),
                ("linear argument 2(a z + conj(a) zbar)", ("exponential-linear", {"a": a}))]
    if name == "plane-wave":
        A = complex(params.get("A", 2 ** -0.5))
        unit = A / abs(A) if A != 0 else 1.0
        return [(f"h = k = {s:+d}, |A| = 1/sqrt(2)", {"A": unit * 2 ** -0.5, "h": float(s), "k": float(s)})
                for s in (1, -1)]
    return []


def variant_scan(name: str, params: Params, grid: DomainGrid, residual) -> list[dict]:
    """Measure ``residual(sampler)`` for every alternative of ``name``; best first."""
    out = []
    for label, spec in _variant_alternatives(name, params, grid):
        fam, rec = spec if isinstance(spec, tuple) else (name, spec)
        try:
            val = float(residual(build_family(fam, rec, grid)))
        except (WecmcError, ValueError) as e:
            out.append({"label": label, "family": fam, "residual": None, "error": str(e)})
            continue
        out.append({"label": label, "family": fam, "residual": val})
    return sorted(out, key=lambda r: (r["residual"] is None, r["residual"] or 0.0, r["label"]))


def build_family(name: str, params: Params | None = None, grid: DomainGrid | None = None) -> FieldSampler:
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise UnknownFamily(f"unknown family {name!r}; known: {', '.join(sorted(FAMILIES))}") from None
    return factory(dict(params or {}), grid)
