"""Residual engines for the first-order system, its conservation law, the current and the constraints."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .complexcore import DEFAULT_H, DomainGrid, stats_over, wirtinger
from .errors import EmptyDomain, StencilOnSingularity
from .families import FieldSampler, phase

FIRST_ORDER_TOL = 1e-6
NESTED_TOL = 1e-4


@dataclass(frozen=True)
class ResidualStats:
    max_abs: float
    l2: float
    argmax: complex
    nodes: int
    components: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_components(cls, comps: dict, grid: DomainGrid) -> ResidualStats:
        """Pointwise max over named residual arrays, plus per-component stats."""
        arrays = [np.abs(v) for v in comps.values()]
        worst = np.max(np.stack(arrays), axis=0) if arrays else np.zeros(grid.mask.shape)
        mx, rms, arg, n = stats_over(worst, grid)
        sub = {}
        if len(comps) > 1:
            for name, v in comps.items():
                a, b, c, d = stats_over(v, grid)
                sub[name] = cls(a, b, c, d)
        return cls(mx, rms, arg, n, sub)

    def as_record(self, tolerance: float) -> dict:
        return {
            "max_abs": float(self.max_abs),
            "l2": float(self.l2),
            "argmax": [float(self.argmax.real), float(self.argmax.imag)],
            "nodes": int(self.nodes),
            "pass": bool(self.max_abs < tolerance),
            "tolerance": float(tolerance),
        }


@dataclass(frozen=True)
class VerificationReport:
    """Identity name -> (stats, tolerance), plus free-text errata annotations."""

    results: dict
    errata: tuple = ()

    def add(self, name: str, stats: ResidualStats, tolerance: float) -> VerificationReport:
        if name in self.results:
            raise ValueError(f"identity {name!r} already in report")
        res = dict(self.results)
        res[name] = (stats, tolerance)
        return VerificationReport(res, self.errata)

    def with_errata(self, *notes: str) -> VerificationReport:
        return VerificationReport(dict(self.results), tuple(self.errata) + tuple(notes))

    def merge(self, other: VerificationReport) -> VerificationReport:
        rep = self
        for k, (s, t) in other.results.items():
            rep = rep.add(k, s, t)
        return rep.with_errata(*other.errata)

    def passed(self, name: str | None = None) -> bool:
        if name is not None:
            s, t = self.results[name]
            return bool(s.max_abs < t)
        return all(s.max_abs < t for s, t in self.results.values())

    def failures(self) -> list[str]:
        return [k for k, (s, t) in self.results.items() if not s.max_abs < t]

    def to_dict(self) -> dict:
        out = {k: s.as_record(t) for k, (s, t) in self.results.items()}
        out["errata"] = list(self.errata)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def prepare_grid(f: FieldSampler, grid: DomainGrid, radius: float, cuts: bool = True) -> DomainGrid:
    """Mask nodes within ``radius`` of the sampler's declared singularities."""
    g = grid.with_mask(f.singular(grid.Z, radius, cuts))
    if not np.any(g.active):
        raise EmptyDomain("every grid node is masked")
    return g


def field_derivatives(f: FieldSampler, z, h: float = DEFAULT_H, derivatives: str = "auto",
                      continuation: bool = False):
    """(psi1, psi2, d psi1, dbar psi1, d psi2, dbar psi2) at ``z``.

    With ``continuation`` the stencil values at points near a square-root cut
    are sign-aligned with the centre value (nearest-value continuation) before
    differencing.
    """
    if derivatives not in ("auto", "fd", "exact"):
        raise ValueError("derivatives must be 'auto', 'fd' or 'exact'")
    z = np.asarray(z, dtype=complex)
    psi1, psi2 = f(z)
    if derivatives == "exact" and f.derivatives is None:
        raise ValueError(f"{f.name} sampler has no exact derivatives")
    if f.derivatives is not None and derivatives != "fd":
        with np.errstate(all="ignore"):
            d1, db1, d2, db2 = f.derivatives(z)
        return psi1, psi2, d1, db1, d2, db2
    if not continuation:
        (d1, db1), (d2, db2) = wirtinger(f, z, h)
        return psi1, psi2, d1, db1, d2, db2
    align = f.on_cut(z, 2 * h)
    s1, s2 = f(np.stack([z + h, z - h, z + 1j * h, z - 1j * h]))
    out = []
    for s, c in ((s1, psi1), (s2, psi2)):
        flip = align & (np.abs(s + c) < np.abs(s - c))
        s = np.where(flip, -s, s)
        fx = (s[0] - s[1]) / (2 * h)
        fy = (s[2] - s[3]) / (2 * h)
        out += [0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)]
    return (psi1, psi2, *out)


def we_residual(f: FieldSampler, grid: DomainGrid, h: float = DEFAULT_H,
                derivatives: str = "auto", mask_radius: float | None = None) -> ResidualStats:
    """Residuals of d psi1 = p psi2, dbar psi2 = -p psi1 and the conjugate pair."""
    g = prepare_grid(f, grid, 10 * h if mask_radius is None else mask_radius)
    Z = g.Z[g.active]
    psi1, psi2, d1, db1, d2, db2 = field_derivatives(f, Z, h, derivatives)
    p = np.abs(psi1) ** 2 + np.abs(psi2) ** 2
    comps = {
        "d_psi1": d1 - p * psi2,
        "dbar_psi2": db2 + p * psi1,
        # conjugate equations: dbar conj(psi1) = p conj(psi2), d conj(psi2) = -p conj(psi1)
        "dbar_conj_psi1": np.conj(d1) - p * np.conj(psi2),
        "d_conj_psi2": np.conj(db2) + p * np.conj(psi1),
    }
    return ResidualStats.from_components(_scatter(comps, g), g)


def conservation_residual(f: FieldSampler, grid: DomainGrid, h: float = DEFAULT_H,
                          mask_radius: float | None = None) -> ResidualStats:
    """d(psi1^2) + dbar(psi2^2) and its conjugate, by central differences of the squares."""
    g = prepare_grid(f, grid, 10 * h if mask_radius is None else mask_radius)
    Z = g.Z[g.active]

    def squares(z):
        a, b = f(z)
        return a * a, b * b, np.conj(a) ** 2, np.conj(b) ** 2

    (da, _), (_, dbb), (_, dbac), (dbc, _) = wirtinger(squares, Z, h)
    comps = {"holomorphic": da + dbb, "conjugate": dbac + dbc}
    return ResidualStats.from_components(_scatter(comps, g), g)


def current(f: FieldSampler, z, h: float = DEFAULT_H, derivatives: str = "auto",
            continuation: bool = False):
    """j = conj(psi1) d psi2 - psi2 d conj(psi1).

    j is even in psi, so with ``continuation`` points next to a sign cut are
    admitted and handled by stencil alignment.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(f.singular(z, 2 * h, cuts=not continuation)):
        raise StencilOnSingularity("current stencil touches a singularity")
    psi1, psi2, d1, db1, d2, db2 = field_derivatives(f, z, h, derivatives, continuation)
    j = np.conj(psi1) * d2 - psi2 * np.conj(db1)
    return complex(j) if np.ndim(j) == 0 else j


def outer_step(h: float) -> float:
    return max(1e-4, 30.0 * h)


def current_holomorphy(f: FieldSampler, grid: DomainGrid, h: float = DEFAULT_H,
                       derivatives: str = "auto") -> ResidualStats:
    """dbar j over the grid, j differentiated with the outer step max(1e-4, 30 h)."""
    h2 = outer_step(h)
    g = prepare_grid(f, grid, 10 * h2)
    Z = g.Z[g.active]

    def jfun(z):
        return current(f, z, h, derivatives)

    _, dbj = wirtinger(jfun, Z, h2)
    return ResidualStats.from_components(_scatter({"dbar_j": dbj}, g), g)


def constraint_residual(f: FieldSampler, eps, grid: DomainGrid, h: float = DEFAULT_H,
                        derivatives: str = "auto") -> ResidualStats:
    """Differential constraint residual for eps = +1, -1, or "both" (the simultaneous pair)."""
    g = prepare_grid(f, grid, 10 * h)
    Z = g.Z[g.active]
    psi1, psi2, d1, db1, d2, db2 = field_derivatives(f, Z, h, derivatives)
    c1, c2 = np.conj(psi1), np.conj(psi2)
    d_c1 = np.conj(db1)   # d conj(psi1)
    db_c2 = np.conj(d2)   # dbar conj(psi2)
    if eps == "both":
        comps = {"holomorphic": psi1 * d_c1 + c2 * d2, "antiholomorphic": c1 * db1 + psi2 * db_c2}
    elif eps in (1, -1):
        comps = {f"eps={int(eps):+d}": psi1 * d_c1 - eps * c1 * db1 + c2 * d2 - eps * psi2 * db_c2}
    else:
        raise ValueError("eps must be +1, -1 or 'both'")
    return ResidualStats.from_components(_scatter(comps, g), g)


def potential_residual(dg, z, n: int = 0, k: int = 0, h: float = DEFAULT_H) -> np.ndarray:
    """Pointwise defect of the second-order equation a potential g must satisfy.

    d dbar g - 2i (-1)^{k-n} [dbar g (d gbar)^{1/2} (d g)^{1/2} + (dbar g)^{1/2} d g (dbar gbar)^{1/2}]
    with principal roots, d gbar = conj(dbar g), dbar gbar = conj(d g). ``dg``
    returns (d g, dbar g); d dbar g is a central difference of dbar g.
    """
    z = np.asarray(z, dtype=complex)
    d, db = (np.asarray(v, dtype=complex) for v in dg(z))
    ddb, _ = wirtinger(lambda w: np.asarray(dg(w)[1], dtype=complex), z, h)
    ph = phase(k - n)
    return ddb - 2j * ph * (db * np.sqrt(np.conj(db)) * np.sqrt(d) + np.sqrt(db) * d * np.sqrt(np.conj(d)))


def _scatter(comps: dict, g: DomainGrid) -> dict:
    out = {}
    for k, v in comps.items():
        full = np.zeros(g.mask.shape, dtype=complex)
        full[g.active] = v
        out[k] = full
    return out


def verify_field(f: FieldSampler, grid: DomainGrid, h: float = DEFAULT_H, tol: float = FIRST_ORDER_TOL,
                 nested_tol: float = NESTED_TOL, constraint=None) -> VerificationReport:
    """Standard identity battery; failing identities of a flagged family become errata notes."""
    rep = VerificationReport({})
    rep = rep.add("we_residual", we_residual(f, grid, h), tol)
    rep = rep.add("conservation", conservation_residual(f, grid, h), 4 * tol)
    rep = rep.add("current_holomorphy", current_holomorphy(f, grid, h), nested_tol)
    if constraint is not None:
        rep = rep.add(f"constraint[{constraint}]", constraint_residual(f, constraint, grid, h), tol)
    notes = []
    label = f"{f.name}[{f.variant}]"
    for name in rep.failures():
        s, t = rep.results[name]
        notes.append(f"{label}: {name} max residual {s.max_abs:.3e} >= tolerance {t:.1e} "
                     f"at ({s.argmax.real:.6g}, {s.argmax.imag:.6g})")
    if rep.failures():
        notes.extend(f"{label}: {n}" for n in f.notes)
    return rep.with_errata(*notes)
