"""The reduced profile equation p'' = p'^2/p - eps A/p + eps p^3, its first integral, and the closed-form catalog."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import (EmptyDomain, InconsistentSeed, OutOfRange, ParameterConstraintViolated,
                     PoleApproached)
from .special import jacobi, jacobi_complex
from .verification import ResidualStats

BLOWUP = 1e6
VANISH = 1e-9
SEED_TOL = 1e-10
TABLE_TOL = 1e-8
FD_STEP = 1e-3


def first_integral_rhs(p, eps, A, K):
    """eps p^4 + K p^2 + eps A."""
    return eps * p ** 4 + K * p ** 2 + eps * A


def hamiltonian(p, pdot, eps, A, K):
    """H = pdot^2 - eps p^4 - K p^2 - eps A; zero on catalog-matching data."""
    return pdot ** 2 - first_integral_rhs(p, eps, A, K)


def consistent_slope(p0, eps, A, K, sign: int = 1) -> float:
    """The pdot(s0) that puts (p0, pdot) on the zero level of H."""
    r = first_integral_rhs(p0, eps, A, K)
    if r < 0:
        raise ParameterConstraintViolated(
            f"no real slope: eps p0^4 + K p0^2 + eps A = {r:.6g} < 0 at p0 = {p0}")
    return float(sign) * float(np.sqrt(r))


@dataclass(frozen=True)
class PainleveParams:
    eps: int
    A: float
    K: float
    p0: float
    dp0: float
    s0: float = 0.0

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        vals = (self.A, self.K, self.p0, self.dp0, self.s0)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        if self.A < 0:
            raise ParameterConstraintViolated("A must be >= 0")

    @classmethod
    def consistent(cls, eps, A, K, p0, s0=0.0, sign=1) -> PainleveParams:
        return cls(eps, A, K, p0, consistent_slope(p0, eps, A, K, sign), s0)

    def seed_defect(self) -> float:
        return abs(hamiltonian(self.p0, self.dp0, self.eps, self.A, self.K))

    def check_consistent(self, tol: float = SEED_TOL) -> None:
        d = self.seed_defect()
        if d >= tol:
            raise InconsistentSeed(f"initial data off the first-integral level set by {d:.3e}")


@dataclass(frozen=True)
class PainleveProfile:
    """Sampled solution of the profile ODE with the first-integral drift along it."""

    params: PainleveParams
    step: float
    s: np.ndarray
    p: np.ndarray
    pdot: np.ndarray
    H_drift: np.ndarray
    stopped: str | None = None

    @property
    def max_drift(self) -> float:
        return float(np.max(np.abs(self.H_drift))) if self.H_drift.size else 0.0

    def csv_text(self) -> str:
        lines = ["s,p,pdot,H_drift"]
        for row in zip(self.s, self.p, self.pdot, self.H_drift):
            lines.append(",".join(f"{float(v):.17g}" for v in row))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        P = self.params
        return {
            "eps": P.eps, "A": P.A, "K": P.K, "p0": P.p0, "dp0": P.dp0, "s0": P.s0,
            "step": self.step, "samples": int(self.s.size),
            "s_last": float(self.s[-1]), "max_H_drift": self.max_drift,
            "seed_defect": float(P.seed_defect()), "stopped": self.stopped,
        }


def _rhs(p, q, eps, A):
    return q, q * q / p - eps * A / p + eps * p ** 3


def integrate_p(params: PainleveParams, s_end: float, step: float,
                blowup: float = BLOWUP, vanish: float = VANISH) -> PainleveProfile:
    """Classical RK4 in extended precision from s0 to s_end.

    Raises PoleApproached (carrying the partial profile) once |p| leaves
    [vanish, blowup]; poles are movable, so this is an expected outcome.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if params.p0 == 0:
        raise ValueError("p0 must be nonzero")
    span = s_end - params.s0
    n = int(round(abs(span) / step))
    if n < 1:
        raise ValueError("integration range shorter than one step")
    ld = np.longdouble
    hh = ld(span) / ld(n)
    eps, A, K = ld(params.eps), ld(params.A), ld(params.K)
    p, q = ld(params.p0), ld(params.dp0)
    H0 = hamiltonian(p, q, eps, A, K)
    ps, qs, Hs = [p], [q], [ld(0)]
    stopped = None
    for _ in range(n):
        k1p, k1q = _rhs(p, q, eps, A)
        k2p, k2q = _rhs(p + hh / 2 * k1p, q + hh / 2 * k1q, eps, A)
        k3p, k3q = _rhs(p + hh / 2 * k2p, q + hh / 2 * k2q, eps, A)
        k4p, k4q = _rhs(p + hh * k3p, q + hh * k3q, eps, A)
        p = p + hh / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        q = q + hh / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        if not (np.isfinite(p) and np.isfinite(q)) or abs(p) > blowup or abs(p) < vanish:
            stopped = f"|p| = {float(abs(p)):.3e} left [{vanish:g}, {blowup:g}]"
            break
        ps.append(p)
        qs.append(q)
        Hs.append(hamiltonian(p, q, eps, A, K) - H0)
    m = len(ps)
    s = (ld(params.s0) + hh * np.arange(m, dtype=ld)).astype(float)
    prof = PainleveProfile(params, float(abs(hh)), s, np.array(ps, dtype=float),
                           np.array(qs, dtype=float), np.array(Hs, dtype=float), stopped)
    if stopped:
        raise PoleApproached(f"movable pole near s = {float(s[-1] + hh):.6g}: {stopped}", profile=prof)
    return prof


# closed-form catalog

@dataclass(frozen=True)
class TableEntry:
    """One row of the closed-form catalog with its parameters.

    ``branch`` selects the upper/lower sign in K +- w (or |K| +- w); ``eps1``
    is the free overall sign.
    """

    table: int
    row: int
    K: float
    A: float
    eps1: int = 1
    branch: int = 1
    s0: float = 0.0

    def __post_init__(self):
        if self.table not in (1, 2) or self.row not in range(1, 7):
            raise ValueError("table must be 1 or 2 and row 1..6")
        if self.eps1 not in (1, -1) or self.branch not in (1, -1):
            raise ValueError("eps1 and branch must be +1 or -1")

    @property
    def key(self) -> str:
        return f"table:{self.table}:row:{self.row}"

    @property
    def w(self) -> float:
        d = self.K ** 2 - 4 * self.A
        if d < 0:
            raise ParameterConstraintViolated(f"{self.key}: K^2 - 4A = {d:.6g} < 0")
        return float(np.sqrt(d))


@dataclass(frozen=True)
class RowForm:
    """p(u) = amplitude * core(u), u = s - s0, with the row's printed eps."""

    eps: int
    amplitude: float
    core: Callable
    modulus: float | None = None
    extras: dict = field(default_factory=dict)


def _require(cond: bool, entry: TableEntry, what: str):
    if not cond:
        raise ParameterConstraintViolated(f"{entry.key}: range requires {what}")


def _modulus(k: float, entry: TableEntry) -> float:
    if not (np.isfinite(k) and 0.0 <= k <= 1.0):
        raise ParameterConstraintViolated(f"{entry.key}: modulus k = {k:.6g} outside [0, 1]")
    return float(k)


def _jac(u, k):
    u = np.asarray(u)
    if np.iscomplexobj(u):
        return jacobi_complex(u, k)
    return tuple(np.asarray(v) for v in jacobi(u, k))


def _sqrt(x):
    return np.sqrt(x) if np.iscomplexobj(x) else np.sqrt(np.asarray(x, dtype=float))


def _row_form(entry: TableEntry) -> RowForm:
    t, r, K, A, e1, pm = entry.table, entry.row, entry.K, entry.A, entry.eps1, entry.branch
    sq2 = np.sqrt(2.0)
    if (t, r) == (1, 1):
        _require(K == 0, entry, "K = 0")
        a4 = A ** 0.25

        def core(u):
            cn = _jac(2 * a4 * u, 1 / sq2)[1]
            return _sqrt((1 + cn) / (1 - cn))
        return RowForm(1, e1 * a4, core, 1 / sq2)
    if (t, r) == (1, 2):
        _require(K == 0, entry, "K = 0")
        k = _modulus(2 * np.sqrt(3 * sq2 - 4), entry)
        g, B, a4 = 2 - sq2, 1 + sq2, A ** 0.25

        def core(u):
            sn, cn, _ = _jac(a4 / g * u, k)
            return (B * cn - sn) / (B * cn + sn)
        return RowForm(1, e1 * a4, core, k)
    if (t, r) in ((1, 3), (1, 4)):
        _require(K > 0 and K * K - 4 * A > 0, entry, "K > 0, K^2 - 4A > 0")
        w = entry.w
        k = _modulus(np.sqrt(2 * w / (K + w)), entry)
        if r == 3:
            g = sq2 / np.sqrt(K + w)

            def core(u):
                sn = _jac(u / g, k)[0]
                return 1 / _sqrt((K + w) * (1 - k * k * sn ** 2))
            return RowForm(-1, e1 * np.sqrt(2 * A), core, k)
        g = np.sqrt(2 / (K + w))

        def core(u, power=1):
            sn = _jac(u / g, k)[0]
            return _sqrt(0.5 * (K + w) - w * sn ** power)
        return RowForm(-1, float(e1), core, k,
                       {"sn->sn^2": lambda u: core(u, power=2)})
    if (t, r) in ((1, 5), (2, 2)):
        _require(K < 0 and K * K - 4 * A > 0, entry, "K < 0, K^2 - 4A > 0")
        w, Km = entry.w, abs(K)
        k = _modulus(np.sqrt((Km - pm * w) / (Km + pm * w)), entry)
        g = sq2 / np.sqrt(Km + pm * w)
        if t == 1:
            return RowForm(1, e1 * np.sqrt(Km + pm * w) / sq2,
                           lambda u: 1 / _jac(u / g, k)[0], k)

        def core(u):
            sn, cn, _ = _jac(u / g, k)
            return _sqrt(Km + pm * w + (Km - pm * w) * sn ** 2) / cn
        return RowForm(1, e1 / sq2, core, k)
    if (t, r) == (1, 6):
        _require(A == 0 and K > 0, entry, "A = 0, K > 0")
        return RowForm(1, K, lambda u: 1 / np.cosh(np.sqrt(K) * u))
    if (t, r) in ((2, 1), (2, 3)):
        _require(K > 0 and K * K - 4 * A > 0, entry, "K > 0, K^2 - 4A > 0")
        w = entry.w
        _require(np.sqrt(A) < (K + pm * w) / 2, entry, "A^(1/2) < (K +- w)/2")
        rad = 2 * (K * K - 4 * A + pm * K * w)
        _require(rad >= 0, entry, "2(K^2 - 4A +- Kw) >= 0")
        k = _modulus(np.sqrt(rad) / (K + pm * w), entry)

        def tn(v):
            sn, cn, _ = _jac(v, k)
            return sn / cn
        if r == 1:
            g = (0.5 * (K + pm * w)) ** -0.5
            return RowForm(1, e1 * np.sqrt(2 * A) / (K + pm * w), lambda u: tn(u / g), k)
        a = np.sqrt(K + pm * w) / sq2
        return RowForm(1, a, lambda u: tn(a * u), k)
    if (t, r) == (2, 4):
        _require(A == 0 and K > 0, entry, "A = 0, K > 0")
        return RowForm(1, K, lambda u: 1 / np.sinh(np.sqrt(K) * u))
    if (t, r) == (2, 5):
        _require(A == 0 and K < 0, entry, "A = 0, K < 0")
        rk = np.sqrt(abs(K))
        return RowForm(1, rk, lambda u: 1 / np.cos(rk / 2 * u))
    _require(A == 0 and K == 0, entry, "A = 0, K = 0")
    return RowForm(1, 1.0, lambda u: 1 / (-u))


@dataclass(frozen=True)
class Variant:
    amplitude: str = "printed"   # printed | sqrt
    argument: float = 1.0        # u -> c u
    eps_flip: bool = False
    extra: str | None = None

    @property
    def is_printed(self) -> bool:
        return self == Variant()

    def label(self) -> str:
        bits = [f"amplitude={self.amplitude}", f"argument={self.argument:g}u",
                f"eps={'flipped' if self.eps_flip else 'printed'}"]
        if self.extra:
            bits.append(self.extra)
        return ", ".join(bits)

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "argument": self.argument,
                "eps_flip": self.eps_flip, "extra": self.extra}


def _variant_fn(form: RowForm, v: Variant):
    amp = form.amplitude
    if v.amplitude == "sqrt":
        amp = float(np.sign(amp) * np.sqrt(abs(amp)))
    core = form.extras[v.extra] if v.extra else form.core
    c = v.argument
    return lambda u: amp * core(c * u)


def row_eps(entry: TableEntry) -> int:
    return _row_form(entry).eps


def table_profile(entry: TableEntry, s, variant: Variant | None = None):
    """Printed closed form p(s - s0) (or a scan variant of it), real or complex s."""
    form = _row_form(entry)
    fn = _variant_fn(form, variant or Variant())
    s = np.asarray(s)
    u = s - entry.s0
    with np.errstate(all="ignore"):
        p = fn(u)
    p = np.asarray(p)
    bad = ~np.isfinite(p)
    if np.any(bad):
        where = np.asarray(s)[bad].ravel()[0] if np.ndim(s) else s
        raise OutOfRange(f"{entry.key}: profile undefined at s = {complex(where):.6g}")
    return p.item() if p.ndim == 0 else p


def profile_derivative(fn, u, h: float = FD_STEP):
    """Five-point centred derivative."""
    return (-fn(u + 2 * h) + 8 * fn(u + h) - 8 * fn(u - h) + fn(u - 2 * h)) / (12 * h)


DEFAULT_PARAMS = {
    (1, 1): (0.0, 1.0), (1, 2): (0.0, 1.0), (1, 3): (1.0, 0.2), (1, 4): (1.0, 0.2),
    (1, 5): (-1.0, 0.2), (1, 6): (2.0, 0.0),
    (2, 1): (1.0, 0.2), (2, 2): (-1.0, 0.2), (2, 3): (1.0, 0.2), (2, 4): (2.0, 0.0),
    (2, 5): (-2.0, 0.0), (2, 6): (0.0, 0.0),
}


def default_entry(table: int, row: int, **kw) -> TableEntry:
    K, A = DEFAULT_PARAMS[(table, row)]
    return TableEntry(table, row, kw.pop("K", K), kw.pop("A", A), **kw)


def default_s_grid(entry: TableEntry) -> np.ndarray:
    """Interior sample points away from the row's own poles."""
    if (entry.table, entry.row) == (2, 6):
        return entry.s0 + np.linspace(-2.0, -0.5, 31)
    return entry.s0 + np.linspace(0.3, 0.8, 26)


def table_verify(entry: TableEntry, s_grid=None, variant: Variant | None = None,
                 h: float = FD_STEP) -> ResidualStats:
    """First-integral residual of a catalog profile on a real s grid.

    ``max_abs`` is the normalised residual |p'^2 - rhs| / (p'^2 + |p|^4 + |K| p^2 + A);
    the absolute residual is in ``components["absolute"]``.
    """
    s = default_s_grid(entry) if s_grid is None else np.asarray(s_grid, dtype=float)
    if s.size == 0:
        raise EmptyDomain("empty s grid")
    v = variant or Variant()
    form = _row_form(entry)
    eps = -form.eps if v.eps_flip else form.eps
    fn = _variant_fn(form, v)
    u = s - entry.s0
    with np.errstate(all="ignore"):
        p = fn(u)
        pd = profile_derivative(fn, u, h)
    K, A = entry.K, entry.A
    absolute = np.abs(pd ** 2 - first_integral_rhs(p, eps, A, K))
    scale = pd ** 2 + p ** 4 + abs(K) * p ** 2 + A
    normed = absolute / scale
    normed = np.where(np.isfinite(normed), normed, np.inf)
    absolute = np.where(np.isfinite(absolute), absolute, np.inf)

    def stats(r):
        i = int(np.argmax(r))
        return ResidualStats(float(r[i]), float(np.sqrt(np.mean(r ** 2))), complex(s[i]), int(s.size))
    return replace(stats(normed), components={"absolute": stats(absolute)})


def variants_for(entry: TableEntry) -> list[Variant]:
    form = _row_form(entry)
    extras = [None] + sorted(form.extras)
    return [Variant(a, c, e, x) for a, c, e, x in
            itertools.product(("printed", "sqrt"), (1.0, 0.5, 2.0), (False, True), extras)]


@dataclass(frozen=True)
class TableVerdict:
    entry: TableEntry
    printed: ResidualStats
    best: Variant
    best_stats: ResidualStats
    scanned: tuple
    tol: float = TABLE_TOL

    @property
    def passed(self) -> bool:
        return bool(self.printed.max_abs < self.tol)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "errata-candidate"

    def note(self) -> str:
        return (f"{self.entry.key}: printed first-integral residual {self.printed.max_abs:.3e} "
                f">= {self.tol:.0e}; best variant ({self.best.label()}) gives "
                f"{self.best_stats.max_abs:.3e}")

    def to_record(self) -> dict:
        rec = self.printed.as_record(self.tol)
        e = self.entry
        rec.update({
            "status": self.status,
            "absolute_max": float(self.printed.components["absolute"].max_abs),
            "params": {"K": e.K, "A": e.A, "eps": row_eps(e), "eps1": e.eps1,
                       "branch": e.branch, "s0": e.s0},
            "best_variant": self.best.to_dict(),
            "best_residual": float(self.best_stats.max_abs),
            "variants": [dict(v.to_dict(), residual=float(r)) for v, r in self.scanned],
        })
        return rec


def scan_row(entry: TableEntry, s_grid=None, tol: float = TABLE_TOL) -> TableVerdict:
    """Verify the printed row and scan amplitude/argument/eps substitutions."""
    printed = table_verify(entry, s_grid)
    scanned = []
    best, best_stats = Variant(), printed
    for v in variants_for(entry):
        st = printed if v.is_printed else table_verify(entry, s_grid, v)
        scanned.append((v, st.max_abs))
        if st.max_abs < best_stats.max_abs:
            best, best_stats = v, st
    return TableVerdict(entry, printed, best, best_stats, tuple(scanned), tol)


def all_entries() -> list[TableEntry]:
    return [default_entry(t, r) for t in (1, 2) for r in range(1, 7)]


def tables_report(entries=None, tol: float = TABLE_TOL) -> dict:
    """Key "table:T:row:N" -> verdict record, plus the collected errata notes."""
    out, notes = {}, []
    for e in entries or all_entries():
        v = scan_row(e, tol=tol)
        out[e.key] = v.to_record()
        if not v.passed:
            notes.append(v.note())
    out["errata"] = notes
    return out


def tables_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def profile_map(entry: TableEntry, h: float = 1e-4):
    """s -> (p, pdot) for the printed row; pdot by a five-point difference along real s.

    Valid at complex s since the closed forms are analytic there.
    """
    form = _row_form(entry)
    fn = _variant_fn(form, Variant())

    def prof(s):
        u = np.asarray(s, dtype=complex) - entry.s0
        return fn(u), profile_derivative(fn, u, h)
    return prof
