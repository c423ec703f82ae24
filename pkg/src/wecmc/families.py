"""Closed-form spinor field families and the samplers they produce.

Every factory returns a :class:`FieldSampler`. Factories transcribe the
printed closed forms by default (``variant="printed"``). Where such a form
does not solve the first-order system it is flagged ``errata_candidate`` and
a rewrite that does is available as ``variant="consistent"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .complexcore import DEFAULT_H, DomainGrid, laplacian, wirtinger
from .errors import BadParams, DegenerateFamily, NotHarmonic

Pair = tuple[np.ndarray, np.ndarray]


def _never(z: np.ndarray, radius: float = 0.0) -> np.ndarray:
    return np.zeros(np.shape(z), bool)


@dataclass(frozen=True, eq=False)
class FieldSampler:
    """Evaluator z -> (psi1, psi2).

    ``derivatives`` (optional) returns (d psi1, dbar psi1, d psi2, dbar psi2).
    ``singular(z, radius)`` flags points within ``radius`` of a pole or branch
    point (``singular_fn``) or of a square-root sign cut (``cut_fn``). Across a
    cut the sampler output only changes sign, so quantities that are even in
    psi (p, |j|) stay smooth there. Conjugate fields are always obtained by
    conjugating ``eval`` output.
    """

    name: str
    params: dict
    eval: Callable[[np.ndarray], Pair]
    derivatives: Callable[[np.ndarray], tuple] | None = None
    singular_fn: Callable[[np.ndarray, float], np.ndarray] = _never
    variant: str = "printed"
    errata_candidate: bool = False
    notes: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)
    cut_fn: Callable[[np.ndarray, float], np.ndarray] = _never

    def __call__(self, z) -> Pair:
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            return self.eval(z)

    def p(self, z) -> np.ndarray:
        a, b = self(z)
        return np.abs(a) ** 2 + np.abs(b) ** 2

    def singular(self, z, radius: float = 10 * DEFAULT_H, cuts: bool = True) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.asarray(self.singular_fn(z, radius), bool)
        if cuts:
            out = out | np.asarray(self.cut_fn(z, radius), bool)
        return out

    def on_cut(self, z, radius: float) -> np.ndarray:
        return np.asarray(self.cut_fn(np.asarray(z, dtype=complex), radius), bool)

    def predicate(self, radius: float = 10 * DEFAULT_H, cuts: bool = True):
        return lambda z: self.singular(z, radius, cuts)


def phase(n: int) -> float:
    """e^{i n pi} collapsed to an exact +/-1."""
    return -1.0 if int(n) % 2 else 1.0


def _near_points(points: Sequence[complex]):
    pts = np.asarray(points, dtype=complex)

    def f(z, radius):
        if pts.size == 0:
            return np.zeros(np.shape(z), bool)
        return np.any(np.abs(np.asarray(z)[..., None] - pts) <= max(radius, 0.0), axis=-1)
    return f


def _near_negative_axis(z, radius, origin=0j):
    w = np.asarray(z) - origin
    return (w.real <= radius) & (np.abs(w.imag) <= radius)


def _branch_jump(u_fn: Callable[[np.ndarray], np.ndarray]):
    """Flag points whose radius-neighbourhood straddles the principal sqrt cut of u_fn."""
    def f(z, radius):
        z = np.asarray(z, dtype=complex)
        r = max(radius, 1e-12)
        with np.errstate(all="ignore"):
            r0 = np.sqrt(u_fn(z))
            bad = ~np.isfinite(r0)
            for d in (r, -r, 1j * r, -1j * r):
                rd = np.sqrt(u_fn(z + d))
                bad |= np.abs(rd + r0) < np.abs(rd - r0)
                bad |= ~np.isfinite(rd)
        return bad
    return f


# ---------------------------------------------------------------- rational

def make_rational(m: int, n: int = 0, k: int = 0, variant: str = "printed") -> FieldSampler:
    """Rational family with denominator 1 + |z|^{2m}.

    ``printed`` uses the modulus factor |z|^m times z^{(m-1)/2}. ``consistent``
    replaces it by z^m conj(z^{(m-1)/2}), which is what the potential
    g = -z^m/(1+|z|^{2m}) actually produces; both have the same |psi|.
    """
    if int(m) != m or m == 0:
        raise DegenerateFamily("rational family needs a nonzero integer m")
    m = int(m)
    if variant not in ("printed", "consistent"):
        raise BadParams(f"unknown rational variant {variant!r}")
    sm = np.sqrt(complex(m))
    s1, s2 = phase(n), phase(k)
    half = (m - 1) / 2.0

    def ev(z):
        zz = z * np.conj(z)
        D = 1.0 + zz.real ** m
        root = z ** half
        if variant == "printed":
            lead = np.abs(z) ** m * root
        else:
            lead = z ** m * np.conj(root)
        return s1 * sm * lead / D, s2 * sm * root / D

    needs_cut = (m - 1) % 2 != 0
    singular_pts = [0j] if (m < 0 or needs_cut) else []

    cut = _near_negative_axis if needs_cut else _never

    notes = ()
    if variant == "printed":
        notes = ("printed rational form: the |z|^m factor leaves a phase mismatch in the "
                 "first equation; consistent form uses z^m conj(z^{(m-1)/2})",)
    return FieldSampler("rational", {"m": m, "n": n, "k": k}, ev, None, _near_points(singular_pts),
                        variant, variant == "printed", notes, cut_fn=cut)


def potential_rational(m: int):
    """g = -z^m / (1 + |z|^{2m}) with exact Wirtinger derivatives."""
    m = int(m)

    def g(z):
        return -z ** m / (1.0 + (z * np.conj(z)).real ** m)

    def dg(z):
        zb = np.conj(z)
        D = 1.0 + (z * zb).real ** m
        return -m * z ** (m - 1) / D ** 2, m * z ** (2 * m) * zb ** (m - 1) / D ** 2
    return g, dg


# ---------------------------------------------------------------- solitons

def make_one_soliton(a: float, b: float, n: int = 0, k: int = 0,
                     variant: str = "printed") -> FieldSampler:
    """One-soliton with denominator |z-a|^2 + |z-b|^2.

    ``printed`` uses amplitude (a-b); it solves the system only when a-b = 1
    (otherwise it solves the system with p rescaled by (a-b)^-1, i.e. it is
    sqrt(a-b) times a solution). ``consistent`` uses amplitude sqrt(a-b), the
    N = 1 multi-soliton.
    """
    a, b = float(a), float(b)
    if a == b:
        raise DegenerateFamily("one-soliton needs a != b")
    if variant == "printed":
        amp = complex(a - b)
    elif variant == "consistent":
        amp = np.sqrt(complex(a - b))
    else:
        raise BadParams(f"unknown one-soliton variant {variant!r}")
    s1, s2 = phase(n), phase(k)

    def ev(z):
        D = np.abs(z - a) ** 2 + np.abs(z - b) ** 2
        return s1 * amp * (z - a) / D, s2 * amp * (np.conj(z) - b) / D

    def der(z):
        zb = np.conj(z)
        D = np.abs(z - a) ** 2 + np.abs(z - b) ** 2
        dD = 2 * zb - a - b
        dbD = 2 * z - a - b
        p1 = s1 * amp * (z - a) / D
        p2 = s2 * amp * (zb - b) / D
        return (s1 * amp / D - p1 * dD / D, -p1 * dbD / D,
                -p2 * dD / D, s2 * amp / D - p2 * dbD / D)

    notes = ()
    if variant == "printed":
        notes = ("printed one-soliton amplitude (a-b) fails the first-order system unless a-b=1; "
                 "sqrt(a-b) restores it",)
    return FieldSampler("one-soliton", {"a": a, "b": b, "n": n, "k": k}, ev, der, _never, variant,
                        variant == "printed" and abs(a - b - 1.0) > 1e-14, notes)


def potential_one_soliton(a: float, b: float):
    """g for the one-soliton with closed-form derivatives."""
    a, b = float(a), float(b)

    def Q(z):
        zb = np.conj(z)
        return -a * a - b * b + (a + b) * (z + zb) - 2 * z * zb

    def g(z):
        return (a - b) ** 2 * (-a + b + z - np.conj(z)) / (2 * Q(z))

    def dg(z):
        q2 = Q(z) ** 2
        return -(a - b) ** 2 * (np.conj(z) - b) ** 2 / q2, (a - b) ** 2 * (z - a) ** 2 / q2
    return g, dg


def make_multi_soliton(a: Sequence[float], b: Sequence[float], n: int = 0, k: int = 0) -> FieldSampler:
    """N-soliton built from w = prod (z-a_j)/(z-b_j).

    S = sum_s (prod_{j!=s} r_j - prod_j r_j)/(z - b_s) with r_j = (z-a_j)/(z-b_j)
    (algebraically the z-derivative of w); psi2 = sqrt(S)/(1+|w|^2) and
    psi1 = w sqrt(S evaluated at zbar)/(1+|w|^2), principal roots. For real
    a_j, b_j the zbar-sum is conj(S).
    """
    a = [float(x) for x in np.atleast_1d(a)]
    b = [float(x) for x in np.atleast_1d(b)]
    if len(a) == 0 or len(a) != len(b):
        raise DegenerateFamily("multi-soliton needs equal, nonempty a and b lists")
    if any(x == y for x, y in zip(a, b)):
        raise DegenerateFamily("multi-soliton needs a_j != b_j")
    A = np.asarray(a)
    B = np.asarray(b)
    s1, s2 = phase(n), phase(k)

    def parts(z):
        z = np.asarray(z, dtype=complex)[..., None]
        ratios = (z - A) / (z - B)
        w = np.prod(ratios, axis=-1)
        S = np.zeros(z.shape[:-1], dtype=complex)
        for s in range(A.size):
            others = np.prod(np.delete(ratios, s, axis=-1), axis=-1)
            S = S + (others - w) / (z[..., 0] - B[s])
        return w, S

    def ev(z):
        w, S = parts(z)
        D = 1.0 + np.abs(w) ** 2
        return s1 * w * np.sqrt(np.conj(S)) / D, s2 * np.sqrt(S) / D

    return FieldSampler("multi-soliton", {"a": a, "b": b, "n": n, "k": k}, ev, None, _near_points(B),
                        "printed", False, (), cut_fn=_branch_jump(lambda z: parts(z)[1]))


# ---------------------------------------------------------------- potentials

def from_potential(g: Callable, dg: Callable | None = None, n: int = 0, k: int = 0,
                   h: float = DEFAULT_H, poles: Sequence[complex] = (), name: str = "potential",
                   params: dict | None = None) -> FieldSampler:
    """psi1 = +/-(dbar g)^{1/2}, psi2 = +/-i(d g)^{1/2} (principal roots).

    ``dg`` returns (d g, dbar g); central differences are used when omitted.
    Points where either radicand straddles the negative real axis are
    reported by the singularity predicate.
    """
    s1, s2 = phase(n), phase(k)
    if dg is None:
        def dg(z):
            return wirtinger(g, z, h)

    def ev(z):
        d, db = dg(z)
        return s1 * np.sqrt(np.asarray(db, dtype=complex)), s2 * 1j * np.sqrt(np.asarray(d, dtype=complex))

    cut1 = _branch_jump(lambda z: dg(z)[1])
    cut2 = _branch_jump(lambda z: dg(z)[0])

    def cut(z, radius):
        return cut1(z, radius) | cut2(z, radius)

    return FieldSampler(name, dict(params or {}, n=n, k=k), ev, None, _near_points(poles), "printed",
                        False, (), cut_fn=cut)


# ---------------------------------------------------------------- harmonic compositions

def harmonic_compose(f1: Callable, f2: Callable, h: Callable, grid: DomainGrid | None = None,
                     fd_step: float = 1e-3, tol: float = 1e-8, name: str = "harmonic",
                     params: dict | None = None) -> FieldSampler:
    """psi_i = f_i(h(z, zbar)) after checking that h is harmonic on ``grid``."""
    g = grid if grid is not None else DomainGrid.rect(-1, 1, -1, 1, 21, 21)
    Z = g.Z[g.active]
    with np.errstate(all="ignore"):
        ddb = 0.25 * laplacian(h, Z, fd_step)
    worst = float(np.max(np.abs(ddb))) if Z.size else 0.0
    if not np.isfinite(worst) or worst > tol:
        raise NotHarmonic(f"max |d dbar h| = {worst:.3e} exceeds {tol:.1e}")

    def ev(z):
        v = h(z)
        return (np.broadcast_to(np.asarray(f1(v), dtype=complex), np.shape(z)),
                np.broadcast_to(np.asarray(f2(v), dtype=complex), np.shape(z)))

    return FieldSampler(name, dict(params or {}), ev, None, _never, "printed", False, (),
                        {"harmonicity": worst})


def make_exponential(q: float, a: complex, n: int = 0, k: int = 0, argument: str = "difference") -> FieldSampler:
    """psi1 = -i exp(iv), psi2 = a exp(iv) with v = q(z^2 - zbar^2) as printed.

    ``argument="sum"`` uses v = q(z^2 + zbar^2) instead, the harmonic function
    the surrounding construction names; it is a real phase, so |psi| is constant.
    """
    a = complex(a)
    if abs(abs(a) - 1.0) >= 1e-12:
        raise BadParams("exponential family needs |a| = 1")
    if argument not in ("difference", "sum"):
        raise BadParams("argument must be 'difference' or 'sum'")
    q = float(q)
    s1, s2 = phase(n), phase(k)
    sg = -1.0 if argument == "difference" else 1.0

    def ev(z):
        e = np.exp(1j * q * (z * z + sg * np.conj(z) ** 2))
        return s1 * (-1j) * e, s2 * a * e

    def der(z):
        e = np.exp(1j * q * (z * z + sg * np.conj(z) ** 2))
        d = 1j * q * 2 * z * e
        db = sg * 1j * q * 2 * np.conj(z) * e
        return s1 * (-1j) * d, s1 * (-1j) * db, s2 * a * d, s2 * a * db

    params = {"q": q, "a": a, "n": n, "k": k}
    if argument == "difference":
        note = ("printed exponential family is not a solution: the first equation requires "
                "2 q z e^{phi} = 2 a e^{3 phi} with phi = -4 q x y")
        return FieldSampler("exponential", params, ev, der, _never, "printed", True, (note,))
    note = "v = q(z^2 + zbar^2): d psi1 = 2 q z psi1 is not proportional to psi2 with constant p = 2"
    return FieldSampler("exponential", dict(params, argument="sum"), ev, der, _never, "sum-argument",
                        True, (note,))


def exponential_prediction(q: float, a: complex, z) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form residuals (d psi1 - p psi2, dbar psi2 + p psi1) of the printed exponential family.

    With phi = -4 q x y real, e = e^{phi} and p = 2 e^2:
    r1 = 2 q z e - 2 a e^3, r2 = -2 i q a zbar e - 2 i e^3.
    """
    z = np.asarray(z, dtype=complex)
    e = np.exp(-4.0 * q * z.real * z.imag)
    a = complex(a)
    return 2 * q * z * e - 2 * a * e ** 3, -2j * q * a * np.conj(z) * e - 2j * e ** 3


def make_exponential_linear(a: complex, grid: DomainGrid | None = None) -> FieldSampler:
    """Exact exponential solution with linear harmonic h = 2(a z + conj(a) zbar), |a| = 1.

    f1 = -i e^{iv}, f2 = a e^{iv}; p = 2 everywhere.
    """
    a = complex(a)
    if abs(abs(a) - 1.0) >= 1e-12:
        raise BadParams("needs |a| = 1")

    def h(z):
        return 2.0 * (a * z + np.conj(a) * np.conj(z)).real

    s = harmonic_compose(lambda v: -1j * np.exp(1j * v), lambda v: a * np.exp(1j * v), h, grid,
                         name="exponential-linear", params={"a": a})
    return FieldSampler(s.name, s.params, s.eval, None, _never, "consistent", False, (), s.meta)


# ---------------------------------------------------------------- plane waves

def make_plane_wave(A: complex, h: float, k: float) -> FieldSampler:
    """Vacuum wave psi1 = A e^{i(hz + k zbar)}, psi2 = i(A/k) e^{i(hz + k zbar)}."""
    A = complex(A)
    h, k = float(h), float(k)
    if k == 0:
        raise DegenerateFamily("plane wave needs k != 0")

    def ev(z):
        e = np.exp(1j * (h * z + k * np.conj(z)))
        return A * e, 1j * (A / k) * e

    def der(z):
        p1, p2 = ev(z)
        return 1j * h * p1, 1j * k * p1, 1j * h * p2, 1j * k * p2

    return FieldSampler("plane-wave", {"A": A, "h": h, "k": k}, ev, der, _never, "printed", False, ())


def make_superposition(A1: complex, A2: complex, alpha1: complex, alpha2: complex,
                       B1: complex | None = None, B2: complex | None = None) -> FieldSampler:
    """Two-wave superposition psi1 = A1 e^{alpha1(z+zbar)} + A2 e^{alpha2(z-zbar)}, psi2 alike with B.

    When B_i are omitted they are derived as alpha_i A_i / p0 with
    p0 = |A1|^2+|A2|^2+|B1|^2+|B2|^2, i.e. the positive root of
    p0^3 = (|A1|^2+|A2|^2) p0^2 + |alpha1 A1|^2 + |alpha2 A2|^2.
    alpha_i may be complex; the residual gate decides consistency.
    """
    A1, A2, al1, al2 = complex(A1), complex(A2), complex(alpha1), complex(alpha2)
    if B1 is None or B2 is None:
        S = abs(A1) ** 2 + abs(A2) ** 2
        T = abs(al1 * A1) ** 2 + abs(al2 * A2) ** 2
        if S == 0:
            raise DegenerateFamily("superposition needs a nonzero amplitude")
        roots = np.roots([1.0, -S, 0.0, -T])
        p0 = float(max(r.real for r in roots if abs(r.imag) < 1e-9 * max(1.0, abs(r))))
        B1 = al1 * A1 / p0 if B1 is None else complex(B1)
        B2 = al2 * A2 / p0 if B2 is None else complex(B2)
    B1, B2 = complex(B1), complex(B2)
    p0 = abs(A1) ** 2 + abs(A2) ** 2 + abs(B1) ** 2 + abs(B2) ** 2

    def ev(z):
        e1 = np.exp(al1 * (z + np.conj(z)))
        e2 = np.exp(al2 * (z - np.conj(z)))
        return A1 * e1 + A2 * e2, B1 * e1 + B2 * e2

    orth = A1 * np.conj(A2) + B1 * np.conj(B2)
    return FieldSampler("superposition",
                        {"A1": A1, "A2": A2, "alpha1": al1, "alpha2": al2, "B1": B1, "B2": B2},
                        ev, None, _never, "printed", True, (),
                        {"orthogonality": float(abs(orth)), "p0": p0})


# ---------------------------------------------------------------- bump

def make_bump(c: float, lam: float, E: float, variant: str = "printed") -> FieldSampler:
    """Separable bump-type solution with x = Re z, y = Im z.

    psi1 = D E e^{3 lam x} e^{i lam y} / (E^2 e^{4 lam x} + 1),
    psi2 = D e^{lam x} e^{i lam y} / (E^2 e^{4 lam x} + 1).
    ``printed`` uses D = 2(c+i) sqrt(lam E/(c^2+1)); ``consistent`` divides D
    by sqrt(2), the amplitude the first-order system requires.
    """
    c, lam, E = float(c), float(lam), float(E)
    rad = lam * E / (c * c + 1.0)
    if not rad > 0:
        raise DegenerateFamily(f"bump radicand lambda E/(c^2+1) = {rad:g} must be positive")
    if variant == "printed":
        D = 2.0 * (c + 1j) * math.sqrt(rad)
    elif variant == "consistent":
        D = math.sqrt(2.0) * (c + 1j) * math.sqrt(rad)
    else:
        raise BadParams(f"unknown bump variant {variant!r}")

    def ev(z):
        x, y = z.real, z.imag
        den = E * E * np.exp(4 * lam * x) + 1.0
        ph = np.exp(1j * lam * y)
        return D * E * np.exp(3 * lam * x) * ph / den, D * np.exp(lam * x) * ph / den

    notes = ()
    if variant == "printed":
        notes = ("printed bump amplitude has |D|^2 = 4 lam E; the system needs |D|^2 = 2 lam E",)
    return FieldSampler("bump", {"c": c, "lambda": lam, "E": E}, ev, None, _never, variant,
                        variant == "printed", notes, {"D": D})
