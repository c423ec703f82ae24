"""Induced surface: immersion integrals, metric factor and curvature, topological charge, implicit fits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from .complexcore import (DEFAULT_H, DEFAULT_SUBDIVISIONS, GL_ORDER, DomainGrid, PathPolyline,
                          area_integral, as_point, laplacian, path_integral, segment_integrals,
                          stats_over)
from .errors import EmptyDomain, LeakageExceeded, PathThroughSingularity, RankDeficient, TailTooLarge
from .families import FieldSampler
from .special import erf_complex
from .verification import ResidualStats, current, outer_step, prepare_grid

IMMERSION_TOL = 1e-6


def _integrands(f: FieldSampler):
    """(F, G) pairs for X1+iX2, X1-iX2 and X3."""
    def P_F(z):
        return 2j * np.conj(f(z)[0]) ** 2

    def P_G(z):
        return -2j * np.conj(f(z)[1]) ** 2

    def M_F(z):
        return 2j * f(z)[1] ** 2

    def M_G(z):
        return -2j * f(z)[0] ** 2

    def X3_F(z):
        a, b = f(z)
        return -2 * np.conj(a) * b

    def X3_G(z):
        a, b = f(z)
        return -2 * a * np.conj(b)

    return (P_F, P_G), (M_F, M_G), (X3_F, X3_G)


def _realize(P, M, X3):
    """Real coordinates from the two complex combinations, plus the discarded imaginary parts."""
    X1 = 0.5 * (P + M)
    X2 = (P - M) / 2j
    X = np.stack([X1.real, X2.real, np.real(X3)], axis=-1)
    leak = np.maximum(np.abs(P - np.conj(M)), np.abs(np.imag(X3)))
    return X, leak


@dataclass(frozen=True)
class Immersion:
    X: np.ndarray
    leakage: float
    path_mismatch: float


def immerse_point(f: FieldSampler, base, z, path: PathPolyline | None = None,
                  tol: float = IMMERSION_TOL, h: float = DEFAULT_H) -> Immersion:
    """Position of z on the surface relative to ``base``.

    Without an explicit path two staircases (x-leg first, y-leg first) are
    integrated; their disagreement counts towards the leakage.
    """
    base, z = as_point(base), as_point(z)
    if base == z:
        return Immersion(np.zeros(3), 0.0, 0.0)
    pred = f.predicate(10 * h)
    paths = [path] if path is not None else [PathPolyline.staircase(base, z, "x")]
    if path is None:
        alt = PathPolyline.staircase(base, z, "y")
        if alt.vertices != paths[0].vertices:
            paths.append(alt)
    results = []
    for pth in paths:
        if pth.vertices[0] != base or pth.vertices[-1] != z:
            raise ValueError("path must run from base to z")
        vals = [path_integral(F, G, pth, singular=pred) for F, G in _integrands(f)]
        X, leak = _realize(np.asarray(vals[0]), np.asarray(vals[1]), np.asarray(vals[2]))
        results.append((X, float(leak)))
    X0, leak0 = results[0]
    mismatch = max((float(np.max(np.abs(X - X0))) for X, _ in results[1:]), default=0.0)
    leakage = max(leak0, mismatch)
    if leakage > tol:
        raise LeakageExceeded(leakage, tol)
    return Immersion(X0, leakage, mismatch)


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    grid: DomainGrid
    points: np.ndarray        # (ny, nx, 3), NaN at masked nodes
    p: np.ndarray             # (ny, nx)
    K: np.ndarray             # (ny, nx)
    base: complex
    imag_leakage: float
    meta: dict = field(default_factory=dict)

    @property
    def active(self) -> np.ndarray:
        return self.grid.active

    def K_stats(self) -> tuple[float, float]:
        k = self.K[self.active & np.isfinite(self.K)]
        if k.size == 0:
            raise EmptyDomain("no curvature samples")
        return float(np.mean(k)), float(np.std(k))

    def obj_text(self) -> str:
        act = self.active
        idx = -np.ones(act.shape, int)
        idx[act] = np.arange(1, int(act.sum()) + 1)
        lines = [f"v {x:.17g} {y:.17g} {w:.17g}" for x, y, w in self.points[act]]
        a = idx[:-1, :-1]
        b = idx[:-1, 1:]
        c = idx[1:, 1:]
        d = idx[1:, :-1]
        ok = (a > 0) & (b > 0) & (c > 0) & (d > 0)
        for i, j, k, l in zip(a[ok], b[ok], c[ok], d[ok]):
            lines.append(f"f {i} {j} {k}")
            lines.append(f"f {i} {k} {l}")
        return "\n".join(lines) + "\n"

    def csv_text(self) -> str:
        rows = ["x,y,X1,X2,X3,p,K,masked"]
        Z = self.grid.Z
        for iy in range(self.grid.ny):
            for ix in range(self.grid.nx):
                z = Z[iy, ix]
                X = self.points[iy, ix]
                vals = (z.real, z.imag, X[0], X[1], X[2], self.p[iy, ix], self.K[iy, ix])
                rows.append(",".join(f"{v:.17g}" for v in vals) + f",{int(self.grid.mask[iy, ix])}")
        return "\n".join(rows) + "\n"

    def summary(self, family: str, params: dict, charge: float | None = None) -> dict:
        km, ks = self.K_stats()
        out = {"family": family, "params": params, "base": [self.base.real, self.base.imag],
               "K_mean": km, "K_std": ks, "leakage": float(self.imag_leakage)}
        if charge is not None:
            out["charge"] = float(charge)
        return out

    def write(self, outdir, stem: str, family: str, params: dict, charge: float | None = None) -> list[Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        files = [out / f"{stem}.obj", out / f"{stem}.csv", out / f"{stem}.json"]
        files[0].write_text(self.obj_text())
        files[1].write_text(self.csv_text())
        files[2].write_text(json.dumps(self.summary(family, params, charge), indent=2, sort_keys=True) + "\n")
        return files


def curvature(f: FieldSampler, z, step: float) -> np.ndarray:
    """K = -p^{-2} d dbar ln p with d dbar = Laplacian / 4."""
    z = np.asarray(z, dtype=complex)

    def lnp(w):
        return np.log(f.p(w))

    return -laplacian(lnp, z, step).real / (4.0 * f.p(z) ** 2)


def immerse_patch(f: FieldSampler, base, grid: DomainGrid, h: float = DEFAULT_H,
                  tol: float = IMMERSION_TOL, subdivisions: int = DEFAULT_SUBDIVISIONS,
                  enforce: bool = True) -> SurfacePatch:
    """Immersion of every reachable grid node.

    All grid edges are integrated with composite Gauss-Legendre in one batch;
    node positions are accumulated along a breadth-first spanning tree rooted at
    the node nearest ``base``. The leakage is the larger of the conjugacy
    defect and the worst circulation around a grid cell (zero for a solution).
    """
    base = as_point(base)
    kstep = outer_step(h)
    if np.any(f.singular(np.array([base]), 10 * h)):
        raise PathThroughSingularity("base point lies on a singularity")
    g = prepare_grid(f, grid, 10 * kstep)
    ny, nx = g.ny, g.nx
    Z = g.Z
    act = g.active
    nid = np.arange(ny * nx).reshape(ny, nx)
    integ = _integrands(f)

    def edges(a_idx, b_idx):
        za, zb = Z.ravel()[a_idx], Z.ravel()[b_idx]
        valid = act.ravel()[a_idx] & act.ravel()[b_idx]
        length = np.abs(zb - za)
        # flag edges passing within a fraction of a quadrature gap of a singularity or cut
        t = np.linspace(0, 1, 4 * subdivisions * 4 + 1)
        pts = za[:, None] + (zb - za)[:, None] * t[None, :]
        r = float(np.max(length)) / (len(t) - 1)
        bad = np.any(f.singular(pts, r), axis=1)
        valid &= ~bad
        vals = np.full((3, a_idx.size), np.nan, dtype=complex)
        if np.any(valid):
            for c, (F, G) in enumerate(integ):
                vals[c, valid] = segment_integrals(F, G, za[valid], zb[valid], subdivisions)
        return valid, vals

    ha, hb = nid[:, :-1].ravel(), nid[:, 1:].ravel()
    va, vb = nid[:-1, :].ravel(), nid[1:, :].ravel()
    hvalid, hvals = edges(ha, hb)
    vvalid, vvals = edges(va, vb)

    # circulation around each cell with four valid edges
    Hv = hvals.reshape(3, ny, nx - 1)
    Vv = vvals.reshape(3, ny - 1, nx)
    circ = Hv[:, :-1, :] + Vv[:, :, 1:] - Hv[:, 1:, :] - Vv[:, :, :-1]
    cell_ok = (hvalid.reshape(ny, nx - 1)[:-1] & hvalid.reshape(ny, nx - 1)[1:]
               & vvalid.reshape(ny - 1, nx)[:, :-1] & vvalid.reshape(ny - 1, nx)[:, 1:])
    circ_max = float(np.max(np.abs(circ[:, cell_ok]))) if np.any(cell_ok) else 0.0

    # root: active node nearest the base, joined by a staircase
    cand = np.where(act.ravel())[0]
    if cand.size == 0:
        raise EmptyDomain("no unmasked node")
    zr = Z.ravel()[cand]
    order = np.lexsort((zr.imag, zr.real, np.abs(zr - base)))
    root = int(cand[order[0]])
    zroot = complex(Z.ravel()[root])
    if zroot != base:
        pth = PathPolyline.staircase(base, zroot, "x", subdivisions)
        pred = f.predicate(10 * h)
        rootvals = np.array([path_integral(F, G, pth, singular=pred) for F, G in integ])
    else:
        rootvals = np.zeros(3, dtype=complex)

    src = np.concatenate([ha[hvalid], va[vvalid]])
    dst = np.concatenate([hb[hvalid], vb[vvalid]])
    n = ny * nx
    adj = coo_matrix((np.ones(2 * src.size), (np.concatenate([src, dst]), np.concatenate([dst, src]))),
                     shape=(n, n)).tocsr()
    visit, pred_arr = breadth_first_order(adj, root, directed=False, return_predecessors=True)

    # edge value lookup: (u -> v) integral
    lookup = {}
    for arr_a, arr_b, valid, vals in ((ha, hb, hvalid, hvals), (va, vb, vvalid, vvals)):
        for e in np.where(valid)[0]:
            lookup[(int(arr_a[e]), int(arr_b[e]))] = vals[:, e]

    acc = np.full((n, 3), np.nan, dtype=complex)
    acc[root] = rootvals
    for node in visit[1:]:
        par = int(pred_arr[node])
        e = lookup.get((par, int(node)))
        acc[node] = acc[par] + (e if e is not None else -lookup[(int(node), par)])

    reached = np.zeros(n, bool)
    reached[visit] = True
    final_mask = g.mask | ~reached.reshape(ny, nx)
    g2 = g.with_mask(final_mask)
    acc = acc.reshape(ny, nx, 3)
    X, leak = _realize(acc[..., 0], acc[..., 1], acc[..., 2])
    X[final_mask] = np.nan
    conj_leak = float(np.max(leak[~final_mask])) if np.any(~final_mask) else 0.0
    leakage = max(conj_leak, circ_max)

    p = np.full((ny, nx), np.nan)
    K = np.full((ny, nx), np.nan)
    za = Z[~final_mask]
    p[~final_mask] = f.p(za)
    K[~final_mask] = curvature(f, za, kstep)
    if np.any(p[~final_mask] <= 0):
        raise EmptyDomain("metric factor vanishes on the patch")
    patch = SurfacePatch(g2, X, p, K, base, leakage,
                         {"circulation": circ_max, "conjugacy": conj_leak,
                          "unreached": int(np.sum(act & ~reached.reshape(ny, nx)))})
    if enforce and leakage > tol:
        err = LeakageExceeded(leakage, tol)
        err.patch = patch
        raise err
    return patch


@dataclass(frozen=True)
class ChargeResult:
    value: float
    imag_leakage: float
    tail: float
    radius: float
    nodes: int

    @property
    def rounding_distance(self) -> float:
        return abs(self.value - round(self.value))


def charge_density(f: FieldSampler, z, h: float = DEFAULT_H) -> np.ndarray:
    """Integrand -(1/pi) p^{-2} (|j|^2 - p^4) of the charge in the dx dy measure."""
    z = np.asarray(z, dtype=complex)
    p = f.p(z)
    j = current(f, z, h, continuation=True)
    return -(np.abs(j) ** 2 - p ** 4) / (np.pi * p ** 2)


def topological_charge(f: FieldSampler, grid: DomainGrid, h: float = DEFAULT_H,
                       tail_tol: float | None = None) -> ChargeResult:
    """Charge over the unmasked grid with measure dz dzbar = -2i dx dy.

    The tail beyond the grid is estimated from the outermost ring of unmasked
    nodes assuming |z|^-4 decay: tail ~ pi R^2 * mean ring density.
    """
    g = prepare_grid(f, grid, 10 * h, cuts=False)
    act = g.active
    Z = g.Z
    dens = np.zeros(act.shape, dtype=complex)
    dens[act] = charge_density(f, Z[act], h)
    total = area_integral(dens, g)
    c = 0.5 * complex(g.xmin + g.xmax, g.ymin + g.ymax)
    r = np.abs(Z - c)
    R = float(np.max(r[act]))
    ring = act & (r >= R - 2.0 * max(g.dx, g.dy))
    tail = float(np.pi * R * R * np.mean(np.abs(dens[ring]))) if np.any(ring) else float("inf")
    res = ChargeResult(total.real, abs(total.imag), tail, R, int(act.sum()))
    if tail_tol is not None and tail > tail_tol:
        raise TailTooLarge(tail, tail_tol)
    return res


def charge_auto(f: FieldSampler, tol: float = 5e-3, r0: float = 5.0, rmax: float = 40.0,
                spacing: float = 0.05, h: float = DEFAULT_H, center=0j) -> ChargeResult:
    """Double the disk radius until the tail estimate is below ``tol``."""
    R = r0
    while True:
        n = int(2 * R / spacing) | 1
        res = topological_charge(f, DomainGrid.disk(R, n, center), h)
        if res.tail < tol or R >= rmax:
            if res.tail >= tol:
                raise TailTooLarge(res.tail, tol)
            return res
        R *= 2.0


# ---------------------------------------------------------------- implicit surfaces

@dataclass(frozen=True)
class ImplicitSurfaceSpec:
    kind: str
    params: dict = field(default_factory=dict)

    REQUIRED = {
        "enneper-cubic": ("a", "b"),
        "catenoid-quadric": ("a_r",),
        "bump-catenoid": ("c", "lambda", "A"),
        "revolution-curve": ("reading",),
        "sphere": ("radius",),
    }

    def __post_init__(self):
        if self.kind not in self.REQUIRED:
            raise ValueError(f"unknown implicit surface kind {self.kind!r}")
        missing = [k for k in self.REQUIRED[self.kind] if k not in self.params]
        if missing:
            raise ValueError(f"{self.kind} needs parameters {missing}")

    def F(self, X: np.ndarray) -> np.ndarray:
        X1, X2, X3 = X[..., 0], X[..., 1], X[..., 2]
        P = self.params
        if self.kind == "enneper-cubic":
            a, b = P["a"], P["b"]
            return (X2 ** 3 + X1 ** 2 * X2 + X2 * X3 ** 2 + 4 * (b - a) * (X1 ** 2 + X2 ** 2 + X3 ** 2)
                    + 4 * (a - b) ** 2 * X2)
        if self.kind == "catenoid-quadric":
            ar = P["a_r"]
            s = np.sqrt(max(1 - ar * ar, 0.0))
            return 4 * (1 - ar ** 2) * X1 ** 2 + 4 * ar ** 2 * X2 ** 2 + 8 * ar * s * X1 * X2 + 4 * X3 ** 2
        if self.kind == "bump-catenoid":
            c, lam, A = P["c"], P["lambda"], P["A"]
            coef = 4 * (lam / A) ** 2 * ((c - 1) ** 2 + 4 * c * c) * (1 + 1 / (2 * lam)) ** 2
            return X1 ** 2 + X2 ** 2 - coef * (4 - X3) * X3
        if self.kind == "revolution-curve":
            t = X3 / 4.0 if P["reading"] == "quarter" else X3
            rho2 = X1 ** 2 + X2 ** 2
            # rho = 2(2t-1) sqrt(t/(1-t)) squared and cleared of the denominator
            return rho2 * (1 - t) - 4 * (2 * t - 1) ** 2 * t
        R = P["radius"]
        return X1 ** 2 + X2 ** 2 + X3 ** 2 - R * R

    def normalized(self, X: np.ndarray, step: float = 1e-6) -> np.ndarray:
        """F / |grad F| with a central-difference gradient."""
        grad = np.zeros(X.shape)
        for i in range(3):
            e = np.zeros(3)
            e[i] = step * max(1.0, float(np.nanmax(np.abs(X))))
            grad[..., i] = (self.F(X + e) - self.F(X - e)) / (2 * e[i])
        gn = np.linalg.norm(grad, axis=-1)
        return self.F(X) / np.where(gn > 0, gn, np.inf)


def _split(patch: SurfacePatch):
    flat = np.where(patch.active.ravel())[0]
    calib = flat[::4]
    held = np.setdiff1d(flat, calib)
    return calib, held


@dataclass(frozen=True)
class Calibration:
    offset: np.ndarray
    fit_residual: float
    flagged: bool


def calibrate_translation(patch: SurfacePatch, spec: ImplicitSurfaceSpec, flag_tol: float = 1e-3) -> Calibration:
    """Least-squares translation (every fourth unmasked node) minimizing the normalized implicit residual."""
    calib, _ = _split(patch)
    if calib.size < 3 or int(patch.active.sum()) < 10:
        raise EmptyDomain("need at least 10 unmasked nodes")
    pts = patch.points.reshape(-1, 3)[calib]
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[0] == 0 or sv[1] < 1e-9 * sv[0]:
        raise RankDeficient("calibration points degenerate to a point or curve")

    def resid(o):
        return spec.normalized(pts + o)

    starts = [np.zeros(3), -pts.mean(axis=0)]
    best = None
    for x0 in starts:
        sol = optimize.least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        if best is None or sol.cost < best.cost:
            best = sol
    J = best.jac
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0 or s[-1] < 1e-10 * s[0]:
        raise RankDeficient("translation is not determined by the implicit equation on these points")
    rms = float(np.sqrt(np.mean(best.fun ** 2)))
    return Calibration(best.x, rms, rms > flag_tol)


def implicit_residual(patch: SurfacePatch, spec: ImplicitSurfaceSpec, offset) -> ResidualStats:
    """Normalized implicit residual on the held-out 75% of unmasked nodes."""
    _, held = _split(patch)
    if held.size == 0:
        raise EmptyDomain("no held-out nodes")
    vals = np.zeros(patch.grid.mask.size)
    vals[held] = spec.normalized(patch.points.reshape(-1, 3)[held] + np.asarray(offset, float))
    mask = np.ones(patch.grid.mask.size, bool)
    mask[held] = False
    g = patch.grid.with_mask(mask.reshape(patch.grid.mask.shape))
    mx, rms, arg, n = stats_over(vals.reshape(g.mask.shape), g)
    return ResidualStats(mx, rms, arg, n)


# ---------------------------------------------------------------- printed closed-form surfaces

def rational_closed_form(m: int, z) -> np.ndarray:
    """Printed parametrization of the rational-family surface."""
    z = np.asarray(z, dtype=complex)
    r2m = np.abs(z) ** (2 * m)
    ratio = (1 - r2m) / (1 + r2m)
    P = 2j * z ** (-m) * ratio
    M = -2j * np.conj(z) ** (-m) * ratio
    X3 = 4 / (1 + r2m)
    return np.stack([(0.5 * (P + M)).real, ((P - M) / 2j).real, X3], axis=-1)


def one_soliton_closed_form(a: float, b: float, z) -> np.ndarray:
    """Printed parametrization of the one-soliton surface."""
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    D = ((2 * z - a - b) * zb - a * (z - a) - b * (z - b)) * (2 * z - a - b)
    Db = ((2 * zb - a - b) * z - a * (zb - a) - b * (zb - b)) * (2 * zb - a - b)
    c = (a - b) ** 2
    P = 2j * c * (-(zb - a) ** 2 / Db + (z - b) ** 2 / D)
    M = 2j * c * (-(zb - b) ** 2 / Db + (z - a) ** 2 / D)
    X3 = -2 * c * (-(zb - a) * (zb - b) / Db - (z - a) * (z - b) / D)
    return np.stack([(0.5 * (P + M)).real, ((P - M) / 2j).real, X3.real], axis=-1)


def exponential_closed_form(q: float, a: complex, z) -> np.ndarray:
    """Printed erf parametrization for the exponential family (complex components returned)."""
    z = np.asarray(z, dtype=complex)
    xi = np.sqrt(-2j * q)
    eta = np.sqrt(2j * q)
    zb = np.conj(z)
    t1 = erf_complex(xi * z) / (np.exp(2j * q * zb ** 2) * xi)
    t2 = np.exp(2j * q * z ** 2) * erf_complex(eta * zb) / eta
    a = complex(a)
    P = -1j * np.sqrt(np.pi) * (t1 + np.conj(a) ** 2 * t2)
    M = 1j * np.sqrt(np.pi) * (a ** 2 * t1 + t2)
    X3 = -1j * np.sqrt(np.pi) * (t1 + np.conj(a) * t2)
    return np.stack([0.5 * (P + M), (P - M) / 2j, X3], axis=-1)
