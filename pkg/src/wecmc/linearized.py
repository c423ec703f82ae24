"""Fields from the linear system obtained when p depends only on s = z + eps zbar.

Given a profile s -> (p, dp/ds) and a constant current j, the eight first-order
equations for (psi1, psi2, conj psi1, conj psi2) are marched with RK4, first
along the grid row through the base point and then up and down every column.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .complexcore import DomainGrid
from .errors import InconsistentProfile, InconsistentSeed, ProfileVanishes
from .families import FieldSampler
from .painleve import profile_derivative

SEED_TOL = 1e-10
PROFILE_TOL = 1e-8

Profile = Callable[[np.ndarray], tuple]


def constant_profile(p0: float) -> Profile:
    def prof(s):
        s = np.asarray(s, dtype=complex)
        return np.full(s.shape, p0, dtype=complex), np.zeros(s.shape, dtype=complex)
    return prof


def reduced_rhs(p, pd, eps, A, reduced: str = "printed"):
    """p'' demanded of the profile.

    ``printed``: p'^2/p - eps A/p + eps p^3. ``compatible``: p'^2/p + eps A/p - eps p^3,
    the sign pattern that the cross-derivative condition of the marched
    system actually imposes (d dbar psi1 = dbar d psi1 worked out by hand).
    """
    sgn = {"printed": 1, "compatible": -1}.get(reduced)
    if sgn is None:
        raise ValueError("reduced must be 'printed' or 'compatible'")
    return pd ** 2 / p - sgn * eps * A / p + sgn * eps * p ** 3


def check_profile(profile: Profile, eps: int, A: float, s, tol: float = PROFILE_TOL,
                  h: float = 1e-3, reduced: str = "printed") -> float:
    """Largest normalised defect of p' and of p'' (see :func:`reduced_rhs`) at the samples."""
    s = np.asarray(s, dtype=complex).ravel()
    p, pd = profile(s)

    def pfun(t):
        return profile(t)[0]

    def pdfun(t):
        return profile(t)[1]

    d1 = np.abs(profile_derivative(pfun, s, h) - pd) / (1 + np.abs(pd))
    pdd = profile_derivative(pdfun, s, h)
    target = reduced_rhs(p, pd, eps, A, reduced)
    d2 = np.abs(pdd - target) / (1 + np.abs(pdd) + np.abs(target))
    worst = float(np.max(np.concatenate([d1, d2])))
    if not np.isfinite(worst) or worst >= tol:
        raise InconsistentProfile(f"profile does not solve the reduced equation: defect {worst:.3e}")
    return worst


def _derivs(U, p, pd, eps, j):
    """(d U, dbar U) for U = (psi1, psi2, conj psi1, conj psi2)."""
    a, b, c, d = U
    jb = np.conj(j)
    dU = np.array([p * b, (b * pd + a * j) / p, (c * pd - d * j) / p, -p * c])
    dbU = np.array([(eps * pd * a - b * jb) / p, -p * a, p * d, (eps * pd * d + c * jb) / p])
    return dU, dbU


def _march(U0, z0, direction, steps, profile, eps, j):
    """RK4 from z0 to z0 + direction for a batch of starting points; U has shape (4, m)."""
    U = np.array(U0, dtype=complex)
    z0 = np.asarray(z0, dtype=complex)
    ht = 1.0 / steps

    def rhs(t, U):
        z = z0 + t * direction
        p, pd = profile(z + eps * np.conj(z))
        p = np.asarray(p, dtype=complex)
        if np.any(~(p.real > 0)):
            raise ProfileVanishes(f"p <= 0 reached while marching near z = {complex(z.ravel()[0]):.6g}")
        dU, dbU = _derivs(U, p, np.asarray(pd, dtype=complex), eps, j)
        # chain rule along the segment: d/dt = direction d + conj(direction) dbar
        return dU * direction + dbU * np.conj(direction)

    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, U)
        k2 = rhs(t + ht / 2, U + ht / 2 * k1)
        k3 = rhs(t + ht / 2, U + ht / 2 * k2)
        k4 = rhs(t + ht, U + ht * k3)
        U = U + ht / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += ht
    return U


def _sweep(lines, start, U0, step_vec, substeps, profile, eps, j):
    """March a batch of parallel node lines outward from index ``start``.

    ``lines`` has shape (n, m): n nodes along each of m lines; U0 is (4, m).
    Returns (n, 4, m).
    """
    n = lines.shape[0]
    out = np.empty((n,) + np.shape(U0), dtype=complex)
    out[start] = U0
    for idx, sign in ((range(start + 1, n), 1), (range(start - 1, -1, -1), -1)):
        U, prev = U0, start
        for i in idx:
            U = _march(U, lines[prev], sign * step_vec, substeps, profile, eps, j)
            out[i] = U
            prev = i
    return out


def _march_grid(grid, ix0, iy0, U0, substeps, profile, eps, j, x_first=True):
    """Field values (ny, nx, 4) from one marching order."""
    Z = grid.Z
    dx, dy = grid.dx, 1j * grid.dy
    U0 = np.asarray(U0, dtype=complex)[:, None]
    if x_first:
        row = _sweep(Z[iy0, :][:, None], ix0, U0, dx, substeps, profile, eps, j)[:, :, 0]
        cols = _sweep(Z, iy0, row.T, dy, substeps, profile, eps, j)   # (ny, 4, nx)
        return np.transpose(cols, (0, 2, 1))
    col = _sweep(Z[:, ix0][:, None], iy0, U0, dy, substeps, profile, eps, j)[:, :, 0]
    rows = _sweep(Z.T, ix0, col.T, dx, substeps, profile, eps, j)    # (nx, 4, ny)
    return np.transpose(rows, (2, 0, 1))


def _bilinear(grid: DomainGrid, values: np.ndarray):
    xs, ys = grid.xs, grid.ys

    def interp(z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        fx = (x - xs[0]) / grid.dx
        fy = (y - ys[0]) / grid.dy
        inside = (fx >= -1e-9) & (fx <= len(xs) - 1 + 1e-9) & (fy >= -1e-9) & (fy <= len(ys) - 1 + 1e-9)
        i = np.clip(np.floor(fx).astype(int), 0, len(xs) - 2)
        k = np.clip(np.floor(fy).astype(int), 0, len(ys) - 2)
        tx = fx - i
        ty = fy - k
        v = ((1 - tx) * (1 - ty))[..., None] * values[k, i] + (tx * (1 - ty))[..., None] * values[k, i + 1] \
            + ((1 - tx) * ty)[..., None] * values[k + 1, i] + (tx * ty)[..., None] * values[k + 1, i + 1]
        return np.where(inside[..., None], v, np.nan)
    return interp


def _spline(grid: DomainGrid, values: np.ndarray):
    from scipy.interpolate import RectBivariateSpline

    parts = [RectBivariateSpline(grid.ys, grid.xs, f(values[..., c]), kx=3, ky=3)
             for c in range(values.shape[-1]) for f in (np.real, np.imag)]

    def interp(z):
        z = np.asarray(z, dtype=complex)
        y, x = z.imag.ravel(), z.real.ravel()
        inside = (x >= grid.xmin) & (x <= grid.xmax) & (y >= grid.ymin) & (y <= grid.ymax)
        cols = [parts[2 * c](y, x, grid=False) + 1j * parts[2 * c + 1](y, x, grid=False)
                for c in range(values.shape[-1])]
        v = np.stack(cols, axis=-1)
        v[~inside] = np.nan
        return v.reshape(z.shape + (values.shape[-1],))
    return interp


def _padded(grid: DomainGrid) -> DomainGrid:
    return DomainGrid.rect(grid.xmin - grid.dx, grid.xmax + grid.dx, grid.ymin - grid.dy,
                           grid.ymax + grid.dy, grid.nx + 2, grid.ny + 2)


def integrate_linearized(profile: Profile, eps: int, j: complex, seed, grid: DomainGrid,
                         base=None, A: float | None = None, max_step: float = 0.0125,
                         check: bool = True, reduced: str = "printed",
                         interpolation: str = "bilinear") -> FieldSampler:
    """March the linear system over ``grid`` from ``seed`` at the grid node nearest ``base``.

    ``seed`` is (psi1, psi2) or (psi1, psi2, conj psi1, conj psi2). Marching
    covers the grid plus one ring of cells so that difference stencils at the
    edge stay defined. The sampler interpolates bilinearly between nodes
    (``interpolation="cubic"`` uses a bicubic spline instead). ``meta`` records the
    cross-path discrepancy (y-then-x marching against x-then-y), the
    conjugation mismatch between marched psi and marched conj psi, and the
    largest deviation of |psi1|^2 + |psi2|^2 from p(s).
    """
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    j = complex(j)
    A = abs(j) ** 2 if A is None else float(A)
    if abs(A - abs(j) ** 2) > 1e-12 * max(1.0, A):
        raise InconsistentProfile(f"|j|^2 = {abs(j) ** 2:.6g} differs from A = {A:.6g}")
    seed = tuple(complex(v) for v in seed)
    if len(seed) == 2:
        seed = seed + (np.conj(seed[0]), np.conj(seed[1]))
    if len(seed) != 4:
        raise ValueError("seed must have 2 or 4 components")
    if abs(seed[2] - np.conj(seed[0])) > SEED_TOL or abs(seed[3] - np.conj(seed[1])) > SEED_TOL:
        raise InconsistentSeed("conjugate seed components are not conjugates")
    if interpolation not in ("bilinear", "cubic"):
        raise ValueError("interpolation must be 'bilinear' or 'cubic'")
    z0 = complex(grid.Z.flat[0]) if base is None else complex(base)
    grid = _padded(grid)
    iy0, ix0 = grid.nearest_index(z0)
    zb = complex(grid.Z[iy0, ix0])
    s_all = grid.Z + eps * np.conj(grid.Z)
    P_all, _ = profile(s_all)
    if np.any(np.real(P_all) <= 0) or not np.all(np.isfinite(P_all)):
        raise ProfileVanishes("profile is not positive on the grid")
    if check:
        check_profile(profile, eps, A, np.unique(np.round(s_all, 12)), reduced=reduced)
    p_base = complex(profile(np.asarray(zb + eps * np.conj(zb)))[0])
    dens = abs(seed[0]) ** 2 + abs(seed[1]) ** 2
    if abs(dens - p_base) > SEED_TOL:
        raise InconsistentSeed(f"|psi1|^2 + |psi2|^2 = {dens:.12g} but p(s0) = {p_base.real:.12g}")

    U0 = np.array(seed)
    substeps = max(1, int(np.ceil(max(grid.dx, grid.dy) / max_step)))
    vals = _march_grid(grid, ix0, iy0, U0, substeps, profile, eps, j, x_first=True)
    alt = _march_grid(grid, ix0, iy0, U0, substeps, profile, eps, j, x_first=False)
    cross = float(np.max(np.abs(vals - alt)))
    conj_gap = float(max(np.max(np.abs(vals[..., 2] - np.conj(vals[..., 0]))),
                         np.max(np.abs(vals[..., 3] - np.conj(vals[..., 1])))))
    dens_gap = float(np.max(np.abs(np.abs(vals[..., 0]) ** 2 + np.abs(vals[..., 1]) ** 2 - P_all)))
    interp = _bilinear(grid, vals) if interpolation == "bilinear" else _spline(grid, vals)

    def ev(z):
        v = interp(z)
        return v[..., 0], v[..., 1]

    meta = {"cross_path": cross, "conjugation_gap": conj_gap, "density_gap": dens_gap,
            "base_node": [zb.real, zb.imag], "nodes": vals, "grid": grid}
    return FieldSampler("linearized", {"eps": eps, "j": j, "A": A}, ev, variant="marched", meta=meta)
