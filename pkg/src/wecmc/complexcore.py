"""Complex-plane sampling: Wirtinger finite differences, polyline quadrature, area quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyDomain, PathThroughSingularity, StencilOnSingularity

DEFAULT_H = 1e-5
GL_ORDER = 16
DEFAULT_SUBDIVISIONS = 8

ComplexField = Callable[[np.ndarray], np.ndarray]
Predicate = Callable[[np.ndarray], np.ndarray]


def as_point(z) -> complex:
    """Coerce to a finite Python complex, rejecting NaN/Inf."""
    w = complex(z)
    if not (np.isfinite(w.real) and np.isfinite(w.imag)):
        raise ValueError(f"non-finite complex point {w!r}")
    return w


def _check_finite(z: np.ndarray) -> None:
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite complex point in input")


@dataclass(frozen=True, eq=False)
class DomainGrid:
    """Rectangular node grid with an exclusion mask (True = node excluded).

    Arrays are indexed ``[iy, ix]`` so that ``Z[iy, ix] = xs[ix] + 1j*ys[iy]``.
    """

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int
    mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.nx) < 2 or int(self.ny) < 2:
            raise EmptyDomain(f"grid needs nx, ny >= 2 (got {self.nx}, {self.ny})")
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("grid bounds must be finite")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise EmptyDomain("grid has zero measure")
        m = np.zeros((self.ny, self.nx), bool) if self.mask is None else np.asarray(self.mask, bool)
        if m.shape != (self.ny, self.nx):
            raise ValueError(f"mask shape {m.shape} != {(self.ny, self.nx)}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def rect(cls, xmin, xmax, ymin, ymax, nx=40, ny=40) -> DomainGrid:
        return cls(float(xmin), float(xmax), float(ymin), float(ymax), int(nx), int(ny))

    @classmethod
    def annulus(cls, rmin, rmax, nx=40, ny=40, center=0j) -> DomainGrid:
        """Square around ``center`` with everything outside rmin <= |z-center| <= rmax masked."""
        c = complex(center)
        g = cls.rect(c.real - rmax, c.real + rmax, c.imag - rmax, c.imag + rmax, nx, ny)
        r = np.abs(g.Z - c)
        return g.with_mask((r < rmin) | (r > rmax))

    @classmethod
    def disk(cls, radius, n=401, center=0j) -> DomainGrid:
        return cls.annulus(0.0, radius, n, n, center)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.ymin, self.ymax, self.ny)

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / (self.ny - 1)

    @property
    def Z(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys)
        return X + 1j * Y

    @property
    def active(self) -> np.ndarray:
        return ~self.mask

    def with_mask(self, extra: np.ndarray) -> DomainGrid:
        return replace(self, mask=self.mask | np.asarray(extra, bool))

    def masked_for(self, singular: Predicate | None) -> DomainGrid:
        """Add nodes flagged by a singularity predicate to the mask."""
        if singular is None:
            return self
        return self.with_mask(np.asarray(singular(self.Z), bool))

    def nearest_index(self, z) -> tuple[int, int]:
        z = complex(z)
        ix = int(np.clip(np.rint((z.real - self.xmin) / self.dx), 0, self.nx - 1))
        iy = int(np.clip(np.rint((z.imag - self.ymin) / self.dy), 0, self.ny - 1))
        return iy, ix


@dataclass(frozen=True)
class PathPolyline:
    vertices: tuple[complex, ...]
    subdivisions: int = DEFAULT_SUBDIVISIONS

    def __post_init__(self):
        verts = tuple(as_point(v) for v in self.vertices)
        if len(verts) < 2:
            raise ValueError("a polyline needs at least two vertices")
        if any(a == b for a, b in zip(verts[:-1], verts[1:])):
            raise ValueError("consecutive polyline vertices must be distinct")
        if int(self.subdivisions) < 1:
            raise ValueError("subdivisions must be positive")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def staircase(cls, a, b, first: str = "x", subdivisions: int = DEFAULT_SUBDIVISIONS) -> PathPolyline:
        """Axis-parallel path a -> corner -> b; ``first`` picks which leg comes first."""
        a, b = complex(a), complex(b)
        corner = complex(b.real, a.imag) if first == "x" else complex(a.real, b.imag)
        pts = [a, corner, b]
        verts = [a] + [q for prev, q in zip(pts, pts[1:]) if q != prev]
        return cls(tuple(verts), subdivisions)

    @classmethod
    def circle(cls, center=0j, radius=1.0, n=64, subdivisions: int = DEFAULT_SUBDIVISIONS) -> PathPolyline:
        t = 2 * np.pi * np.arange(n + 1) / n
        v = complex(center) + radius * np.exp(1j * t)
        v[-1] = v[0]
        return cls(tuple(v), subdivisions)


def wirtinger(f: ComplexField, z0, h: float = DEFAULT_H, singular: Predicate | None = None):
    """Central-difference Wirtinger derivatives (d/dz, d/dzbar) of ``f`` at ``z0``.

    ``z0`` may be an array; ``f`` must accept complex arrays. If ``f`` returns a
    tuple of arrays, a list of (d, dbar) pairs is returned, one per component.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    z0 = np.asarray(z0, dtype=complex)
    _check_finite(z0)
    stencil = np.stack([z0 + h, z0 - h, z0 + 1j * h, z0 - 1j * h])
    if singular is not None and np.any(singular(stencil)):
        raise StencilOnSingularity(f"FD stencil of width {h:g} touches a singularity")
    vals = f(stencil)
    single = not isinstance(vals, tuple)
    comps = (vals,) if single else vals
    out = []
    for v in comps:
        v = np.broadcast_to(np.asarray(v, dtype=complex), stencil.shape)
        fx = (v[0] - v[1]) / (2 * h)
        fy = (v[2] - v[3]) / (2 * h)
        out.append((0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)))
    return out[0] if single else out


def laplacian(f: Callable[[np.ndarray], np.ndarray], z0, h: float) -> np.ndarray:
    """Five-point Laplacian d_xx + d_yy of a real or complex field."""
    z0 = np.asarray(z0, dtype=complex)
    c = np.asarray(f(z0))
    s = f(z0 + h) + f(z0 - h) + f(z0 + 1j * h) + f(z0 - 1j * h)
    return (s - 4 * c) / (h * h)


def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_integrals(F: ComplexField | None, G: ComplexField | None, starts, ends,
                      subdivisions: int = DEFAULT_SUBDIVISIONS, order: int = GL_ORDER,
                      singular: Predicate | None = None) -> np.ndarray:
    """Integral of F dz + G dzbar along each straight segment starts[i] -> ends[i].

    Composite Gauss-Legendre; all quadrature nodes are evaluated in one batch.
    """
    a = np.atleast_1d(np.asarray(starts, dtype=complex))
    b = np.atleast_1d(np.asarray(ends, dtype=complex))
    _check_finite(a)
    _check_finite(b)
    t, w = _gl(order)
    k = np.arange(subdivisions)[:, None]
    tt = ((k + t[None, :]) / subdivisions).ravel()
    ww = np.tile(w, subdivisions) / subdivisions
    d = (b - a)[:, None]
    z = a[:, None] + d * tt[None, :]
    if singular is not None and np.any(singular(z)):
        raise PathThroughSingularity("integration path passes through a masked singularity")
    with np.errstate(all="ignore"):
        total = np.zeros(a.shape, dtype=complex)
        if F is not None:
            fz = np.broadcast_to(np.asarray(F(z), dtype=complex), z.shape)
            total = total + (fz * ww).sum(axis=1) * d[:, 0]
        if G is not None:
            gz = np.broadcast_to(np.asarray(G(z), dtype=complex), z.shape)
            total = total + (gz * ww).sum(axis=1) * np.conj(d[:, 0])
    if not np.all(np.isfinite(total)):
        raise PathThroughSingularity("integrand is not finite along the path")
    return total


def path_integral(F: ComplexField | None, G: ComplexField | None, path: PathPolyline,
                  singular: Predicate | None = None, order: int = GL_ORDER) -> complex:
    """Line integral of F dz + G dzbar along a polyline."""
    v = np.asarray(path.vertices)
    if singular is not None and np.any(singular(v)):
        raise PathThroughSingularity("polyline vertex lies in the singularity mask")
    seg = segment_integrals(F, G, v[:-1], v[1:], path.subdivisions, order, singular)
    return complex(seg.sum())


def _blocks(n: int):
    """Split n nodes into composite Newton-Cotes blocks: list of (starts, weights)."""
    m = n - 1
    if m == 1:
        return [(np.array([0]), np.array([0.5, 0.5]))]
    simpson = np.array([1.0, 4.0, 1.0]) / 3.0
    if m % 2 == 0:
        return [(np.arange(0, m - 1, 2), simpson)]
    groups = [(np.array([m - 3]), np.array([3.0, 9.0, 9.0, 3.0]) / 8.0)]
    if m > 3:
        groups.insert(0, (np.arange(0, m - 4, 2), simpson))
    return groups


def simpson_weights(active: np.ndarray) -> np.ndarray:
    """Per-node weights (in units of dx*dy) of 2D composite Simpson over fully active blocks."""
    ny, nx = active.shape
    W = np.zeros((ny, nx))
    for sy, wy in _blocks(ny):
        for sx, wx in _blocks(nx):
            valid = np.ones((sy.size, sx.size), bool)
            for a in range(wy.size):
                for b in range(wx.size):
                    valid &= active[np.ix_(sy + a, sx + b)]
            for a in range(wy.size):
                for b in range(wx.size):
                    W[np.ix_(sy + a, sx + b)] += valid * (wy[a] * wx[b])
    return W


def area_integral(f, grid: DomainGrid) -> complex:
    """Integral of ``f`` dx dy over the unmasked part of the grid.

    ``f`` is either a callable on complex arrays (evaluated only at unmasked
    nodes) or an array of node values shaped like the grid.
    """
    act = grid.active
    W = simpson_weights(act)
    if not np.any(W > 0):
        raise EmptyDomain("no fully unmasked quadrature cell in grid")
    if callable(f):
        vals = np.zeros(act.shape, dtype=complex)
        vals[act] = np.broadcast_to(np.asarray(f(grid.Z[act]), dtype=complex), (int(act.sum()),))
    else:
        vals = np.where(act, np.asarray(f, dtype=complex), 0)
    return complex(np.sum(W * vals) * grid.dx * grid.dy)


def stats_over(values: np.ndarray, grid: DomainGrid):
    """(max_abs, rms, argmax point, count) of |values| over unmasked nodes."""
    act = grid.active
    n = int(act.sum())
    if n == 0:
        raise EmptyDomain("all grid nodes are masked")
    a = np.where(act, np.abs(values), -np.inf)
    idx = np.unravel_index(int(np.argmax(a)), a.shape)
    mx = float(a[idx])
    rms = float(np.sqrt(np.mean(np.abs(values[act]) ** 2)))
    return mx, rms, complex(grid.Z[idx]), n
