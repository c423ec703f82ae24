import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wecmc.complexcore import (DomainGrid, PathPolyline, area_integral, laplacian, path_integral,
                               simpson_weights, stats_over, wirtinger)
from wecmc.errors import EmptyDomain, PathThroughSingularity, StencilOnSingularity

finite = st.floats(-2, 2, allow_nan=False)


def test_wirtinger_of_monomials():
    z0 = np.array([0.3 + 0.7j, -1.1 + 0.2j])
    d, db = wirtinger(lambda z: z ** 3, z0, 1e-5)
    assert np.allclose(d, 3 * z0 ** 2, atol=1e-8)
    assert np.allclose(db, 0, atol=1e-8)
    d, db = wirtinger(lambda z: z * np.conj(z), z0, 1e-5)
    assert np.allclose(d, np.conj(z0), atol=1e-9)
    assert np.allclose(db, z0, atol=1e-9)


def test_wirtinger_tuple_fields():
    (d1, db1), (d2, db2) = wirtinger(lambda z: (z ** 2, np.conj(z) ** 2), 0.5 + 0.5j)
    assert abs(d1 - (1 + 1j)) < 1e-8 and abs(db1) < 1e-8
    assert abs(d2) < 1e-8 and abs(db2 - (1 - 1j)) < 1e-8


def test_wirtinger_refuses_singular_stencil():
    with pytest.raises(StencilOnSingularity):
        wirtinger(lambda z: 1 / z, 1e-6, 1e-5, singular=lambda z: np.abs(z) < 1e-4)


@given(finite, finite, st.floats(0.1, 3))
@settings(max_examples=40, deadline=None)
def test_holomorphic_fields_have_zero_dbar(x, y, c):
    _, db = wirtinger(lambda z: np.exp(c * z) + z ** 2, complex(x, y), 1e-5)
    assert abs(db) < 1e-7 * (1 + np.exp(c * abs(x)) * c)


def test_laplacian_of_quadratic():
    lap = laplacian(lambda z: np.abs(z) ** 2, np.array([0.2 + 0.1j, 3 - 1j]), 1e-3)
    assert np.allclose(lap, 4.0, atol=1e-6)


def test_grid_geometry_and_errors():
    g = DomainGrid.rect(-1, 1, 0, 2, 5, 3)
    assert g.Z.shape == (3, 5)
    assert g.Z[2, 4] == 1 + 2j
    assert g.dx == pytest.approx(0.5) and g.dy == pytest.approx(1.0)
    with pytest.raises(EmptyDomain):
        DomainGrid.rect(0, 0, 0, 1, 5, 5)
    with pytest.raises(EmptyDomain):
        DomainGrid.rect(0, 1, 0, 1, 1, 5)
    ann = DomainGrid.annulus(0.5, 1.0, 41, 41)
    r = np.abs(ann.Z[ann.active])
    assert r.min() >= 0.5 and r.max() <= 1.0


def test_staircase_and_circle_paths():
    p = PathPolyline.staircase(0.5, 1 + 1j, first="x")
    assert list(p.vertices) == [0.5, 1 + 0j, 1 + 1j]
    q = PathPolyline.staircase(0.5, 1 + 1j, first="y")
    assert list(q.vertices) == [0.5, 0.5 + 1j, 1 + 1j]
    c = PathPolyline.circle(0, 2.0, n=16)
    assert np.allclose(np.abs(np.asarray(c.vertices)), 2.0)


def test_path_integral_oracles():
    # integral of z^2 dz from 0 to 1+i is (1+i)^3/3 on any path
    path = PathPolyline.staircase(0, 1 + 1j)
    assert abs(path_integral(lambda z: z ** 2, None, path) - (1 + 1j) ** 3 / 3) < 1e-13
    # dzbar part: integral of 1 dzbar = conj(b - a)
    assert abs(path_integral(None, lambda z: np.ones_like(z), path) - (1 - 1j)) < 1e-13
    # winding: contour integral of dz/z around the origin is 2 pi i
    loop = PathPolyline.circle(0, 1.0, n=64)
    assert abs(path_integral(lambda z: 1 / z, None, loop) - 2j * np.pi) < 1e-5


def test_path_through_singularity_is_refused():
    with pytest.raises(PathThroughSingularity):
        path_integral(lambda z: 1 / z, None, PathPolyline.staircase(-1, 1),
                      singular=lambda z: np.abs(z) < 0.05)


def test_simpson_is_exact_for_cubics():
    g = DomainGrid.rect(0, 2, -1, 1, 9, 7)
    val = area_integral(lambda z: z.real ** 3 * z.imag ** 2, g)
    assert abs(val - 4.0 * (2.0 / 3.0)) < 1e-12


def test_simpson_weights_with_even_node_count():
    w = simpson_weights(np.ones((1, 2), bool).repeat(2, axis=0))
    assert w.sum() == pytest.approx(1.0)
    g = DomainGrid.rect(0, 1, 0, 1, 8, 6)
    assert abs(area_integral(lambda z: np.ones(z.shape), g) - 1.0) < 1e-12


def test_disk_area_converges():
    # only fully active Simpson blocks count, so the rim strip costs O(dx)
    errs = [abs(area_integral(lambda z: np.ones(z.shape), DomainGrid.disk(1.0, n)) - np.pi)
            for n in (101, 401)]
    assert errs[0] < 0.2
    assert errs[1] < errs[0] / 3


def test_stats_over_masked_grid():
    g = DomainGrid.rect(0, 1, 0, 1, 3, 3)
    vals = np.arange(9.0).reshape(3, 3)
    mask = np.zeros((3, 3), bool)
    mask[2, 2] = True
    mx, rms, arg, n = stats_over(vals, g.with_mask(mask))
    assert mx == 7.0 and n == 8 and arg == g.Z[2, 1]


def test_documented_wirtinger_examples():
    d, db = wirtinger(lambda z: z, 0.3 + 0.7j)
    assert abs(d - 1) < 1e-10 and abs(db) < 1e-10
    d, db = wirtinger(np.conj, -0.4 + 2.2j)
    assert abs(d) < 1e-10 and abs(db - 1) < 1e-10
    d, db = wirtinger(lambda z: np.abs(z) ** 2, 1 + 1j)
    assert abs(d - (1 - 1j)) < 1e-9 and abs(db - (1 + 1j)) < 1e-9


@given(st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3),
       st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=2))
@settings(max_examples=50, deadline=None)
def test_quadratics_are_differentiated_exactly(c0, c1, c2, z0):
    d, db = wirtinger(lambda z: c0 + c1 * z + c2 * z * z, z0, 1e-3)
    scale = 1 + abs(c0) + abs(c1) + abs(c2)
    assert abs(d - (c1 + 2 * c2 * z0)) < 1e-10 * scale / 1e-3
    assert abs(db) < 1e-10 * scale / 1e-3


def test_richardson_ratio():
    f = lambda z: np.exp(z) * np.conj(z) ** 2  # noqa: E731
    z0 = 0.4 - 0.3j
    exact_d = np.exp(z0) * np.conj(z0) ** 2
    e1 = abs(wirtinger(f, z0, 1e-2)[0] - exact_d)
    e2 = abs(wirtinger(f, z0, 5e-3)[0] - exact_d)
    assert 3.5 < e1 / e2 < 4.5


def test_documented_path_examples():
    assert abs(path_integral(lambda z: np.ones_like(z), None, PathPolyline([0, 1])) - 1) < 1e-15
    square = PathPolyline([0, 1, 1 + 1j, 1j, 0])
    assert abs(path_integral(lambda z: z, None, square)) < 1e-14
    loop = PathPolyline.circle(0, 1.0, n=64)
    val = path_integral(np.conj, None, loop)
    polygon_area = 32 * np.sin(2 * np.pi / 64)
    assert abs(val - 2j * polygon_area) < 1e-12
    # the 64-gon encloses 32 sin(pi/32) instead of pi
    assert abs(val - 2j * np.pi) < 2 * np.pi * (1 - polygon_area / np.pi) + 1e-12


@given(st.lists(st.complex_numbers(max_magnitude=2), min_size=2, max_size=6, unique=True))
@settings(max_examples=40, deadline=None)
def test_exact_differentials_close_up(pts):
    # phi = z^2 zbar + exp(zbar): F = d phi, G = dbar phi
    loop = PathPolyline(list(pts) + [pts[0] + 0.5, pts[0]])
    F = lambda z: 2 * z * np.conj(z)  # noqa: E731
    G = lambda z: z * z + np.exp(np.conj(z))  # noqa: E731
    assert abs(path_integral(F, G, loop)) < 1e-10


def test_documented_area_examples():
    g = DomainGrid.rect(0, 1, 0, 1, 11, 11)
    assert abs(area_integral(lambda z: np.ones(z.shape), g) - 1) < 1e-14
    assert abs(area_integral(lambda z: z.real, g) - 0.5) < 1e-14
    from scipy.special import erf
    oracle = np.pi * erf(4.0) ** 2
    G = DomainGrid.rect(-4, 4, -4, 4, 161, 161)
    val = area_integral(lambda z: np.exp(-np.abs(z) ** 2), G)
    assert abs(val - oracle) < 1e-6
    assert abs(val - np.pi) < 1e-6


def test_fully_masked_grid_is_empty():
    g = DomainGrid.rect(0, 1, 0, 1, 3, 3)
    with pytest.raises(EmptyDomain):
        area_integral(lambda z: np.ones(z.shape), g.with_mask(np.ones((3, 3), bool)))
