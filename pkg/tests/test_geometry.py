import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wecmc.complexcore import DomainGrid, PathPolyline
from wecmc.errors import LeakageExceeded, RankDeficient, TailTooLarge
from wecmc.families import make_multi_soliton, make_one_soliton, make_plane_wave, make_rational
from wecmc.geometry import (ImplicitSurfaceSpec, SurfacePatch, calibrate_translation, charge_auto,
                            charge_density, curvature, immerse_patch, immerse_point, implicit_residual,
                            one_soliton_closed_form, rational_closed_form, topological_charge)

VAC = make_plane_wave(2 ** -0.5, 1.0, 1.0)


def _cylinder(z):
    x, y = z.real, z.imag
    return np.array([0.5 - 0.5 * np.cos(4 * x), 0.5 * np.sin(4 * x), 2 * y])


@given(st.complex_numbers(max_magnitude=2))
@settings(max_examples=25, deadline=None)
def test_vacuum_immerses_onto_cylinder(z):
    im = immerse_point(VAC, 0j, z)
    assert np.max(np.abs(im.X - _cylinder(z))) < 1e-10
    assert im.leakage < 1e-10


def test_vacuum_patch_is_flat():
    g = DomainGrid.rect(-1, 1, -1, 1, 15, 15)
    patch = immerse_patch(VAC, 0j, g)
    km, ks = patch.K_stats()
    assert abs(km) < 1e-6 and ks < 1e-6
    X = patch.points[patch.active]
    r = np.hypot(X[:, 0] - 0.5, X[:, 1])
    assert np.max(np.abs(r - 0.5)) < 1e-10


def test_path_independence_for_soliton():
    for v in ("printed", "consistent"):
        f = make_one_soliton(1, -1, variant=v)
        a = immerse_point(f, 0.5, 1 + 1j, PathPolyline.staircase(0.5, 1 + 1j, "x"))
        b = immerse_point(f, 0.5, 1 + 1j, PathPolyline.staircase(0.5, 1 + 1j, "y"))
        assert np.max(np.abs(a.X - b.X)) < 1e-8


def test_explicit_path_must_connect():
    with pytest.raises(ValueError):
        immerse_point(VAC, 0j, 1 + 1j, PathPolyline([0j, 1 + 0j]))


def test_curvature_values():
    z = np.array([0.7 + 0.2j, -1.1 + 0.9j, 2.0 - 0.5j])
    for m in (1, 2):
        for v in ("printed", "consistent"):
            assert np.max(np.abs(curvature(make_rational(m, variant=v), z, 1e-3) - 1)) < 1e-4
    assert np.max(np.abs(curvature(make_one_soliton(1, -1), z, 1e-3) - 0.25)) < 1e-4
    assert np.max(np.abs(curvature(make_one_soliton(1, -1, variant="consistent"), z, 1e-3) - 1.0)) < 1e-4
    assert np.max(np.abs(curvature(VAC, z, 1e-3))) < 1e-6


def test_printed_rational_patch_leaks():
    g = DomainGrid.annulus(0.3, 3, 30, 30)
    with pytest.raises(LeakageExceeded) as info:
        immerse_patch(make_rational(1), 1 + 0j, g)
    assert info.value.leakage > 1e-3
    patch = immerse_patch(make_rational(1, variant="consistent"), 1 + 0j, g)
    assert patch.imag_leakage < 1e-6


def test_consistent_rational_is_unit_sphere():
    g = DomainGrid.annulus(0.3, 3, 30, 30)
    patch = immerse_patch(make_rational(1, variant="consistent"), 1 + 0j, g)
    cal = calibrate_translation(patch, ImplicitSurfaceSpec("sphere", {"radius": 1.0}))
    assert cal.fit_residual < 1e-8 and not cal.flagged
    held = implicit_residual(patch, ImplicitSurfaceSpec("sphere", {"radius": 1.0}), cal.offset)
    assert held.max_abs < 1e-8


def test_printed_soliton_is_sphere_of_radius_two():
    g = DomainGrid.rect(-3, 3, -3, 3, 30, 30)
    patch = immerse_patch(make_one_soliton(1, -1), 0.5, g)
    spec = ImplicitSurfaceSpec("sphere", {"radius": 2.0})
    cal = calibrate_translation(patch, spec)
    assert cal.fit_residual < 1e-8
    assert implicit_residual(patch, spec, cal.offset).max_abs < 1e-8


def test_obj_and_csv_formats(tmp_path):
    g = DomainGrid.annulus(0.3, 3, 12, 12)
    patch = immerse_patch(make_rational(1, variant="consistent"), 1 + 0j, g)
    obj = patch.obj_text().splitlines()
    verts = [ln for ln in obj if ln.startswith("v ")]
    faces = [ln for ln in obj if ln.startswith("f ")]
    assert len(verts) == int(patch.active.sum())
    idx = np.array([[int(t) for t in ln.split()[1:]] for ln in faces])
    assert idx.min() >= 1 and idx.max() <= len(verts)
    csv = patch.csv_text().splitlines()
    assert csv[0] == "x,y,X1,X2,X3,p,K,masked"
    assert len(csv) == g.nx * g.ny + 1
    files = patch.write(tmp_path, "surf", "rational", {"m": 1})
    assert [f.name for f in files] == ["surf.obj", "surf.csv", "surf.json"]
    summary = json.loads(files[2].read_text())
    assert summary["family"] == "rational" and abs(summary["K_mean"] - 1) < 1e-4


def test_charge_density_vanishes_for_vacuum():
    z = np.array([0.1 + 0.3j, -0.7 + 0.2j])
    assert np.max(np.abs(charge_density(VAC, z))) < 1e-9


def test_charge_of_solutions():
    r = charge_auto(make_rational(1, variant="consistent"), tol=5e-3)
    assert 0.99 <= abs(r.value) <= 1.01 and r.rounding_distance < 1e-2
    r2 = charge_auto(make_multi_soliton([1, 2], [-1, -2]), tol=5e-2)
    assert 1.95 <= abs(r2.value) <= 2.05


def test_charge_tail_guard():
    with pytest.raises(TailTooLarge):
        charge_auto(make_rational(1, variant="consistent"), tol=1e-9, rmax=5.0)
    res = topological_charge(make_rational(1, variant="consistent"), DomainGrid.disk(3.0, 121))
    assert res.tail > 0 and res.nodes > 0


def test_printed_closed_forms():
    X = rational_closed_form(1, np.array([1 + 0j]))[0]
    assert np.allclose(X, [0, 0, 2], atol=1e-15)
    z = np.array([0.3 + 0.4j, 2 - 1j])
    assert np.allclose(rational_closed_form(1, z)[:, 2], 4 / (1 + np.abs(z) ** 2), atol=1e-15)
    assert np.all(np.isfinite(one_soliton_closed_form(1, -1, z)))


def test_calibration_recovers_known_offset():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(400, 3))
    pts = 1.5 * pts / np.linalg.norm(pts, axis=1)[:, None]
    shift = np.array([0.3, -0.2, 0.7])
    g = DomainGrid.rect(0, 1, 0, 1, 20, 20)
    patch = SurfacePatch(g, (pts + shift).reshape(20, 20, 3), np.ones((20, 20)), np.zeros((20, 20)), 0j, 0.0)
    cal = calibrate_translation(patch, ImplicitSurfaceSpec("sphere", {"radius": 1.5}))
    assert np.allclose(cal.offset, -shift, atol=1e-10)


def test_calibration_rejects_degenerate_points():
    g = DomainGrid.rect(0, 1, 0, 1, 5, 5)
    line = np.zeros((5, 5, 3))
    line[..., 0] = np.linspace(0, 1, 25).reshape(5, 5)
    patch = SurfacePatch(g, line, np.ones((5, 5)), np.zeros((5, 5)), 0j, 0.0)
    with pytest.raises(RankDeficient):
        calibrate_translation(patch, ImplicitSurfaceSpec("sphere", {"radius": 1.0}))


def test_implicit_spec_validation():
    with pytest.raises(ValueError):
        ImplicitSurfaceSpec("torus", {})
    with pytest.raises(ValueError):
        ImplicitSurfaceSpec("enneper-cubic", {"a": 1})
    spec = ImplicitSurfaceSpec("sphere", {"radius": 2.0})
    X = np.array([[2.0, 0, 0], [0, 3.0, 0]])
    # F / |grad F| = (r^2 - R^2) / (2r)
    assert np.allclose(spec.normalized(X), [0, 5 / 6], atol=1e-6)
