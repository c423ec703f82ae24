"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every criterion is asserted against the family definitions as printed
(the default ``variant``). Where the printed form fails, the detail line
also reports the self-consistent variant so the failure can be read off
the log.
"""
import json

import numpy as np

from wecmc.cli import run
from wecmc.complexcore import DomainGrid, PathPolyline
from wecmc.errors import LeakageExceeded
from wecmc.families import make_multi_soliton, make_one_soliton, make_plane_wave, make_rational
from wecmc.geometry import (ImplicitSurfaceSpec, calibrate_translation, charge_auto, curvature,
                            immerse_patch, immerse_point, implicit_residual, rational_closed_form)
from wecmc.painleve import PainleveParams, default_entry, integrate_p, scan_row, tables_report
from wecmc.special import jacobi
from wecmc.verification import current_holomorphy, we_residual

GRID = DomainGrid.rect(-3, 3, -3, 3, 40, 40)
VAC = make_plane_wave(2 ** -0.5, 1.0, 1.0)


def _cli(capsys, *argv):
    code = run(list(argv))
    out, _ = capsys.readouterr()
    return code, out


def test_criterion_01_we_residual_gate(criterion_log):
    fams = {
        "rational m=1": (make_rational(1), make_rational(1, variant="consistent")),
        "rational m=2": (make_rational(2), make_rational(2, variant="consistent")),
        "one-soliton (1,-1)": (make_one_soliton(1, -1), make_one_soliton(1, -1, variant="consistent")),
        "multi-soliton N=1": (make_multi_soliton([1], [-1]), None),
    }
    parts, ok = [], True
    for name, (printed, alt) in fams.items():
        r = we_residual(printed, GRID, 1e-5).max_abs
        ok &= r < 1e-6
        note = f"{name}={r:.2e}"
        if alt is not None and r >= 1e-6:
            note += f" (consistent {we_residual(alt, GRID, 1e-5).max_abs:.1e})"
        parts.append(note)
    criterion_log(1, ok, "max WE residual < 1e-6: " + "; ".join(parts))
    assert ok


def test_criterion_02_gaussian_curvature(criterion_log):
    z = GRID.Z[GRID.active][::37]
    k_rat = curvature(make_rational(1), z, 1e-3)
    k_sol = curvature(make_one_soliton(1, -1), z, 1e-3)
    k_vac = curvature(VAC, z, 1e-3)
    e1 = float(np.max(np.abs(k_rat - 1)))
    e2 = float(np.max(np.abs(k_sol - 0.25)))
    e3 = float(np.max(np.abs(k_vac)))
    ok = e1 < 1e-4 and e2 < 1e-4 and e3 < 1e-6
    criterion_log(2, ok, f"|K-1| rational={e1:.1e}; |K-0.25| one-soliton={e2:.1e}; |K| vacuum={e3:.1e}")
    assert ok


def test_criterion_03_topological_charge(criterion_log):
    r1 = charge_auto(make_rational(1), tol=5e-3)
    r2 = charge_auto(make_multi_soliton([1, 2], [-1, -2]), tol=5e-2)
    alt = charge_auto(make_rational(1, variant="consistent"), tol=5e-3)
    ok1 = 0.99 <= abs(r1.value) <= 1.01 and r1.rounding_distance < 1e-2
    ok2 = 1.95 <= abs(r2.value) <= 2.05
    criterion_log(3, ok1 and ok2,
                  f"rational m=1 I={r1.value:.4f} (R={r1.radius:g}, consistent I={alt.value:.4f}); "
                  f"multi N=2 I={r2.value:.4f}")
    assert ok1 and ok2


def test_criterion_04_path_independence(criterion_log):
    f = make_one_soliton(1, -1)
    a = immerse_point(f, 0.5, 1 + 1j, PathPolyline.staircase(0.5, 1 + 1j, "x"))
    b = immerse_point(f, 0.5, 1 + 1j, PathPolyline.staircase(0.5, 1 + 1j, "y"))
    d = float(np.max(np.abs(a.X - b.X)))
    criterion_log(4, d < 1e-8, f"staircase mismatch {d:.2e}")
    assert d < 1e-8


def _closed_form_calibrated(f, grid):
    patch = immerse_patch(f, 1 + 0j, grid, enforce=False)
    act = patch.active
    Z = grid.Z[act]
    X = patch.points[act]
    calib = slice(None, None, 4)
    offset = np.mean(rational_closed_form(1, Z[calib]) - X[calib], axis=0)
    return patch, offset


def test_criterion_05_conic_point(criterion_log):
    f = make_rational(1)
    grid = DomainGrid.annulus(0.3, 3, 40, 40)
    rng = np.random.default_rng(20)
    r = rng.uniform(0.4, 2.5, 20)
    t = rng.uniform(0, 2 * np.pi, 20)
    pts = r * np.exp(1j * t)
    _, offset = _closed_form_calibrated(f, grid)
    try:
        immerse_patch(f, 1 + 0j, grid)
        gate = "immersion gate passed"
    except LeakageExceeded as exc:
        gate = f"immersion gate fails, leakage {exc.leakage:.2e}"
    X1 = immerse_point(f, 1 + 0j, 1 + 0j).X + offset
    e_apex = float(np.max(np.abs(X1 - np.array([0.0, 0.0, 2.0]))))
    X3 = []
    for z in pts:
        try:
            X3.append(immerse_point(f, 1 + 0j, z, tol=np.inf).X[2] + offset[2])
        except LeakageExceeded:  # pragma: no cover - tol is infinite
            X3.append(np.nan)
    e_x3 = float(np.max(np.abs(np.array(X3) - 4 / (1 + np.abs(pts) ** 2))))
    ok = e_apex < 1e-6 and e_x3 < 1e-6
    alt = immerse_patch(make_rational(1, variant="consistent"), 1 + 0j, grid)
    sph = calibrate_translation(alt, ImplicitSurfaceSpec("sphere", {"radius": 1.0}))
    criterion_log(5, ok, f"|X(1)-(0,0,2)|={e_apex:.2e}; max|X3-4/(1+|z|^2)|={e_x3:.2e}; {gate}; "
                         f"consistent variant lies on a unit sphere (rms {sph.fit_residual:.1e})")
    assert ok


def test_criterion_06_implicit_enneper(criterion_log):
    grid = DomainGrid.rect(-3, 3, -3, 3, 30, 30)
    spec = ImplicitSurfaceSpec("enneper-cubic", {"a": 1.0, "b": -1.0})
    patch = immerse_patch(make_one_soliton(1, -1), 0.5, grid)
    cal = calibrate_translation(patch, spec)
    held = implicit_residual(patch, spec, cal.offset).max_abs
    sphere = ImplicitSurfaceSpec("sphere", {"radius": 2.0})
    sc = calibrate_translation(patch, sphere)
    s_held = implicit_residual(patch, sphere, sc.offset).max_abs
    criterion_log(6, held < 1e-3, f"held-out normalized residual {held:.2e} (fit rms {cal.fit_residual:.2e}); "
                                  f"same patch vs radius-2 sphere {s_held:.1e}")
    assert held < 1e-3


def test_criterion_07_current_holomorphy(criterion_log):
    r = current_holomorphy(make_one_soliton(1, -1), GRID).max_abs
    criterion_log(7, r < 1e-4, f"max |dbar j| = {r:.2e}")
    assert r < 1e-4


def test_criterion_08_painleve_conservation(criterion_log):
    # p0 = 0.7: the documented p0 = 1 has no real consistent slope for these parameters
    params = PainleveParams.consistent(-1, 0.2, 1.0, 0.7)
    coarse = integrate_p(params, 5.0, 1e-3)
    fine = integrate_p(params, 5.0, 5e-4)
    ratio = coarse.max_drift / fine.max_drift
    ok = coarse.max_drift < 1e-8 and ratio >= 12
    criterion_log(8, ok, f"drift {coarse.max_drift:.2e} over [0,5], halving ratio {ratio:.1f} (p0=0.7)")
    assert ok


def test_criterion_09_table_catalog(criterion_log):
    row = scan_row(default_entry(2, 6))
    rep = tables_report()
    keys = [k for k in rep if k != "errata"]
    verdicts = all(rep[k]["status"] in ("pass", "errata-candidate") and "best_variant" in rep[k] for k in keys)
    u = np.linspace(-10, 10, 2001)
    ident = 0.0
    for k in np.linspace(0, 1, 21):
        sn, cn, dn = jacobi(u, k)
        ident = max(ident, float(np.max(np.abs(sn ** 2 + cn ** 2 - 1))),
                    float(np.max(np.abs(dn ** 2 + k * k * sn ** 2 - 1))))
    sn0, cn0, dn0 = jacobi(u, 0.0)
    sn1, cn1, dn1 = jacobi(u, 1.0)
    degen = max(np.max(np.abs(sn0 - np.sin(u))), np.max(np.abs(cn0 - np.cos(u))), np.max(np.abs(dn0 - 1)),
                np.max(np.abs(sn1 - np.tanh(u))), np.max(np.abs(cn1 - 1 / np.cosh(u))),
                np.max(np.abs(dn1 - 1 / np.cosh(u))))
    ok = row.passed and row.printed.max_abs < 1e-8 and len(keys) == 12 and verdicts \
        and ident < 1e-12 and degen < 1e-12
    n_pass = sum(rep[k]["status"] == "pass" for k in keys)
    criterion_log(9, ok, f"T2 row 6 residual {row.printed.max_abs:.1e}; {len(keys)} verdicts "
                         f"({n_pass} pass); Jacobi identities {ident:.1e}, degenerations {degen:.1e}")
    assert ok


def test_criterion_10_errata_documentation(capsys, criterion_log):
    cases = {
        "exponential": ["verify", "--family", "exponential", "--params", "q=0.5,a=1,0"],
        "plane-wave generic": ["verify", "--family", "plane-wave", "--params", "A=1,h=2,k=0.5"],
        "tables": ["tables", "--all"],
    }
    parts, ok = [], True
    for name, argv in cases.items():
        code, out = _cli(capsys, *argv)
        body = json.loads(out)
        if name == "tables":
            bad = [k for k in body if k != "errata" and body[k]["status"] != "pass"]
            documented = bool(bad) and all("variants" in body[k] and "best_variant" in body[k] for k in bad)
            parts.append(f"tables exit {code}, {len(bad)} errata rows with variant scans")
        else:
            documented = bool(body["errata"]) and bool(body.get("variant_scan")) and "max_abs" in body["we_residual"]
            best = body["variant_scan"][0]
            parts.append(f"{name} exit {code}, residual {body['we_residual']['max_abs']:.2e}, "
                         f"best variant '{best['label']}' {best.get('residual', float('nan')):.1e}")
        ok &= code == 2 and documented
    criterion_log(10, ok, "; ".join(parts))
    assert ok


def test_criterion_11_determinism(capsys, criterion_log):
    _, a = _cli(capsys, "verify", "--family", "one-soliton")
    _, b = _cli(capsys, "verify", "--family", "one-soliton")
    same = a == b and len(a) > 0
    criterion_log(11, same, f"two runs byte-identical ({len(a)} bytes)")
    assert same
