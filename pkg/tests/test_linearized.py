import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wecmc.complexcore import DomainGrid
from wecmc.errors import InconsistentProfile, InconsistentSeed, ProfileVanishes
from wecmc.families import make_plane_wave
from wecmc.linearized import check_profile, constant_profile, integrate_linearized, reduced_rhs
from wecmc.painleve import TableEntry, profile_map
from wecmc.verification import constraint_residual, we_residual

SMALL = DomainGrid.rect(-0.2, 0.2, -0.2, 0.2, 11, 11)
VACUUM_SEED = (2 ** -0.5, 1j * 2 ** -0.5)


def test_vacuum_reconstruction_matches_plane_wave():
    g = DomainGrid.rect(-1, 1, -1, 1, 21, 21)
    f = integrate_linearized(constant_profile(1.0), 1, -1.0, VACUUM_SEED, g, base=0j)
    wave = make_plane_wave(2 ** -0.5, 1.0, 1.0)
    nodes = f.meta["nodes"]
    a, b = wave(f.meta["grid"].Z)
    assert np.max(np.abs(nodes[..., 0] - a)) < 1e-8
    assert np.max(np.abs(nodes[..., 1] - b)) < 1e-8
    assert f.meta["cross_path"] < 1e-8
    # between nodes the bilinear sampler is only second-order accurate
    assert we_residual(f, g, 1e-5).max_abs < 1e-2


def test_cubic_interpolation_is_closer_between_nodes():
    g = DomainGrid.rect(-1, 1, -1, 1, 21, 21)
    lin = integrate_linearized(constant_profile(1.0), 1, -1.0, VACUUM_SEED, g, base=0j)
    cub = integrate_linearized(constant_profile(1.0), 1, -1.0, VACUUM_SEED, g, base=0j, interpolation="cubic")
    assert we_residual(cub, g, 1e-5).max_abs < we_residual(lin, g, 1e-5).max_abs


def test_seed_checks():
    prof = constant_profile(1.0)
    with pytest.raises(InconsistentSeed):
        integrate_linearized(prof, 1, -1.0, (0.8, 0.8j), SMALL, base=0j)
    with pytest.raises(InconsistentSeed):
        integrate_linearized(prof, 1, -1.0, (2 ** -0.5, 1j * 2 ** -0.5, 2 ** -0.5, 1j * 2 ** -0.5), SMALL)
    with pytest.raises(InconsistentProfile):
        integrate_linearized(prof, 1, -2.0, VACUUM_SEED, SMALL, A=1.0)
    with pytest.raises(ValueError):
        integrate_linearized(prof, 0, -1.0, VACUUM_SEED, SMALL)


def test_vanishing_profile_is_refused():
    def prof(s):
        s = np.asarray(s, dtype=complex)
        return 0.05 - s.real + 0 * s, -np.ones(s.shape, complex)
    with pytest.raises(ProfileVanishes):
        integrate_linearized(prof, 1, 0.0, (0.1, 0.0), SMALL, base=-0.2 - 0.2j, check=False)


def test_profile_check():
    def line(s):
        s = np.asarray(s, dtype=complex)
        return 1 + s, np.ones(s.shape, complex)
    with pytest.raises(InconsistentProfile):
        check_profile(line, 1, 0.0, np.linspace(0, 0.5, 5))
    assert check_profile(constant_profile(1.0), 1, 1.0, np.linspace(0, 0.5, 5)) < 1e-12
    with pytest.raises(ValueError):
        reduced_rhs(1.0, 0.0, 1, 1.0, "other")


def test_row_profile_solves_printed_reduced_equation_for_its_eps():
    prof = profile_map(TableEntry(1, 3, 1.0, 0.2))
    s = np.linspace(0.3, 0.8, 11)
    assert check_profile(prof, -1, 0.2, s) < 1e-8
    # the same profile solves the sign-flipped equation with eps = +1
    assert check_profile(prof, 1, 0.2, s, reduced="compatible") < 1e-8


def _row_field(eps, reduced):
    prof = profile_map(TableEntry(1, 3, 1.0, 0.2))
    base = 0.2 + 0j
    s0 = base + eps * np.conj(base)
    p0 = float(np.real(prof(np.array([s0]))[0][0]))
    seed = (np.sqrt(p0 / 2), 1j * np.sqrt(p0 / 2))
    return integrate_linearized(prof, eps, np.sqrt(0.2), seed, SMALL, base=base, A=0.2, reduced=reduced)


def test_row_profile_with_printed_signs_is_not_integrable():
    f = _row_field(-1, "printed")
    # marching orders disagree: the mixed partials of the linear system do not commute
    assert f.meta["cross_path"] > 1e-2
    assert we_residual(f, SMALL, 1e-5).max_abs > 1e-2
    assert constraint_residual(f, -1, SMALL, 1e-5).max_abs < 1e-8
    assert f.meta["density_gap"] < 1e-6


def test_row_profile_with_compatible_signs_is_integrable():
    f = _row_field(1, "compatible")
    assert f.meta["cross_path"] < 1e-8
    assert constraint_residual(f, 1, SMALL, 1e-5).max_abs < 1e-8
    # bilinear sampling between nodes bounds the residual
    assert we_residual(f, SMALL, 1e-5).max_abs < 1e-3
    assert f.meta["density_gap"] < 1e-6


@given(st.floats(0.5, 1.5), st.floats(0, 2 * np.pi), st.floats(0.1, 1.4), st.sampled_from([1, -1]))
@settings(max_examples=10, deadline=None)
def test_density_is_conserved_for_constant_profiles(p0, theta, angle, eps):
    # constant p solves the reduced equation when A = p0^4
    j = p0 ** 2 * np.exp(1j * theta)
    seed = (np.sqrt(p0) * np.cos(angle), 1j * np.sqrt(p0) * np.sin(angle))
    g = DomainGrid.rect(-0.3, 0.3, -0.3, 0.3, 7, 7)
    f = integrate_linearized(constant_profile(p0), eps, j, seed, g, base=0j, A=p0 ** 4)
    assert f.meta["density_gap"] < 1e-6
    assert f.meta["conjugation_gap"] < 1e-10
