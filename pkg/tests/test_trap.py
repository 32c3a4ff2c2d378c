import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import constants

from penning_ent.environment import EnvironmentConstants, build_lambda
from penning_ent.gaussian import (
    bona_fide,
    separability_epsilon,
    symplectic_eigenvalues,
    symplectic_form,
)
from penning_ent.linalg import mat_exp
from penning_ent.trap import (
    InvalidParametersError,
    TrapParameters,
    UnitSystem,
    initial_covariance,
    normal_mode_transform,
    radial_frequency,
    temperature_to_dimensionless,
)

from .oracles import hamiltonian_matrix


def test_radial_frequency_boundary_rejected():
    with pytest.raises(InvalidParametersError):
        radial_frequency(2.0, np.sqrt(2.0))


def test_radial_frequency_proton():
    assert radial_frequency(484 / 63.2, 1.0) == pytest.approx(3.7633, abs=5e-5)


def test_radial_frequency_direct():
    assert radial_frequency(10.0, 1.0) == pytest.approx(np.sqrt(24.5), rel=1e-15)


@given(wc=st.floats(1.5, 1e3), wz=st.floats(1e-3, 1.0))
def test_radial_frequency_identity(wc, wz):
    wr = radial_frequency(wc, wz)
    assert wr**2 + wz**2 / 2 == pytest.approx(wc**2 / 4, rel=1e-14)


@given(wc=st.floats(1.5, 1e3))
def test_normal_mode_frequency_identities(wc):
    trap = TrapParameters(omega_c=wc)
    assert trap.omega_plus + trap.omega_minus == pytest.approx(wc, rel=1e-12)
    assert trap.omega_plus * trap.omega_minus == pytest.approx(0.5, rel=1e-9)


def test_trap_rejects_untrappable():
    with pytest.raises(InvalidParametersError):
        TrapParameters(omega_c=1.0)


def test_time_unit():
    assert UnitSystem().time_unit_s == pytest.approx(15.8e-9, rel=2e-3)


def test_temperature_definition():
    units = UnitSystem()
    t = constants.hbar * units.omega_z_si / constants.k
    assert temperature_to_dimensionless(t, units) == pytest.approx(1.0, rel=1e-14)


def test_temperature_values():
    assert temperature_to_dimensionless(1e-3) == pytest.approx(2.07, abs=5e-3)
    assert temperature_to_dimensionless(1.0) == pytest.approx(2.07e3, rel=3e-3)
    assert temperature_to_dimensionless(1.0) == pytest.approx(1000 * temperature_to_dimensionless(1e-3))


def test_temperature_rejects_nonpositive():
    with pytest.raises(InvalidParametersError):
        temperature_to_dimensionless(0.0)


def test_normal_modes_diagonalize_hamiltonian(trap):
    s, freqs = normal_mode_transform(trap)
    om2 = symplectic_form(2)
    np.testing.assert_allclose(s @ om2 @ s.T, om2, atol=1e-14)
    h = hamiltonian_matrix(trap)[:4, :4]
    expected = s.T @ np.diag(np.repeat(freqs, 2)) @ s
    np.testing.assert_allclose(h, expected, atol=1e-12)
    assert sorted(freqs) == pytest.approx([-trap.omega_minus, trap.omega_plus])


def test_initial_covariance_axial_block(trap):
    sigma = initial_covariance(trap)
    assert sigma[4, 4] == pytest.approx(0.5)
    assert sigma[5, 5] == pytest.approx(0.5)
    assert np.all(sigma[4:, :4] == 0)


def test_initial_covariance_is_pure_and_valid(trap):
    sigma = initial_covariance(trap)
    assert np.array_equal(sigma, sigma.T)
    assert np.all(np.linalg.eigvalsh(sigma) > 0)
    assert bona_fide(sigma)
    np.testing.assert_allclose(symplectic_eigenvalues(sigma), 0.5, atol=1e-10)


def test_initial_covariance_separable_boundary(trap):
    assert abs(separability_epsilon(initial_covariance(trap))) <= 1e-9


def test_initial_covariance_stationary_under_trap_flow(trap):
    sigma = initial_covariance(trap)
    lam = build_lambda(trap, EnvironmentConstants())
    for t in (0.1, 3.0, 40.0):
        p = mat_exp(lam, t)
        np.testing.assert_allclose(p @ sigma @ p.T, sigma, atol=1e-10)


def test_initial_covariance_general_units():
    trap = TrapParameters(omega_c=5.0, omega_z=2.0, mass=3.0, hbar=0.5)
    sigma = initial_covariance(trap)
    assert sigma[4, 4] == pytest.approx(0.5 / (2 * 3.0 * 2.0))
    np.testing.assert_allclose(symplectic_eigenvalues(sigma / 0.5), 0.5, atol=1e-10)
