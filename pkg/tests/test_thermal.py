import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from lmg import ContractWarning, DomainError
from lmg.semiclassical import ground_energy
from lmg.spin_algebra import build_spin_operators
from lmg.thermal import (
    coherent_energy,
    coherent_state,
    coherent_state_for_energy,
    gibbs_expectation,
    gibbs_state,
    rescaled_hamiltonian,
)


def test_infinite_temperature_is_maximally_mixed():
    ops = build_spin_operators(3)
    g = gibbs_state(ops, 2.0, 0.0)
    assert np.allclose(g.rho, np.eye(7) / 7, atol=1e-15)
    assert g.z == pytest.approx(7.0)


def test_zero_temperature_symmetric_phase_is_pure_ground_state():
    ops = build_spin_operators(4)
    g = gibbs_state(ops, 0.5, math.inf)
    assert np.trace(g.rho @ g.rho).real == pytest.approx(1.0, abs=1e-12)
    h = rescaled_hamiltonian(ops, 0.5)
    assert gibbs_expectation(g, h) == pytest.approx(g.energies[0], abs=1e-12)


def test_zero_temperature_mixes_only_degenerate_levels():
    ops = build_spin_operators(2)
    g = gibbs_state(ops, 2.0, math.inf)
    ground = g.energies - g.energies[0] < 1e-10
    assert np.trace(g.rho @ g.rho).real == pytest.approx(1.0 / ground.sum(), abs=1e-12)


def test_small_spin_trace_and_commutation():
    ops = build_spin_operators(2)
    g = gibbs_state(ops, 2.0, 1.0)
    h = rescaled_hamiltonian(ops, 2.0)
    assert abs(np.trace(g.rho) - 1) < 1e-12
    assert np.abs(g.rho @ h - h @ g.rho).max() < 1e-10
    assert np.allclose(g.rho, sla.expm(-h) / np.trace(sla.expm(-h)), atol=1e-13)
    assert g.log_z == pytest.approx(math.log(np.trace(sla.expm(-h)).real), rel=1e-13)


def test_large_beta_tilde_does_not_overflow():
    ops = build_spin_operators(10)
    g = gibbs_state(ops, 2.0, 1e4)
    assert np.isfinite(g.rho).all() and math.isfinite(g.log_z)
    assert abs(np.trace(g.rho) - 1) < 1e-12


@pytest.mark.parametrize("bad", [-1.0, math.nan])
def test_negative_or_nan_beta_rejected(bad):
    with pytest.raises(DomainError):
        gibbs_state(build_spin_operators(1), 1.0, bad)


@given(st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([1, 2.5, 5]))
def test_energy_decreases_with_inverse_temperature(lam, s):
    ops = build_spin_operators(s)
    h = rescaled_hamiltonian(ops, lam)
    grid = np.linspace(0, 20, 41)
    energies = [gibbs_expectation(gibbs_state(ops, lam, b), h) for b in grid]
    assert np.all(np.diff(energies) <= 1e-12)


def test_identity_expectation():
    g = gibbs_state(build_spin_operators(5), 2.0, 1.5)
    assert gibbs_expectation(g, np.eye(11)) == pytest.approx(1.0, abs=1e-12)


def test_non_hermitian_observable_warns_and_returns_complex():
    ops = build_spin_operators(2)
    g = gibbs_state(ops, 2.0, 1.0)
    with pytest.warns(ContractWarning):
        value = gibbs_expectation(g, ops.sx + 1j * ops.sy)
    assert isinstance(value, complex)


def test_ground_energy_trend_broken_phase():
    devs = []
    for s in (10, 20, 40):
        ops = build_spin_operators(s)
        g = gibbs_state(ops, 2.0, math.inf)
        devs.append(abs(gibbs_expectation(g, rescaled_hamiltonian(ops, 2.0)) + 1.25))
    assert devs[0] > devs[1] > devs[2] > 0
    # O(1/S): the deviation halves with each doubling
    assert devs[1] / devs[0] == pytest.approx(0.5, abs=0.1)
    assert devs[2] / devs[1] == pytest.approx(0.5, abs=0.1)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_intensive_temperature_ladder_approaches_ground_energy(lam):
    # fixed physical temperature T = 0.5 means beta_tilde = S / T grows with S
    devs = []
    for s in (10, 20, 40, 80):
        ops = build_spin_operators(s)
        g = gibbs_state(ops, lam, s / 0.5)
        devs.append(abs(gibbs_expectation(g, rescaled_hamiltonian(ops, lam)) - ground_energy(lam)))
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.05


def _moments(ops, rho):
    return [np.trace(rho @ op).real / ops.s for op in (ops.sx, ops.sy, ops.sz)]


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.sampled_from([0.5, 1, 3, 10]))
def test_coherent_state_direction_and_purity(theta, phi, s):
    ops = build_spin_operators(s)
    rho = coherent_state(ops, theta, phi)
    x, y, z = _moments(ops, rho)
    assert x == pytest.approx(math.sin(theta) * math.cos(phi), abs=1e-10)
    assert y == pytest.approx(math.sin(theta) * math.sin(phi), abs=1e-10)
    assert z == pytest.approx(math.cos(theta), abs=1e-10)
    assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-12)


def test_coherent_state_poles():
    ops = build_spin_operators(4)
    north = coherent_state(ops, 0.0)
    assert north[0, 0] == pytest.approx(1.0) and _moments(ops, north)[2] == pytest.approx(1.0)
    assert _moments(ops, coherent_state(ops, math.pi))[2] == pytest.approx(-1.0, abs=1e-12)


def test_coherent_state_equator():
    ops = build_spin_operators(10)
    rho = coherent_state(ops, math.pi / 2)
    assert _moments(ops, rho)[0] == pytest.approx(1.0, abs=1e-10)
    h = rescaled_hamiltonian(ops, 2.0)
    # <Sx^2>/S^2 = 1 - 1/(2S) on the equator, hence <h> = -(lam/2)(1 + O(1/S))
    assert np.trace(rho @ h).real == pytest.approx(-1.0, abs=0.1)
    assert np.trace(rho @ h).real == pytest.approx(coherent_energy(10, 2.0, math.pi / 2), abs=1e-12)


@pytest.mark.parametrize("theta,phi", [(0.3, 0.0), (1.7, 0.4), (2.9, -1.1)])
def test_coherent_state_matches_rotated_north_pole(theta, phi):
    ops = build_spin_operators(3)
    rot = sla.expm(-1j * phi * ops.sz) @ sla.expm(-1j * theta * ops.sy)
    psi = rot[:, 0]
    assert np.allclose(coherent_state(ops, theta, phi), np.outer(psi, psi.conj()), atol=1e-12)


@given(st.floats(0, math.pi), st.sampled_from([0.5, 2.0, 4.0]), st.sampled_from([1, 5, 20]))
def test_coherent_energy_closed_form(theta, lam, s):
    ops = build_spin_operators(s)
    rho = coherent_state(ops, theta)
    assert np.trace(rho @ rescaled_hamiltonian(ops, lam)).real == pytest.approx(coherent_energy(s, lam, theta), abs=1e-11)


@pytest.mark.parametrize("lam,target", [(0.5, 0.5), (0.5, -0.5), (2.0, -0.5), (2.0, -1.1), (2.0, 0.9)])
def test_coherent_state_for_energy_hits_target(lam, target):
    ops = build_spin_operators(20)
    rho, theta = coherent_state_for_energy(ops, lam, target)
    assert np.trace(rho @ rescaled_hamiltonian(ops, lam)).real == pytest.approx(target, abs=1e-12)
    assert 0 <= theta <= math.pi


def test_coherent_state_for_energy_out_of_range():
    ops = build_spin_operators(20)
    with pytest.raises(DomainError):
        coherent_state_for_energy(ops, 2.0, -1.3)
    with pytest.raises(DomainError):
        coherent_state_for_energy(ops, 2.0, 1.01)
