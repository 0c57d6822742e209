"""Gibbs states of the rescaled Hamiltonian h = H/S and spin coherent states."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractWarning, DomainError, InvalidParameterError
from .spin_algebra import SpinOperators, lmg_hamiltonian

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class GibbsState:
    """rho = exp(-beta_tilde h) / Z with h = H/S.

    ``log_z`` is always finite; ``z`` may overflow to inf for large beta_tilde
    and is 0 when ``beta_tilde`` is infinite (the ground-state limit).
    """

    beta_tilde: float
    rho: np.ndarray = field(repr=False)
    log_z: float
    energies: np.ndarray = field(repr=False)

    @property
    def z(self) -> float:
        if math.isinf(self.beta_tilde):
            return math.inf if self.energies[0] < 0 else 0.0
        try:
            return math.exp(self.log_z)
        except OverflowError:
            return math.inf


def rescaled_hamiltonian(ops: SpinOperators, lam: float) -> np.ndarray:
    if ops.s == 0:
        raise InvalidParameterError("the rescaled Hamiltonian H/S needs S > 0")
    return lmg_hamiltonian(ops, lam) / ops.s


def gibbs_state(ops: SpinOperators, lam: float, beta_tilde: float) -> GibbsState:
    """Thermal state of h = H/S at rescaled inverse temperature beta_tilde in [0, inf]."""
    if math.isnan(beta_tilde) or beta_tilde < 0:
        raise DomainError(f"beta_tilde must lie in [0, inf], got {beta_tilde!r}")
    h = rescaled_hamiltonian(ops, lam)
    evals, evecs = np.linalg.eigh(h)
    e0 = evals[0]
    if math.isinf(beta_tilde):
        # equal-weight mixture over the (near-)degenerate ground space
        weights = (evals - e0 < DEGENERACY_TOL).astype(float)
        log_z = math.inf
    else:
        weights = np.exp(-beta_tilde * (evals - e0))
        log_z = math.log(weights.sum()) - beta_tilde * e0
    weights /= weights.sum()
    rho = (evecs * weights) @ evecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return GibbsState(beta_tilde=float(beta_tilde), rho=rho, log_z=log_z, energies=evals)


def gibbs_expectation(state: GibbsState, a: np.ndarray):
    """Tr[rho A]; real for Hermitian A, complex (with a warning) otherwise."""
    a = np.asarray(a)
    value = complex(np.trace(state.rho @ a))
    if np.abs(a - a.conj().T).max() > 1e-12 * max(1.0, np.abs(a).max()):
        warnings.warn("observable is not Hermitian; returning a complex expectation", ContractWarning, stacklevel=2)
        return value
    assert abs(value.imag) < 1e-12 * max(1.0, abs(value.real)), "Hermitian expectation has an imaginary part"
    return value.real


def coherent_amplitudes(s: float, theta: float, phi: float) -> np.ndarray:
    """Components of exp(-i phi Sz) exp(-i theta Sy)|S, S> in the descending-m basis."""
    dim = int(round(2 * s)) + 1
    m = s - np.arange(dim)
    c, sn = math.cos(theta / 2), math.sin(theta / 2)
    two_s = dim - 1
    # sqrt(binom(2S, S - m)) via log-gamma to avoid overflow at large S
    k = np.arange(dim)
    log_binom = np.array([math.lgamma(two_s + 1) - math.lgamma(j + 1) - math.lgamma(two_s - j + 1) for j in k])
    amp = np.exp(0.5 * log_binom) * np.power(c, two_s - k) * np.power(sn, k)
    return amp * np.exp(-1j * m * phi)


def coherent_state(ops: SpinOperators, theta: float, phi: float = 0.0) -> np.ndarray:
    """Pure-state projector of the spin coherent state pointing along (theta, phi)."""
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise InvalidParameterError("coherent-state angles must be finite")
    psi = coherent_amplitudes(ops.s, theta, phi)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def coherent_energy(s: float, lam: float, theta: float) -> float:
    """<h> in the coherent state at (theta, phi = 0)."""
    return -0.5 * lam * (math.sin(theta) ** 2 + math.cos(theta) ** 2 / (2 * s)) - math.cos(theta)


def coherent_state_for_energy(ops: SpinOperators, lam: float, target: float):
    """Coherent state at phi = 0 whose <h> equals ``target``; returns (rho, theta).

    In u = cos(theta) the energy is the quadratic -lam/2 + (lam/2)(1 - 1/2S) u**2 - u.
    The root is taken on the branch u <= 1/(lam (1 - 1/2S)), where the energy
    decreases monotonically with u, so the whole attainable range is covered.
    """
    s = ops.s
    if s == 0:
        raise InvalidParameterError("coherent_state_for_energy needs S > 0")
    q = 0.5 * lam * (1.0 - 1.0 / (2 * s))
    u_hi = 1.0 if q <= 0.5 else 1.0 / (2 * q)
    e_max = coherent_energy(s, lam, math.pi)
    e_min = -0.5 * lam + q * u_hi**2 - u_hi
    if not (e_min - 1e-12 <= target <= e_max + 1e-12):
        raise DomainError(f"coherent-state energies span [{e_min:.12g}, {e_max:.12g}], got {target!r}")
    c = -0.5 * lam - target
    if abs(q) < 1e-300:
        u = c
    else:
        disc = max(1.0 - 4.0 * q * c, 0.0)
        # smaller root of q u^2 - u + c = 0, in a cancellation-free form
        u = 2.0 * c / (1.0 + math.sqrt(disc))
    u = min(max(u, -1.0), u_hi)
    theta = math.acos(u)
    return coherent_state(ops, theta, 0.0), theta
