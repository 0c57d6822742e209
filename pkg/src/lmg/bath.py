"""Ohmic-Drude bath kernels and the 2x2 dissipator coefficient matrix.

The bath enters the master equation only through a handful of closed-form
numbers: the kernels of the spectral density, the first moment ``nu1`` of the
decoherence kernel, and the kappa matrix built from them.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError, DomainError, InvalidParameterError, MarkovRegimeWarning
from .spin_algebra import SpinOperators, _check_half_integer
from .special_functions import digamma

INTENSIVE = "intensive"
EXTENSIVE = "extensive"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the system-bath model.

    Exactly one of ``temperature`` (intensive T) or ``ttilde`` (the rescaled,
    extensive temperature T/S) must be given.  ``nu1_override`` replaces the
    computed first moment of the decoherence kernel; it is mainly useful in
    the extensive regime, where the default treats ``nu1`` as S-independent
    by evaluating it at (T~, omega_c).
    """

    lam: float
    gamma: float
    s: float
    temperature: float | None = None
    ttilde: float | None = None
    omega_c: float = 10.0
    nu1_override: float | None = None
    markov_threshold: float = field(default=0.1, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "s", _check_half_integer(self.s))
        if not np.isfinite(self.lam):
            raise InvalidParameterError("lambda must be finite")
        if not (self.gamma >= 0 and np.isfinite(self.gamma)):
            raise InvalidParameterError(f"gamma must be >= 0, got {self.gamma!r}")
        if not self.omega_c > 0:
            raise InvalidParameterError(f"omega_c must be > 0, got {self.omega_c!r}")
        if (self.temperature is None) == (self.ttilde is None):
            raise InvalidParameterError("give exactly one of temperature (intensive) or ttilde (extensive)")
        temp = self.temperature if self.temperature is not None else self.ttilde
        if not (temp >= 0 and np.isfinite(temp)):
            raise InvalidParameterError(f"temperature must be finite and >= 0, got {temp!r}")

    @property
    def regime(self) -> str:
        return INTENSIVE if self.temperature is not None else EXTENSIVE

    @property
    def physical_temperature(self) -> float:
        """Bath temperature T; equals ttilde * S in the extensive regime."""
        if self.temperature is not None:
            return self.temperature
        return self.ttilde * self.s

    @property
    def beta(self) -> float:
        t = self.physical_temperature
        return math.inf if t == 0 else 1.0 / t

    @property
    def beta_tilde(self) -> float:
        """Rescaled inverse temperature S * beta."""
        t = self.physical_temperature
        return math.inf if t == 0 else self.s / t

    def with_changes(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def spectral_density(omega, omega_c: float):
    """Ohmic spectral density with a Drude cutoff, J = (w/pi) wc^2 / (wc^2 + w^2)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise DomainError("spectral density is defined for omega >= 0")
    out = omega / math.pi * omega_c**2 / (omega_c**2 + omega**2)
    return out if out.ndim else float(out)


def noise_kernel(tau, omega_c: float):
    """eta(tau) = wc^2 exp(-wc tau) / 2, the sine transform of the spectral density."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("noise kernel is defined for tau >= 0")
    out = 0.5 * omega_c**2 * np.exp(-omega_c * tau)
    return out if out.ndim else float(out)


def nu1_from(temperature: float, omega_c: float) -> float:
    """First moment of the decoherence kernel at temperature T and cutoff omega_c."""
    if not temperature > 0:
        raise DomainError("nu1 diverges at zero temperature (digamma argument beta*omega_c/2pi -> inf)")
    x = omega_c / (2 * math.pi * temperature)
    return temperature / omega_c - (digamma(x + 1.0) - digamma(1.0)) / math.pi


def nu1(params: ModelParams) -> float:
    """nu1 for ``params``.

    Intensive regime: evaluated at the physical (T, omega_c).  Extensive
    regime: evaluated at (T~, omega_c), i.e. with the cutoff rescaled together
    with the temperature so that the value is independent of S.
    """
    if params.nu1_override is not None:
        return float(params.nu1_override)
    if params.regime == INTENSIVE:
        return nu1_from(params.temperature, params.omega_c)
    return nu1_from(params.ttilde, params.omega_c)


def bath_correlation_time(params: ModelParams) -> float:
    """tau_B = max(1/omega_c, beta/2pi)."""
    return max(1.0 / params.omega_c, params.beta / (2 * math.pi))


def check_markov_regime(params: ModelParams) -> float:
    """Warn when gamma * tau_B exceeds ``params.markov_threshold``; return gamma * tau_B."""
    ratio = params.gamma * bath_correlation_time(params)
    if ratio > params.markov_threshold:
        warnings.warn(
            f"gamma * tau_B = {ratio:.3g} exceeds {params.markov_threshold}; "
            "the Markov approximation may be poor",
            MarkovRegimeWarning,
            stacklevel=2,
        )
    return ratio


@dataclass(frozen=True)
class KappaMatrix:
    kxx: float
    kyy: float
    kxy: complex
    repaired: bool = False

    @property
    def kyx(self) -> complex:
        return complex(self.kxy).conjugate()

    def as_array(self) -> np.ndarray:
        return np.array([[self.kxx, self.kxy], [self.kyx, self.kyy]], dtype=complex)

    @property
    def det(self) -> float:
        return float(self.kxx * self.kyy - abs(self.kxy) ** 2)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())


def kappa_matrix(params: ModelParams, repair: bool = True) -> KappaMatrix:
    """Dissipator coefficients in the (Sx, Sy) basis.

    Unrepaired: (gamma/2S) [[4T, 2 nu1 - i], [2 nu1 + i, 0]], which has a
    negative determinant.  Repaired: kyy is raised to |kxy|^2 / kxx, the
    smallest change that makes the matrix positive semi-definite.  In the
    extensive regime kxx = 2 gamma T~.
    """
    if not params.gamma > 0:
        raise InvalidParameterError("kappa requires gamma > 0")
    if not params.s > 0:
        raise InvalidParameterError("kappa requires S > 0")
    n1 = nu1(params)
    pref = params.gamma / (2 * params.s)
    if params.regime == INTENSIVE:
        kxx = pref * 4 * params.temperature
    else:
        kxx = 2 * params.gamma * params.ttilde
    kxy = pref * complex(2 * n1, -1.0)
    if not repair:
        return KappaMatrix(kxx=kxx, kyy=0.0, kxy=kxy, repaired=False)
    if kxx == 0:
        raise DomainError("cannot repair kappa at zero temperature: kappa_xx = 0")
    return KappaMatrix(kxx=kxx, kyy=abs(kxy) ** 2 / kxx, kxy=kxy, repaired=True)


def jump_operator(ops: SpinOperators, kappa: KappaMatrix) -> np.ndarray:
    """Single jump operator L = sqrt(kxx) (Sx + (kyx / kxx) Sy) of the repaired dissipator."""
    if not kappa.repaired:
        raise ContractError("jump_operator requires a repaired (rank-one) kappa matrix")
    return math.sqrt(kappa.kxx) * (ops.sx + (kappa.kyx / kappa.kxx) * ops.sy)


def dissipator_two_index(ops: SpinOperators, kappa: KappaMatrix, rho: np.ndarray) -> np.ndarray:
    """sum_kl kappa_kl (S_k rho S_l - {S_l S_k, rho}/2) over k, l in {x, y}."""
    basis = (ops.sx, ops.sy)
    k = kappa.as_array()
    out = np.zeros_like(rho, dtype=complex)
    for i, sk in enumerate(basis):
        for j, sl in enumerate(basis):
            prod = sl @ sk
            out += k[i, j] * (sk @ rho @ sl - 0.5 * (prod @ rho + rho @ prod))
    return out


def dissipator_jump(jump: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """L rho L^dag - {L^dag L, rho}/2."""
    ldl = jump.conj().T @ jump
    return jump @ rho @ jump.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
