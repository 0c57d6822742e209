"""Dissipative Lipkin-Meshkov-Glick model: exact finite-S Lindblad dynamics,
semiclassical equations of motion, the averaged slow energy flow, and thermal
reference states."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ContractError,
    ContractWarning,
    DomainError,
    FitQualityError,
    IntegrationError,
    InvalidParameterError,
    LMGError,
    MarkovRegimeWarning,
    NumericError,
    ResourceError,
)
from .spin_algebra import SpinOperators, build_spin_operators, lmg_hamiltonian
from .bath import KappaMatrix, ModelParams, jump_operator, kappa_matrix, nu1
from .lindblad import (
    Superoperator,
    build_adjoint_lindbladian,
    build_lindbladian,
    evolve_observable,
    evolve_state,
    liouvillian_spectrum,
    spectral_gap,
    stationarity_residual,
)
from .semiclassical import ClassicalState, ground_energy, integrate_classical
from .slowflow import dissipation_A, dissipation_rate, eigenvalue_flow, elliptic_parameters
from .thermal import GibbsState, coherent_state, gibbs_expectation, gibbs_state
