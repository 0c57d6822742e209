"""Lindbladian superoperators for the LMG spin coupled to the bath.

A superoperator is stored in the normal form

    X  ->  left @ X + X @ right + sum_jk coeffs[j, k] * B_j @ X @ B_k,   B = (Sx, Sy),

which is enough for every generator used here.  The action on a d x d matrix
then costs a few dense d x d products; the d^2 x d^2 matrix is only formed on
request (spectra, exact propagation).

Vectorization is column stacking: vec(A X B) = (B^T kron A) vec(X).
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, eigs, expm_multiply

from .bath import (
    EXTENSIVE,
    KappaMatrix,
    ModelParams,
    check_markov_regime,
    dissipator_jump,
    jump_operator,
    kappa_matrix,
)
from .errors import ContractError, IntegrationError, InvalidParameterError, NumericError, ResourceError
from .spin_algebra import SpinOperators, lmg_hamiltonian

# d^2 <= 40401, i.e. S <= 100
MAX_DIM2 = 40401
EXACT_EIG_MAX_DIM2 = 4096
DENSE_SPECTRUM_MAX_DIM2 = 6561
PROPAGATOR_CACHE = 4

FORMS = ("gksl", "variant")


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class Superoperator:
    dim: int
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    basis: tuple = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    regime: str = "intensive"
    form: str = "gksl"
    adjoint_of: bool = False

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = self.left @ x + x @ self.right
        products = [b @ x for b in self.basis]
        for j, bx in enumerate(products):
            for k, b in enumerate(self.basis):
                c = self.coeffs[j, k]
                if c != 0:
                    out += c * (bx @ b)
        return out

    __call__ = apply

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return vec(self.apply(unvec(v, self.dim)))

    @cached_property
    def matrix(self) -> np.ndarray:
        eye = np.eye(self.dim)
        m = np.kron(eye, self.left) + np.kron(self.right.T, eye)
        for j, bj in enumerate(self.basis):
            for k, bk in enumerate(self.basis):
                if self.coeffs[j, k] != 0:
                    m += self.coeffs[j, k] * np.kron(bk.T, bj)
        return m

    @cached_property
    def eigensystem(self):
        """(eigenvalues, right eigenvectors, eigenvector condition number) of the dense matrix."""
        w, v = np.linalg.eig(self.matrix)
        return w, v, float(np.linalg.cond(v))

    @cached_property
    def _propagators(self) -> list:
        return []

    def propagator(self, dt: float) -> np.ndarray:
        """Dense exp(dt L) by scaling and squaring; the last few steps are cached."""
        for key, value in self._propagators:
            if abs(key - dt) <= 1e-12 * abs(dt):
                return value
        value = sla.expm(self.matrix * dt)
        self._propagators.append((dt, value))
        del self._propagators[:-PROPAGATOR_CACHE]
        return value

    def trace(self) -> complex:
        """Trace of the d^2 x d^2 matrix without forming it."""
        d = self.dim
        t = d * np.trace(self.left) + d * np.trace(self.right)
        for j, bj in enumerate(self.basis):
            for k, bk in enumerate(self.basis):
                t += self.coeffs[j, k] * np.trace(bk) * np.trace(bj)
        return complex(t)

    def adjoint(self) -> "Superoperator":
        """Hilbert-Schmidt adjoint, derived term by term from the normal form."""
        return Superoperator(
            dim=self.dim,
            left=self.left.conj().T,
            right=self.right.conj().T,
            basis=tuple(b.conj().T for b in self.basis),
            coeffs=self.coeffs.conj(),
            regime=self.regime,
            form=self.form,
            adjoint_of=not self.adjoint_of,
        )

    def as_linear_operator(self) -> LinearOperator:
        adj = self.adjoint()
        n = self.dim**2
        return LinearOperator((n, n), matvec=self.matvec, rmatvec=adj.matvec, dtype=complex)

    def frobenius_norm_estimate(self) -> float:
        """Cheap upper bound on the operator norm (used for tolerances only)."""
        d = self.dim
        bound = np.linalg.norm(self.left, 2) + np.linalg.norm(self.right, 2)
        norms = [np.linalg.norm(b, 2) for b in self.basis]
        for j in range(len(self.basis)):
            for k in range(len(self.basis)):
                bound += abs(self.coeffs[j, k]) * norms[j] * norms[k]
        return float(bound) if d else 0.0


class _TermCollector:
    """Accumulates commutator expressions into the normal form."""

    def __init__(self, ops: SpinOperators):
        self.ops = ops
        self.basis = (ops.sx, ops.sy)
        d = ops.dim
        self.left = np.zeros((d, d), dtype=complex)
        self.right = np.zeros((d, d), dtype=complex)
        self.coeffs = np.zeros((2, 2), dtype=complex)

    def commutator_with(self, h: np.ndarray, c: complex):
        """c [h, X]"""
        self.left += c * h
        self.right -= c * h

    def double_commutator(self, j: int, k: int, c: complex):
        """c [B_j, [B_k, X]]"""
        a, b = self.basis[j], self.basis[k]
        self.left += c * (a @ b)
        self.right += c * (b @ a)
        self.coeffs[j, k] -= c
        self.coeffs[k, j] -= c

    def comm_anticomm(self, j: int, k: int, c: complex):
        """c [B_j, {B_k, X}]"""
        a, b = self.basis[j], self.basis[k]
        self.left += c * (a @ b)
        self.right -= c * (b @ a)
        self.coeffs[j, k] += c
        self.coeffs[k, j] -= c

    def anticomm_comm(self, j: int, k: int, c: complex):
        """c {B_j, [B_k, X]}"""
        a, b = self.basis[j], self.basis[k]
        self.left += c * (a @ b)
        self.right -= c * (b @ a)
        self.coeffs[j, k] -= c
        self.coeffs[k, j] += c

    def build(self, regime: str, form: str, adjoint_of: bool) -> Superoperator:
        return Superoperator(
            dim=self.ops.dim,
            left=self.left,
            right=self.right,
            basis=self.basis,
            coeffs=self.coeffs,
            regime=regime,
            form=form,
            adjoint_of=adjoint_of,
        )


X, Y = 0, 1


def _prepare(ops: SpinOperators, params: ModelParams, form: str, max_dim2: int):
    if form not in FORMS:
        raise InvalidParameterError(f"unknown Lindbladian form {form!r}; expected one of {FORMS}")
    if abs(ops.s - params.s) > 1e-12:
        raise ContractError(f"spin operators are for S={ops.s}, parameters for S={params.s}")
    if ops.dim**2 > max_dim2:
        raise ResourceError(f"superoperator dimension {ops.dim**2} exceeds the cap {max_dim2}")
    h = lmg_hamiltonian(ops, params.lam)
    if params.gamma == 0:
        return h, None
    check_markov_regime(params)
    return h, kappa_matrix(params, repair=True)


def _dissipative_coefficients(kappa: KappaMatrix, form: str):
    """(anticommutator, xx, yy, cross) coefficients for the chosen form."""
    b = kappa.kyx.imag
    a = kappa.kxy.real
    if form == "gksl":
        return b, kappa.kxx / 2, kappa.kyy / 2, a
    return b, kappa.kxx / 2, kappa.kyy, a


def build_lindbladian(
    ops: SpinOperators, params: ModelParams, form: str = "gksl", max_dim2: int = MAX_DIM2
) -> Superoperator:
    """Schroedinger-picture generator L with d rho/dt = L rho.

    Both forms share

        i[rho, H] - i Im(k_yx) [Sx, {Sy, rho}] - (k_xx/2) [Sx, [Sx, rho]]

    and differ in the last two terms:

    ``"gksl"``    - (k_yy/2) [Sy, [Sy, rho]] - Re(k_xy) [Sx, [Sy, rho]]
    ``"variant"`` - k_yy [Sy, [Sy, rho]] + 2 Re(k_xy) [Sy, [Sx, rho]]

    with the repaired k_yy = |k_xy|^2 / k_xx.  The ``"gksl"`` form equals
    i[rho, H + H_gamma] + L rho L^dag - {L^dag L, rho}/2 with the single jump
    operator L and is completely positive; the ``"variant"`` coefficients give a
    sandwich matrix with determinant proportional to 1/4 - 2 nu1^2 and are not
    completely positive for |nu1| > 1/sqrt(8).
    """
    h, kappa = _prepare(ops, params, form, max_dim2)
    terms = _TermCollector(ops)
    terms.commutator_with(h, -1j)
    if kappa is not None:
        anti, cxx, cyy, cross = _dissipative_coefficients(kappa, form)
        terms.comm_anticomm(X, Y, -1j * anti)
        terms.double_commutator(X, X, -cxx)
        terms.double_commutator(Y, Y, -cyy)
        if form == "gksl":
            terms.double_commutator(X, Y, -cross)
        else:
            terms.double_commutator(Y, X, 2 * cross)
    return terms.build(params.regime, form, adjoint_of=False)


def build_adjoint_lindbladian(
    ops: SpinOperators, params: ModelParams, form: str = "gksl", max_dim2: int = MAX_DIM2
) -> Superoperator:
    """Heisenberg-picture generator with dA/dt = L^dag A.

    Written out term by term (not by transposing ``build_lindbladian``):

        i[H, A] + i Im(k_yx) {Sy, [Sx, A]} - (k_xx/2) [Sx, [Sx, A]] + ...

    with the cross term's commutators in swapped order.
    """
    h, kappa = _prepare(ops, params, form, max_dim2)
    terms = _TermCollector(ops)
    terms.commutator_with(h, 1j)
    if kappa is not None:
        anti, cxx, cyy, cross = _dissipative_coefficients(kappa, form)
        terms.anticomm_comm(Y, X, 1j * anti)
        terms.double_commutator(X, X, -cxx)
        terms.double_commutator(Y, Y, -cyy)
        if form == "gksl":
            terms.double_commutator(Y, X, -cross)
        else:
            terms.double_commutator(X, Y, 2 * cross)
    return terms.build(params.regime, form, adjoint_of=True)


def lamb_shift_hamiltonian(ops: SpinOperators, kappa: KappaMatrix) -> np.ndarray:
    """H_gamma = (Im k_yx / 2) {Sx, Sy} + (Re k_xy / 2) Sz."""
    anti = ops.sx @ ops.sy + ops.sy @ ops.sx
    return 0.5 * kappa.kyx.imag * anti + 0.5 * kappa.kxy.real * ops.sz


def apply_jump_form(ops: SpinOperators, params: ModelParams, rho: np.ndarray) -> np.ndarray:
    """i[rho, H + H_gamma] + L rho L^dag - {L^dag L, rho}/2, evaluated directly."""
    h = lmg_hamiltonian(ops, params.lam)
    kappa = kappa_matrix(params, repair=True)
    h_total = h + lamb_shift_hamiltonian(ops, kappa)
    return 1j * (rho @ h_total - h_total @ rho) + dissipator_jump(jump_operator(ops, kappa), rho)


def lindblad_basis(ops: SpinOperators):
    """Traceless, Hilbert-Schmidt orthonormal operators Sx/n, Sy/n."""
    norm = math.sqrt(ops.s * (ops.s + 1) * (2 * ops.s + 1) / 3)
    return ops.sx / norm, ops.sy / norm


# ---------------------------------------------------------------- evolution


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidParameterError("density matrix must be square")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise InvalidParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidParameterError(f"density matrix trace is {np.trace(rho).real:.3g}, not 1")
    return rho


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        raise InvalidParameterError("time grid is empty")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise InvalidParameterError("time grid must be strictly increasing and start at t >= 0")
    return t


def _propagate(
    L: Superoperator, x0: np.ndarray, t: np.ndarray, method: str, rtol: float, atol: float
) -> np.ndarray:
    d = L.dim
    if x0.shape != (d, d):
        raise InvalidParameterError(f"expected a {d}x{d} matrix, got shape {x0.shape}")
    if method == "auto":
        method = "eig" if d * d <= EXACT_EIG_MAX_DIM2 else "expm"
    if method == "eig":
        out = _propagate_eig(L, x0, t)
        if out is not None:
            return out
        method = "dense" if d * d <= EXACT_EIG_MAX_DIM2 else "expm"
    if method == "dense":
        return _propagate_dense(L, x0, t)
    if method == "expm":
        return _propagate_expm(L, x0, t)
    if method == "rk45":
        return _propagate_rk45(L, x0, t, rtol, atol)
    raise InvalidParameterError(f"unknown evolution method {method!r}")


def _propagate_rk45(L, x0, t, rtol, atol):
    d = L.dim

    def rhs(_, y):
        return L.matvec(y)

    t_end = t[-1]
    if t_end == 0:
        return np.repeat(x0[None], len(t), axis=0)
    sol = solve_ivp(rhs, (0.0, t_end), vec(x0).astype(complex), method="RK45", t_eval=t, rtol=rtol, atol=atol)
    if sol.status != 0 or sol.y.shape[1] != len(t):
        last = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"RK45 integration failed: {sol.message}", last)
    # rows of sol.y.T are column-stacked vectors
    return np.stack([unvec(v, d) for v in sol.y.T])


def _propagate_eig(L, x0, t, max_cond: float = 1e10):
    d = L.dim
    w, v, cond = L.eigensystem
    if cond > max_cond:
        return None
    coef = np.linalg.solve(v, vec(x0))
    phases = np.exp(np.outer(t, w))
    states = (phases * coef) @ v.T
    return np.stack([unvec(s, d) for s in states])


def _propagate_dense(L, x0, t):
    d = L.dim
    current = vec(x0).astype(complex)
    out = []
    previous = 0.0
    for ti in t:
        if ti > previous:
            current = L.propagator(ti - previous) @ current
        out.append(current)
        previous = ti
    return np.stack([unvec(s, d) for s in out])


def _propagate_expm(L, x0, t):
    d = L.dim
    op = L.as_linear_operator()
    tr = L.trace()
    v0 = vec(x0).astype(complex)
    steps = np.diff(np.concatenate([[0.0], t]))
    uniform = len(t) > 1 and t[0] == 0 and np.allclose(steps[1:], steps[1], rtol=1e-12, atol=0)
    if uniform:
        vs = expm_multiply(op, v0, start=0.0, stop=t[-1], num=len(t), endpoint=True, traceA=tr)
    else:
        vs = []
        current = v0
        for dt in steps:
            if dt > 0:
                current = expm_multiply(op * dt, current, traceA=tr * dt)
            vs.append(current)
        vs = np.array(vs)
    if not np.all(np.isfinite(vs)):
        raise NumericError("matrix exponential action produced non-finite values")
    return np.stack([unvec(s, d) for s in vs])


def evolve_state(
    L: Superoperator,
    rho0: np.ndarray,
    t_grid,
    method: str = "auto",
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> np.ndarray:
    """Solve d rho/dt = L rho and return rho(t) for every t in ``t_grid``.

    Methods: ``"rk45"`` (adaptive Dormand-Prince 5(4) with dense output),
    ``"eig"`` (exact action through the eigendecomposition of the
    superoperator, computed once per generator; falls back to ``"dense"``
    when the eigenbasis is badly conditioned), ``"dense"`` (stepping with
    cached scaling-and-squaring propagators exp(dt L)), ``"expm"`` (exact
    action through a truncated-Taylor matrix-exponential-times-vector
    scheme, matrix free).  ``"auto"`` uses
    ``"eig"`` for d^2 <= 4096 and ``"expm"`` above.

    Returns an array of shape (len(t_grid), d, d).
    """
    if L.adjoint_of:
        raise ContractError("evolve_state needs a Schroedinger-picture generator")
    rho0 = check_density_matrix(rho0)
    t = _check_grid(t_grid)
    out = _propagate(L, rho0, t, method, rtol, atol)
    if t[0] == 0:
        out[0] = rho0
    return out


def evolve_observable(
    Ladj: Superoperator,
    a0: np.ndarray,
    t_grid,
    method: str = "auto",
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> np.ndarray:
    """Solve dA/dt = L^dag A; same methods and return shape as ``evolve_state``."""
    if not Ladj.adjoint_of:
        raise ContractError("evolve_observable needs an adjoint (Heisenberg-picture) generator")
    a0 = np.asarray(a0, dtype=complex)
    t = _check_grid(t_grid)
    out = _propagate(Ladj, a0, t, method, rtol, atol)
    if t[0] == 0:
        out[0] = a0
    return out


def expectation(rho: np.ndarray, a: np.ndarray) -> complex:
    return complex(np.trace(np.asarray(a) @ np.asarray(rho)))


# ---------------------------------------------------------------- spectra


def _sort_by_real_part(w: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.abs(w).max()))
    tol = 1e-10 * scale
    key_real = -np.round(w.real / tol)
    return w[np.lexsort((np.abs(w.imag), key_real))]


def liouvillian_spectrum(
    L: Superoperator,
    count: int | None = None,
    method: str = "auto",
    tau: float = 10.0,
) -> np.ndarray:
    """Eigenvalues of L sorted by descending real part.

    ``method="dense"`` diagonalizes the full matrix (d^2 <= 6561 under
    ``"auto"``); ``"arnoldi"`` runs an implicitly restarted Arnoldi iteration
    on the propagator exp(tau L) and maps the ``count`` dominant eigenvalues
    back with log(mu)/tau.  Their real parts are exact; imaginary parts are
    only determined modulo 2 pi / tau.
    """
    n = L.dim**2
    if method == "auto":
        method = "dense" if n <= DENSE_SPECTRUM_MAX_DIM2 else "arnoldi"
    if method == "dense":
        try:
            w = sla.eigvals(L.matrix, overwrite_a=False, check_finite=True)
        except (sla.LinAlgError, ValueError) as exc:
            raise NumericError(f"dense eigensolver failed: {exc}") from exc
        w = _sort_by_real_part(w)
        _check_zero_mode(w, L)
        return w if count is None else w[:count]
    if method == "arnoldi":
        k = max(2, count or 2)
        op = L.as_linear_operator()
        tr = L.trace()

        def prop(v):
            return expm_multiply(op * tau, v, traceA=tr * tau)

        P = LinearOperator((n, n), matvec=prop, dtype=complex)
        try:
            mu = eigs(P, k=k, which="LM", return_eigenvectors=False, tol=1e-10, maxiter=5000)
        except Exception as exc:  # ArpackNoConvergence and friends
            raise NumericError(f"Arnoldi iteration did not converge: {exc}") from exc
        w = _sort_by_real_part(np.log(mu.astype(complex)) / tau)
        return w[:k]
    raise InvalidParameterError(f"unknown spectrum method {method!r}")


def _check_zero_mode(w: np.ndarray, L: Superoperator):
    by_modulus = w[np.argmin(np.abs(w))]
    scale = max(1.0, L.frobenius_norm_estimate())
    if abs(by_modulus) > 1e-8 * scale:
        raise NumericError(f"no zero eigenvalue found (smallest |lambda| = {abs(by_modulus):.3g})")
    if abs(w[0].real - by_modulus.real) > 1e-8 * scale:
        raise NumericError("largest-real-part and smallest-modulus eigenvalues disagree")


def spectral_gap(L: Superoperator, method: str = "auto") -> float:
    """-Re lambda_1, the distance of the first decaying mode from the imaginary axis."""
    w = liouvillian_spectrum(L, count=2, method=method)
    return float(-w[1].real)


def stationary_state(L: Superoperator) -> np.ndarray:
    """Trace-normalized eigenvector of the eigenvalue closest to zero."""
    w, v = np.linalg.eig(L.matrix)
    idx = int(np.argmin(np.abs(w)))
    rho = unvec(v[:, idx], L.dim)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def stationarity_residual(
    ops: SpinOperators, params: ModelParams, beta_tilde: float | None = None, form: str = "gksl"
) -> float:
    """Relative Frobenius norm ||L exp(-bt h)|| / ||exp(-bt h)|| with h = H/S.

    ``beta_tilde`` defaults to 1/T~ of ``params``.
    """
    if params.regime != EXTENSIVE:
        raise ContractError("stationarity_residual is defined for the extensive-temperature regime")
    if beta_tilde is None:
        beta_tilde = 1.0 / params.ttilde
    L = build_lindbladian(ops, params, form=form)
    h = lmg_hamiltonian(ops, params.lam) / ops.s
    evals, evecs = np.linalg.eigh(h)
    weights = np.exp(-beta_tilde * (evals - evals.min()))
    rho = (evecs * weights) @ evecs.conj().T
    return float(np.linalg.norm(L.apply(rho)) / np.linalg.norm(rho))
