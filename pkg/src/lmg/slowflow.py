"""Averaged slow dynamics of the classical energy.

At zeroth order in gamma the x coordinate performs the undamped oscillation
x(tau) = a cn(Omega tau + u, k**2) at fixed energy h0.  Averaging the energy
loss over one period gives the slow flow d h0 / ds = -A(h0) with s = gamma t
and A(h0) the period average of xdot**2.

All closed forms are written so that they stay accurate at the special
energies: h0 = 1 and h0 = -1 for lam <= 1 (a = 0), the well bottom
h0 = eps_g for lam > 1 (Omega = 0) and the separatrix h0 = -1 for lam > 1
(k**2 = 1).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, FitQualityError, IntegrationError, InvalidParameterError
from .semiclassical import ground_energy
from .special_functions import SEPARATRIX_EPS, _near_one_KE, agm_sums, jacobi_cn

# Below this distance from k**2 = 1 the AGM sums are replaced by the m -> 1 asymptotics.
NEAR_SEPARATRIX = 1e-6
DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class SlowFlowState:
    h0: float
    a2: float
    omega: float
    k2: float
    one_minus_k2: float
    lam: float
    u: float = 0.0

    @property
    def a(self) -> float:
        return math.sqrt(self.a2)

    def trajectory(self, tau) -> np.ndarray:
        """Fast oscillation x(tau) = a cn(Omega tau + u, k**2)."""
        tau = np.asarray(tau, dtype=float)
        if self.a2 == 0:
            return np.zeros_like(tau)
        if math.isinf(self.k2):
            return np.full_like(tau, self.a)
        return self.a * jacobi_cn(self.omega * tau + self.u, self.k2)


def _check_lambda(lam: float) -> float:
    if not (np.isfinite(lam) and lam >= 0):
        raise InvalidParameterError(f"the slow flow is implemented for finite lam >= 0, got {lam!r}")
    return float(lam)


def _check_energy(h0: float, lam: float) -> float:
    eps_g = ground_energy(lam)
    if not (eps_g - DOMAIN_TOL <= h0 <= 1.0 + DOMAIN_TOL):
        raise DomainError(f"h0={h0!r} lies outside the spectral range [eps_g, 1] = [{eps_g:.12g}, 1]")
    return min(max(float(h0), eps_g), 1.0)


def elliptic_parameters(h0: float, lam: float) -> SlowFlowState:
    """Amplitude a**2, frequency Omega and parameter k**2 of the oscillation at energy h0.

    a**2 = 2(-1 - h0 lam + sqrt(D)) / lam**2,  Omega**2 = sqrt(D),
    k**2 = a**2 lam**2 / (4 Omega**2),  with D = lam**2 + 2 h0 lam + 1.
    """
    lam = _check_lambda(lam)
    h0 = _check_energy(h0, lam)
    p = 1.0 + h0 * lam
    one_minus_h2 = (1.0 - h0) * (1.0 + h0)
    disc = max(lam * lam + 2.0 * h0 * lam + 1.0, 0.0)
    root = math.sqrt(disc)
    if p < 0:
        a2 = 2.0 * (root - p) / (lam * lam)
    elif root + p > 0:
        # rationalized form, exact at lam = 0 and free of cancellation near h0 = 1
        a2 = 2.0 * one_minus_h2 / (root + p)
    else:
        a2 = 0.0
    a2 = max(a2, 0.0)
    omega = math.sqrt(root)
    if root == 0.0:
        k2 = math.inf if a2 > 0 else 0.0
        one_minus_k2 = -math.inf if a2 > 0 else 1.0
    else:
        k2 = a2 * lam * lam / (4.0 * root)
        if p >= 0:
            one_minus_k2 = (root + p) / (2.0 * root)
        else:
            one_minus_k2 = one_minus_h2 / (a2 * root)
    return SlowFlowState(h0=h0, a2=a2, omega=omega, k2=k2, one_minus_k2=one_minus_k2, lam=lam)


def _reciprocal_parameter(st: SlowFlowState):
    """m = 1/k**2 and 1 - m for the k**2 > 1 branch."""
    if math.isinf(st.k2):
        return 0.0, 1.0
    return 1.0 / st.k2, -st.one_minus_k2 / st.k2


def oscillation_period(state: SlowFlowState) -> float:
    """4K(k**2)/Omega below the separatrix, inf on it, 2K(1/k**2)/(Omega k) above."""
    if abs(state.one_minus_k2) < SEPARATRIX_EPS:
        return math.inf
    if state.one_minus_k2 > 0:
        if state.omega == 0:
            return math.inf
        K, _, _ = agm_sums(state.k2, state.one_minus_k2)
        return 4.0 * K / state.omega
    m, m1 = _reciprocal_parameter(state)
    K, _, _ = agm_sums(m, m1)
    # Omega k = a lam / 2 stays finite at the well bottom where Omega -> 0
    return 2.0 * K / (0.5 * state.a * state.lam)


def _A_from_state(st: SlowFlowState) -> float:
    if st.a2 == 0.0 or st.omega == 0.0:
        return 0.0
    gap = st.one_minus_k2
    if abs(gap) < SEPARATRIX_EPS:
        return 0.0
    scale = st.a2 * st.omega**2 / 3.0
    if gap > 0:
        m, m1 = st.k2, gap
        if m1 < NEAR_SEPARATRIX:
            K, E = _near_one_KE(m1)
            return scale * ((2.0 * m - 1.0) * E / K + m1) / m
        if m == 0.0:
            return 1.5 * scale
        _, sigma, tau = agm_sums(m, m1)
        # sigma/m = 1/2 + tau/m keeps full precision as m -> 0
        return scale * (1.0 + (1.0 - 2.0 * m) * (0.5 + tau / m))
    m, m1 = _reciprocal_parameter(st)
    if m1 < NEAR_SEPARATRIX:
        K, E = _near_one_KE(m1)
        return scale * ((2.0 - m) * E / K - 2.0 * m1) / m
    if m == 0.0:
        return 0.0
    _, sigma, tau = agm_sums(m, m1)
    return scale * (sigma - 2.0 * tau / m)


def dissipation_A(h0: float, lam: float) -> float:
    """Period average of xdot**2 at energy h0, via the closed elliptic-integral form.

    Written with the AGM sums sigma = 1 - E/K and tau = sigma - m/2:
    below the separatrix A = (a**2 Omega**2 / 3) [1 + (1 - 2m) sigma/m] with
    m = k**2; above it A = (a**2 Omega**2 / 3) [sigma - 2 tau/m] with m = 1/k**2.
    """
    return max(_A_from_state(elliptic_parameters(h0, lam)), 0.0)


def dissipation_rate(lam: float) -> float:
    """Near-equilibrium decay rate of h in units of gamma: 1, 4/3 at lam = 1, 1/lam."""
    if lam < 1.0:
        return 1.0
    if lam == 1.0:
        return 4.0 / 3.0
    return 1.0 / lam


def basin_floor(eps0: float, lam: float) -> float:
    """Lowest energy reachable by the slow flow from eps0.

    For lam > 1 the separatrix energy -1 is a fixed point that trajectories
    from above cannot cross.
    """
    eps_g = ground_energy(lam)
    if lam > 1.0 and eps0 > -1.0:
        return -1.0
    return eps_g


def eigenvalue_flow(eps0: float, lam: float, s_grid, rtol: float = 1e-10, atol: float = 1e-16) -> np.ndarray:
    """Solve d eps/ds = -A(eps) on ``s_grid`` (s = gamma t), clipped to the basin of eps0.

    The solver works with the offset eps - floor so that the relative
    tolerance still resolves the exponential approach to the fixed point.
    """
    lam = _check_lambda(lam)
    eps0 = _check_energy(eps0, lam)
    s = np.asarray(s_grid, dtype=float).ravel()
    if s.size == 0 or np.any(np.diff(s) <= 0):
        raise InvalidParameterError("s grid must be non-empty and strictly increasing")
    floor = basin_floor(eps0, lam)
    top = eps0 - floor

    def rhs(_, d):
        value = min(d[0], top)
        if value <= 0.0:
            return [0.0]
        return [-dissipation_A(floor + value, lam)]

    if s.size == 1 or top == 0.0:
        return np.full(s.size, eps0)
    sol = solve_ivp(rhs, (s[0], s[-1]), [top], t_eval=s, method="RK45", rtol=rtol, atol=atol)
    if sol.status != 0:
        last = float(sol.t[-1]) if sol.t.size else float(s[0])
        raise IntegrationError(f"slow-flow integration failed: {sol.message}", last)
    offset = np.clip(sol.y[0], 0.0, top)
    # a scalar autonomous flow is monotone; remove solver jitter at the floor
    return floor + np.minimum.accumulate(offset)


@dataclass(frozen=True)
class TailFit:
    rate: float
    rate_over_gamma: float
    offset: float
    amplitude: float
    r_squared: float
    n_points: int


def exponential_tail(
    t,
    h,
    lam: float,
    gamma: float,
    window: float = 0.1,
    floor: float = 1e-9,
    min_r_squared: float = 0.99,
) -> TailFit:
    """Fit <h>(t) = eps_g + C exp(-rate t) on the near-equilibrium part of a series.

    The rate comes from a least-squares line through log|h - eps_g| on the
    points with floor < |h - eps_g| < window.  ``offset`` is eps_inf - eps_g
    from a second linear fit of h = eps_inf + C exp(-rate t) at that rate.
    """
    t = np.asarray(t, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    if t.shape != h.shape:
        raise InvalidParameterError("t and h must have the same length")
    if not gamma > 0:
        raise InvalidParameterError("gamma must be > 0")
    eps_g = ground_energy(lam)
    dev = np.abs(h - eps_g)
    mask = (dev < window) & (dev > floor)
    n = int(mask.sum())
    if n < 3:
        raise FitQualityError(f"only {n} points inside the near-equilibrium window", 0.0)
    tt, yy = t[mask], np.log(dev[mask])
    slope, intercept = np.polyfit(tt, yy, 1)
    resid = yy - (slope * tt + intercept)
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    if r2 < min_r_squared:
        raise FitQualityError("series is not yet in the exponential (log-linear) regime", r2)
    rate = -slope
    design = np.column_stack([np.ones(n), np.exp(-rate * (tt - tt[0]))])
    (eps_inf, amp), *_ = np.linalg.lstsq(design, h[mask], rcond=None)
    return TailFit(
        rate=float(rate),
        rate_over_gamma=float(rate / gamma),
        offset=float(eps_inf - eps_g),
        amplitude=float(amp * math.exp(rate * tt[0])),
        r_squared=r2,
        n_points=n,
    )
