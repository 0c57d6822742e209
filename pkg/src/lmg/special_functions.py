"""Complete elliptic integrals, the Jacobi cn function and the digamma function.

Everything here is built from the arithmetic-geometric mean; no tabulated data
is used.  Elliptic functions take the parameter ``m = k**2``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Distance from m = 1 below which the hyperbolic (m -> 1) closed forms are used.
SEPARATRIX_EPS = 1e-12

# B_2k / (2k) for k = 1..7, the coefficients of x**(-2k) in the digamma series
_DIGAMMA_SERIES = (
    1 / 12,
    -1 / 120,
    1 / 252,
    -1 / 240,
    1 / 132,
    -691 / 32760,
    1 / 12,
)


@dataclass(frozen=True)
class EllipticPair:
    k2: float
    K: float
    E: float


def agm_sums(m: float, m1: float | None = None, tol: float = 1e-16):
    """Run the AGM for parameter ``m`` and return ``(K, sigma, tau)``.

    ``sigma = 1 - E/K = sum_{n>=0} 2**(n-1) c_n**2`` and ``tau = sigma - m/2``
    (the same sum without its n = 0 term).  The c_n are generated with the
    cancellation-free recurrence c_{n+1} = c_n**2 / (4 a_{n+1}), so both sums
    keep full relative precision for small ``m``.  Pass ``m1 = 1 - m`` when it
    is known more accurately than ``1 - m``.
    """
    if m1 is None:
        m1 = 1.0 - m
    a = 1.0
    b = math.sqrt(m1)
    c = math.sqrt(m)
    tau = 0.0
    weight = 0.5
    for _ in range(64):
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        c = c * c / (4 * a_next)
        a = a_next
        weight *= 2
        term = weight * c * c
        tau += term
        if c <= tol * a:
            break
    K = math.pi / (2 * a)
    return K, 0.5 * m + tau, tau


def complete_elliptic_KE(m: float, m1: float | None = None) -> EllipticPair:
    """Complete elliptic integrals K(m) and E(m) for 0 <= m < 1."""
    if m1 is None:
        m1 = 1.0 - m
    if not (0.0 <= m < 1.0) or m1 <= 0.0:
        raise DomainError(
            f"complete_elliptic_KE needs 0 <= m < 1, got m={m!r}; "
            "use the reciprocal-modulus form for m > 1"
        )
    if m1 < SEPARATRIX_EPS:
        K, E = _near_one_KE(m1)
        return EllipticPair(m, K, E)
    K, sigma, _ = agm_sums(m, m1)
    return EllipticPair(m, K, K * (1.0 - sigma))


def _near_one_KE(m1: float):
    """Leading logarithmic asymptotics of K and E as m -> 1 (m1 = 1 - m)."""
    log_term = math.log(4.0) - 0.5 * math.log(m1)
    K = log_term + 0.25 * m1 * (log_term - 1.0)
    E = 1.0 + 0.5 * m1 * (log_term - 0.5)
    return K, E


def jacobi_cn(u, m: float):
    """Jacobi elliptic cosine cn(u | m) for real ``u`` and ``m >= 0``.

    ``u`` may be an array.  For m > 1 the reciprocal-modulus identity
    cn(u | m) = dn(u sqrt(m) | 1/m) is used.
    """
    if m < 0:
        raise DomainError(f"jacobi_cn needs m >= 0, got {m!r}")
    u = np.asarray(u, dtype=float)
    if m == 0.0:
        return np.cos(u)
    if abs(m - 1.0) < SEPARATRIX_EPS:
        return 1.0 / np.cosh(u)
    if m > 1.0:
        _, _, dn = _sncndn(u * math.sqrt(m), 1.0 / m)
        return dn
    _, cn, _ = _sncndn(u, m)
    return cn


def _sncndn(u: np.ndarray, m: float):
    # Descending Landen / AGM scheme (DLMF 22.20(ii)).
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > 1e-16 * a[-1] and len(a) < 40:
        a_next = 0.5 * (a[-1] + b)
        c.append(0.5 * (a[-1] - b))
        b = math.sqrt(a[-1] * b)
        a.append(a_next)
    n = len(a) - 1
    phi = (2.0**n) * a[n] * u
    phi_prev = phi
    for j in range(n, 0, -1):
        phi_prev = phi
        phi = 0.5 * (phi + np.arcsin(np.clip(c[j] / a[j] * np.sin(phi), -1.0, 1.0)))
    # phi now holds phi_0 and phi_prev holds phi_1
    sn = np.sin(phi)
    cn = np.cos(phi)
    if n == 0:
        dn = np.ones_like(phi)
    else:
        dn = cn / np.cos(phi_prev - phi)
    return sn, cn, dn


def digamma(x: float) -> float:
    """psi(x) for real x > 0: upward recurrence to x > 8, then the asymptotic series."""
    if not x > 0:
        raise DomainError(f"digamma is only implemented for x > 0, got {x!r}")
    shift = 0.0
    while x <= 8.0:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coef in _DIGAMMA_SERIES:
        series += coef * power
        power *= inv2
    return math.log(x) - 0.5 / x - series - shift
