"""Angular-momentum matrices for a single spin S in the S_z eigenbasis.

The basis is ordered by descending S_z eigenvalue, m = S, S-1, ..., -S, and
every other module inherits this ordering.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


def _check_half_integer(s) -> float:
    try:
        two_s = 2 * float(s)
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"spin must be a number, got {s!r}") from exc
    if not np.isfinite(two_s) or two_s < 0 or abs(two_s - round(two_s)) > 1e-12:
        raise InvalidParameterError(f"spin must be a non-negative half-integer, got {s!r}")
    return round(two_s) / 2


@dataclass(frozen=True)
class SpinOperators:
    """Dense spin-S matrices (S_x, S_y, S_z) and the identity."""

    s: float
    sx: np.ndarray = field(repr=False)
    sy: np.ndarray = field(repr=False)
    sz: np.ndarray = field(repr=False)
    identity: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.sx.shape[0]

    def casimir(self) -> np.ndarray:
        return self.sx @ self.sx + self.sy @ self.sy + self.sz @ self.sz

    def components(self):
        return self.sx, self.sy, self.sz


def build_spin_operators(s) -> SpinOperators:
    """Return the spin-``s`` matrices, with ``sz = diag(s, s-1, ..., -s)``."""
    s = _check_half_integer(s)
    dim = int(round(2 * s)) + 1
    m = s - np.arange(dim)
    # <m+1| S_+ |m> = sqrt(s(s+1) - m(m+1)), placed above the diagonal
    raising = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1)
    sx = (raising + raising.T) / 2
    sy = (raising - raising.T) / 2j
    ops = SpinOperators(
        s=s,
        sx=sx.astype(complex),
        sy=sy.astype(complex),
        sz=np.diag(m).astype(complex),
        identity=np.eye(dim, dtype=complex),
    )
    for arr in (ops.sx, ops.sy, ops.sz, ops.identity):
        arr.setflags(write=False)
    return ops


def lmg_hamiltonian(ops: SpinOperators, lam: float) -> np.ndarray:
    """H = -(lam / 2S) Sx^2 - Sz."""
    if not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be finite, got {lam!r}")
    if ops.s == 0:
        return -ops.sz.copy()
    return -(lam / (2 * ops.s)) * (ops.sx @ ops.sx) - ops.sz


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a
