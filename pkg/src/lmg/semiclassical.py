"""Large-S classical dynamics of the rescaled spin (x, y, z) = <S>/S.

The damped equations of motion are

    x' = y,   y' = (lam z - 1) x - gamma z y,   z' = -lam x y + gamma y**2,

which conserve x**2 + y**2 + z**2 and dissipate the energy h = -lam x**2/2 - z
at the rate h' = -gamma x'**2.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

from .errors import IntegrationError, InvalidParameterError

PROJECTION_INTERVAL = 100
# below the 1e-9 sphere tolerance so the invariant holds on long runs
PROJECTION_TRIGGER = 5e-10


@dataclass(frozen=True)
class ClassicalState:
    x: float
    y: float
    z: float

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "ClassicalState":
        return cls(math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def energy(self, lam: float) -> float:
        return energy(self.x, self.z, lam)


@dataclass(frozen=True)
class EnergyState:
    """Reduced coordinates (h, x, xdot); y = xdot and z = -(lam x**2/2 + h)."""

    h: float
    x: float
    xdot: float

    @classmethod
    def on_shell(cls, h: float, x: float, lam: float, sign: float = 1.0) -> "EnergyState":
        """Choose xdot from the sphere constraint xdot**2 = 1 - (lam x**2/2 + h)**2 - x**2."""
        v2 = 1.0 - (0.5 * lam * x * x + h) ** 2 - x * x
        if v2 < -1e-12:
            raise InvalidParameterError(f"(h={h}, x={x}) is not on the sphere for lam={lam}")
        return cls(h, x, math.copysign(math.sqrt(max(v2, 0.0)), sign))

    def constraint_residual(self, lam: float) -> float:
        return self.xdot**2 - (1.0 - (0.5 * lam * self.x**2 + self.h) ** 2 - self.x**2)

    def to_classical(self, lam: float) -> ClassicalState:
        return ClassicalState(self.x, self.xdot, -(0.5 * lam * self.x**2 + self.h))


def energy(x, z, lam: float):
    return -0.5 * lam * np.square(x) - z


def eom_rhs(state, lam: float, gamma: float) -> np.ndarray:
    """Time derivative of (x, y, z); accepts a ClassicalState or a length-3 array."""
    x, y, z = state.as_array() if isinstance(state, ClassicalState) else state
    return np.array([y, (lam * z - 1.0) * x - gamma * z * y, -lam * x * y + gamma * y * y])


def energy_rhs(state, lam: float, gamma: float) -> np.ndarray:
    """Time derivative of (h, x, xdot) for the reduced system."""
    h, x, v = (state.h, state.x, state.xdot) if isinstance(state, EnergyState) else state
    xddot = -0.5 * lam * lam * x**3 - (lam * h + 1.0) * x + gamma * v * (0.5 * lam * x * x + h)
    return np.array([-gamma * v * v, v, xddot])


@dataclass(frozen=True)
class ClassicalTrajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    lam: float
    gamma: float
    projections: int = 0

    @property
    def h(self) -> np.ndarray:
        return energy(self.x, self.z, self.lam)

    @property
    def xdot(self) -> np.ndarray:
        return self.y

    def max_constraint_drift(self) -> float:
        return float(np.abs(self.x**2 + self.y**2 + self.z**2 - 1.0).max())

    def final(self) -> ClassicalState:
        return ClassicalState(float(self.x[-1]), float(self.y[-1]), float(self.z[-1]))


def integrate_classical(
    state0,
    lam: float,
    gamma: float,
    t_grid,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    project: bool | None = None,
) -> ClassicalTrajectory:
    """Integrate the damped sphere dynamics with an adaptive RK 5(4) stepper.

    ``project=None`` renormalizes (x, y, z) every 100 steps once the drift
    from the unit sphere exceeds 5e-10; ``True`` always does so every 100
    steps, ``False`` never.
    """
    y0 = state0.as_array() if isinstance(state0, ClassicalState) else np.asarray(state0, dtype=float)
    if y0.shape != (3,) or abs(np.linalg.norm(y0) - 1.0) > 1e-9:
        raise InvalidParameterError("initial state must be a unit vector (x, y, z)")
    if not (np.isfinite(lam) and np.isfinite(gamma)) or gamma < 0:
        raise InvalidParameterError("lam must be finite and gamma finite and >= 0")
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0 or np.any(np.diff(t) <= 0):
        raise InvalidParameterError("time grid must be non-empty and strictly increasing")

    def fun(_, u):
        return eom_rhs(u, lam, gamma)

    out = np.empty((t.size, 3))
    idx = 0
    while idx < t.size and t[idx] <= t[0]:
        out[idx] = y0
        idx += 1
    projections = 0
    if t.size > 1:
        solver = RK45(fun, t[0], y0, t[-1], rtol=rtol, atol=atol)
        steps = 0
        while idx < t.size:
            t_prev = solver.t
            message = solver.step()
            if solver.status == "failed":
                raise IntegrationError(f"classical integration failed: {message}", t_prev)
            dense = solver.dense_output()
            while idx < t.size and t[idx] <= solver.t:
                out[idx] = dense(t[idx])
                idx += 1
            steps += 1
            if steps % PROJECTION_INTERVAL == 0 and project is not False and solver.status == "running":
                drift = abs(np.linalg.norm(solver.y) - 1.0)
                if project or drift > PROJECTION_TRIGGER:
                    solver = RK45(fun, solver.t, solver.y / np.linalg.norm(solver.y), t[-1], rtol=rtol, atol=atol)
                    projections += 1
            if solver.status == "finished" and idx < t.size:
                out[idx:] = solver.y
                idx = t.size
    return ClassicalTrajectory(t, out[:, 0], out[:, 1], out[:, 2], lam, gamma, projections)


def ground_energy(lam: float) -> float:
    """Minimum of h on the sphere: -1 for lam <= 1, -(1/lam + lam)/2 above."""
    if lam <= 1.0:
        return -1.0
    return -0.5 * (1.0 / lam + lam)


def equilibrium_expectations(lam: float):
    """(x**2, z, y) at the stable equilibria."""
    if lam <= 1.0:
        return 0.0, 1.0, 0.0
    return 1.0 - 1.0 / lam**2, 1.0 / lam, 0.0


@dataclass(frozen=True)
class FixedPoint:
    state: ClassicalState
    eigenvalues: np.ndarray
    kind: str


def _jacobian(u: np.ndarray, lam: float, gamma: float) -> np.ndarray:
    x, y, z = u
    return np.array(
        [
            [0.0, 1.0, 0.0],
            [lam * z - 1.0, -gamma * z, lam * x - gamma * y],
            [-lam * y, -lam * x + 2 * gamma * y, 0.0],
        ]
    )


def _tangent_basis(u: np.ndarray) -> np.ndarray:
    # two orthonormal columns spanning the plane orthogonal to u
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(3)]))
    return q[:, 1:3]


def classify_fixed_points(lam: float, gamma: float, threshold: float = 1e-10):
    """Fixed points on the sphere with their linearization in the tangent plane.

    ``kind`` is ``"stable"`` (all Re < -threshold), ``"unstable"`` (some
    Re > threshold, none near zero), ``"saddle"`` (both signs) or
    ``"non-hyperbolic"`` (some |Re| <= threshold).
    """
    points = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    if lam > 1.0:
        xs = math.sqrt(1.0 - 1.0 / lam**2)
        points += [np.array([xs, 0.0, 1.0 / lam]), np.array([-xs, 0.0, 1.0 / lam])]
    elif lam < -1.0:
        xs = math.sqrt(1.0 - 1.0 / lam**2)
        points += [np.array([xs, 0.0, 1.0 / lam]), np.array([-xs, 0.0, 1.0 / lam])]
    result = []
    for u in points:
        basis = _tangent_basis(u)
        jt = basis.T @ _jacobian(u, lam, gamma) @ basis
        ev = np.linalg.eigvals(jt)
        re = ev.real
        if np.any(np.abs(re) <= threshold):
            kind = "non-hyperbolic"
        elif np.all(re < 0):
            kind = "stable"
        elif np.all(re > 0):
            kind = "unstable"
        else:
            kind = "saddle"
        result.append(FixedPoint(ClassicalState(*u), ev, kind))
    return result
