"""Rigid-body rotational dynamics, reference trajectories and a fixed-step integrator."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from .errors import NumericalDivergence, SingularInertia
from .so3 import I3, cross, exp_rodrigues, hat, project_so3

DEFAULT_STEP = 1e-3
FD_STEP = 1e-6
REFERENCE_CAP = 1e3


@dataclass(frozen=True)
class Inertia:
    """Symmetric positive-definite moment of inertia (kg m^2) with its cached inverse."""

    j: np.ndarray
    j_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        j = np.array(self.j, dtype=float)
        if j.shape != (3, 3) or np.linalg.norm(j - j.T) > 1e-12:
            raise SingularInertia("inertia must be a symmetric 3x3 matrix")
        if np.min(np.linalg.eigvalsh(j)) <= 0.0:
            raise SingularInertia("inertia must be positive-definite")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "j_inv", np.linalg.inv(j))

    @classmethod
    def diag(cls, *d) -> "Inertia":
        if len(d) == 1:
            d = tuple(d[0])
        return cls(np.diag(np.asarray(d, dtype=float)))


@dataclass(frozen=True)
class RigidBodyState:
    r: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class ReferenceSample:
    rd: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray


@dataclass(frozen=True)
class Disturbance:
    """Constant disturbance moment with a known bound on its magnitude."""

    delta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_max: float = 0.0

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        object.__setattr__(self, "delta", delta)
        if self.delta_max < 0.0:
            raise ValueError("delta_max must be non-negative")
        if np.linalg.norm(delta) > self.delta_max + 1e-12:
            raise ValueError(
                f"|delta| = {np.linalg.norm(delta):.6g} exceeds its bound delta_max = {self.delta_max}"
            )


NO_DISTURBANCE = Disturbance()

ReferenceProvider = Callable[[float], ReferenceSample]
TorqueProvider = Callable[[float, RigidBodyState], np.ndarray]


def angular_acceleration(r, omega, tau, delta, inertia: Inertia) -> np.ndarray:
    jw = inertia.j @ omega
    return inertia.j_inv @ (cross(jw, omega) + tau + delta)


def state_derivative(state: RigidBodyState, tau, dist: Disturbance, inertia: Inertia):
    """(R_dot, Omega_dot) = (R Omega^, J^-1((J Omega) x Omega + tau + delta))."""
    r_dot = state.r @ hat(state.omega)
    return r_dot, angular_acceleration(state.r, state.omega, np.asarray(tau, float), dist.delta, inertia)


def rk4(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def pack(r, omega, *extra) -> np.ndarray:
    return np.concatenate([np.asarray(r).ravel(), omega, *extra])


def unpack(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return y[:9].reshape(3, 3), y[9:12]


def _finalize(y: np.ndarray, t: float) -> RigidBodyState:
    if not np.all(np.isfinite(y)):
        raise NumericalDivergence(f"non-finite state at t = {t:.6g}", t)
    r, omega = unpack(y)
    return RigidBodyState(project_so3(r), omega.copy())


def integrate_step(state: RigidBodyState, torque: TorqueProvider, dist: Disturbance,
                   inertia: Inertia, t: float, h: float) -> RigidBodyState:
    """Advance the attitude dynamics by one RK4 step of size ``h``.

    ``torque(t, state)`` is evaluated at every stage.  The attitude is projected
    back onto SO(3) after the step.
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")

    def f(tt, y):
        r, omega = unpack(y)
        tau = torque(tt, RigidBodyState(r, omega))
        return pack(r @ hat(omega), angular_acceleration(r, omega, tau, dist.delta, inertia))

    return _finalize(rk4(f, t, pack(state.r, state.omega), h), t + h)


def integrate_coupled_step(state: RigidBodyState, dhat: np.ndarray, controller, dist: Disturbance,
                           inertia: Inertia, t: float, h: float) -> tuple[RigidBodyState, np.ndarray]:
    """RK4 step of the 15-dimensional system (R, Omega, disturbance estimate).

    ``controller`` supplies ``torque(t, state, dhat)`` and ``estimate_rate(t, state)``.
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")

    def f(tt, y):
        r, omega = unpack(y)
        s = RigidBodyState(r, omega)
        tau = controller.torque(tt, s, y[12:])
        return pack(r @ hat(omega), angular_acceleration(r, omega, tau, dist.delta, inertia),
                    controller.estimate_rate(tt, s))

    y = rk4(f, t, pack(state.r, state.omega, dhat), h)
    return _finalize(y, t + h), y[12:].copy()


# --- reference trajectories ------------------------------------------------

def benchmark_reference(t: float) -> ReferenceSample:
    """Closed-form benchmark trajectory with R_d(0) = I and Omega_d(0) = (2, 0, 1)."""
    c, s = math.cos(t), math.sin(t)
    rd = np.array([
        [c, -c * s, s * s],
        [c * s, c ** 3 - s * s, -c * s - c * c * s],
        [s * s, c * s + c * c * s, c * c - c * s * s],
    ])
    omega_d = np.array([1.0 + c, s - s * c, c + s * s])
    omega_d_dot = np.array([-s, c - c * c + s * s, -s + 2.0 * s * c])
    return ReferenceSample(rd, omega_d, omega_d_dot)


def constant_reference(r_fixed) -> ReferenceProvider:
    rd = np.array(r_fixed, dtype=float)
    zero = np.zeros(3)

    def provider(t: float) -> ReferenceSample:
        return ReferenceSample(rd, zero, zero)

    return provider


def fixed_axis_reference(axis, rate: float, r0=I3) -> ReferenceProvider:
    """Constant-rate spin about a body-fixed ``axis``: R_d(t) = r0 exp(rate t axis^)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    r0 = np.asarray(r0, dtype=float)
    omega_d = rate * axis
    zero = np.zeros(3)

    def provider(t: float) -> ReferenceSample:
        return ReferenceSample(r0 @ exp_rodrigues(rate * t, axis), omega_d, zero)

    return provider


def numeric_reference(rd_of_t: Callable[[float], np.ndarray],
                      omega_d_of_t: Callable[[float], np.ndarray],
                      step: float = FD_STEP) -> ReferenceProvider:
    """Wrap a user trajectory without an analytic Omega_d derivative (central differences)."""

    def provider(t: float) -> ReferenceSample:
        w = np.asarray(omega_d_of_t(t), dtype=float)
        w_dot = (np.asarray(omega_d_of_t(t + step)) - np.asarray(omega_d_of_t(t - step))) / (2.0 * step)
        return ReferenceSample(np.asarray(rd_of_t(t), dtype=float), w, w_dot)

    return provider


def check_reference_bounds(sample: ReferenceSample, t: float, cap: float = REFERENCE_CAP) -> None:
    """The adaptive analysis needs bounded Omega_d and its derivative; enforce a runtime cap."""
    for name, v in (("omega_d", sample.omega_d), ("omega_d_dot", sample.omega_d_dot)):
        n = float(np.linalg.norm(v))
        if not math.isfinite(n) or n > cap:
            raise NumericalDivergence(f"reference {name} norm {n:.6g} exceeds cap {cap:g} at t = {t:.6g}", t)
