"""Tracking controllers on SO(3).

Four strategies share one torque formula:

* ``AGTS``  smooth controller, almost-global exponential stability;
* ``GTS``   AGTS against a shifted reference when the initial error is too
  large, which makes every initial attitude attractive;
* ``aAGTS`` / ``aGTS`` the same two with an adaptive estimate of a constant
  disturbance moment subtracted from the torque.

The shifted reference replaces R_d(t) by U0 Z_{theta_b(t)} U0^T R_d(t), where
R(0) R_d(0)^T = U0 Z_{theta0} U0^T and theta_b decays exponentially to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
import math

import numpy as np

from .dynamics import Inertia, ReferenceProvider, ReferenceSample, RigidBodyState
from .errors import DegenerateInitialError, InvalidGains, InvariantViolation
from .so3 import E3, attitude_error_vector, conjugacy_decompose, cross, rotation_z


class ControllerMode(str, enum.Enum):
    AGTS = "AGTS"
    GTS = "GTS"
    aAGTS = "aAGTS"
    aGTS = "aGTS"

    @property
    def adaptive(self) -> bool:
        return self in (ControllerMode.aAGTS, ControllerMode.aGTS)

    @property
    def shifting(self) -> bool:
        return self in (ControllerMode.GTS, ControllerMode.aGTS)

    @classmethod
    def parse(cls, name) -> "ControllerMode":
        if isinstance(name, cls):
            return name
        for m in cls:
            if m.value == str(name):
                return m
        raise ValueError(f"unknown controller {name!r}; expected one of {[m.value for m in cls]}")


def mu_upper_bound(k_r: float, k_omega: float, a: float) -> float:
    """Largest admissible mu (exclusive) for given k_R, k_Omega and a."""
    return 4.0 * (1.0 - a) * k_r * k_omega / (4.0 * (1.0 - a) * k_r + k_omega ** 2)


@dataclass(frozen=True)
class GainSet:
    k_r: float
    k_omega: float
    a: float
    mu: float
    epsilon: float
    k_delta: float | None = None
    delta_max: float = 0.0

    @classmethod
    def from_recipe(cls, k_r: float, k_omega: float, epsilon: float = 0.9,
                    k_delta: float | None = None, delta_max: float = 0.0) -> "GainSet":
        """Two-gain recipe: a = epsilon and mu = epsilon times its upper bound."""
        a = epsilon
        mu = mu_upper_bound(k_r, k_omega, a) * epsilon
        return cls(k_r=k_r, k_omega=k_omega, a=a, mu=mu, epsilon=epsilon,
                   k_delta=k_delta, delta_max=delta_max)

    @property
    def rho(self) -> float:
        """(sqrt k_R - mu) / (sqrt k_R + mu), the V0-to-V equivalence ratio."""
        s = math.sqrt(self.k_r)
        return (s - self.mu) / (s + self.mu)

    @property
    def b(self) -> float:
        """Adaptive region-of-attraction level 2 a rho k_R - delta^2 / (2 k_Delta)."""
        if not self.k_delta:
            raise InvalidGains("B needs k_delta")
        return 2.0 * self.a * self.rho * self.k_r - self.delta_max ** 2 / (2.0 * self.k_delta)

    def roa_level(self, mode: ControllerMode) -> float:
        """Level that V0(0) is compared with to pick the unshifted branch."""
        mode = ControllerMode.parse(mode)
        return self.b if mode.adaptive else 2.0 * self.a * self.k_r


@dataclass
class GainReport:
    mode: ControllerMode
    violations: list[str]
    checks: dict[str, bool]
    mu_bound: float
    lambda_min_w3: float
    sigma: float
    b: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_gains(gains: GainSet, mode: ControllerMode | str = ControllerMode.AGTS) -> GainReport:
    """Check every gain inequality the chosen mode relies on.

    Never raises; violations are returned as human-readable strings.
    """
    from .diagnostics import sym2_eigvals, w_matrices

    mode = ControllerMode.parse(mode)
    g = gains
    checks: dict[str, bool] = {}
    violations: list[str] = []

    def check(name: str, ok: bool, msg: str):
        checks[name] = bool(ok)
        if not ok:
            violations.append(f"{name}: {msg}")

    finite = all(math.isfinite(x) for x in (g.k_r, g.k_omega, g.a, g.mu, g.epsilon, g.delta_max))
    check("finite", finite, "all gains must be finite numbers")
    check("k_r > 0", g.k_r > 0, f"k_r = {g.k_r} must be positive")
    check("k_omega > 0", g.k_omega > 0, f"k_omega = {g.k_omega} must be positive")
    check("0 < a < 1", 0 < g.a < 1, f"a = {g.a} must lie in (0, 1)")
    check("0 < epsilon < 1", 0 < g.epsilon < 1, f"epsilon = {g.epsilon} must lie in (0, 1)")

    mu_bound = float("nan")
    lam = float("nan")
    sigma = float("nan")
    b = None
    if g.k_r > 0 and g.k_omega > 0 and 0 < g.a < 1 and finite:
        mu_bound = mu_upper_bound(g.k_r, g.k_omega, g.a)
        check("0 < mu < mu_bound", 0 < g.mu < mu_bound,
              f"mu = {g.mu:.6g} must lie in (0, {mu_bound:.6g})")
        check("mu < sqrt(k_r)", g.mu < math.sqrt(g.k_r),
              f"mu = {g.mu:.6g} must be below sqrt(k_r) = {math.sqrt(g.k_r):.6g}")
        _, w2, w3 = w_matrices(g)
        lam = sym2_eigvals(w3)[0]
        check("W3 positive-definite", lam > 0, f"lambda_min(W3) = {lam:.6g} must be positive")
        sigma = lam / sym2_eigvals(w2)[1]

    if mode.adaptive:
        has_kd = g.k_delta is not None and g.k_delta > 0
        check("k_delta > 0", has_kd, f"k_delta = {g.k_delta} must be positive for adaptive modes")
        check("delta_max >= 0", g.delta_max >= 0, f"delta_max = {g.delta_max} must be non-negative")
        if has_kd and g.k_r > 0 and 0 <= g.mu < math.sqrt(g.k_r):
            b = g.b
            check("B > 0", b > 0, f"2 a rho k_r - delta_max^2/(2 k_delta) = {b:.6g} must be positive")

    return GainReport(mode=mode, violations=violations, checks=checks, mu_bound=mu_bound,
                      lambda_min_w3=lam, sigma=sigma, b=b)


# --- torque and adaptive law -------------------------------------------------

def agts_torque(state: RigidBodyState, ref: ReferenceSample, gains: GainSet, inertia: Inertia) -> np.ndarray:
    """-(J Omega) x Omega + J(-k_R e_R - k_Omega e_Omega + Omega x Omega_d + Omega_d_dot)."""
    omega = state.omega
    e_r = attitude_error_vector(state.r, ref.rd)
    e_w = omega - ref.omega_d
    inner = -gains.k_r * e_r - gains.k_omega * e_w + cross(omega, ref.omega_d) + ref.omega_d_dot
    return -cross(inertia.j @ omega, omega) + inertia.j @ inner


def adaptive_torque(state: RigidBodyState, ref: ReferenceSample, gains: GainSet, inertia: Inertia,
                    dhat) -> np.ndarray:
    return agts_torque(state, ref, gains, inertia) - np.asarray(dhat, dtype=float)


def estimate_rate(state: RigidBodyState, ref: ReferenceSample, gains: GainSet, inertia: Inertia) -> np.ndarray:
    """Disturbance-estimate rate k_Delta J^-1 (e_Omega + mu e_R)."""
    e_r = attitude_error_vector(state.r, ref.rd)
    e_w = state.omega - ref.omega_d
    return gains.k_delta * (inertia.j_inv @ (e_w + gains.mu * e_r))


def adaptive_update(dhat, e_omega, e_r, gains: GainSet, inertia: Inertia, h: float) -> np.ndarray:
    """Explicit one-step update of the estimate for frozen errors.

    Closed-loop simulations integrate the estimate inside the coupled RK4 step
    (:func:`so3track.dynamics.integrate_coupled_step`); this helper is the
    standalone form.
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")
    rate = gains.k_delta * (inertia.j_inv @ (np.asarray(e_omega) + gains.mu * np.asarray(e_r)))
    return np.asarray(dhat, dtype=float) + h * rate


# --- shifted reference -------------------------------------------------------

@dataclass(frozen=True)
class ShiftedReference:
    u0: np.ndarray
    theta0: float
    theta_b0: float
    gamma: float
    base: ReferenceProvider = field(repr=False)

    def theta_b(self, t: float) -> float:
        return self.theta_b0 * math.exp(-0.5 * self.gamma * t)

    def __call__(self, t: float) -> ReferenceSample:
        return shifted_sample(self, t)


def shifted_sample(sref: ShiftedReference, t: float) -> ReferenceSample:
    """Shifted desired attitude, angular velocity and its time derivative at ``t``."""
    base = sref.base(t)
    tb = sref.theta_b(t)
    tb_dot = -0.5 * sref.gamma * tb
    tb_ddot = 0.25 * sref.gamma ** 2 * tb
    u0 = sref.u0
    rd = u0 @ rotation_z(tb) @ u0.T @ base.rd
    w = rd.T @ u0[:, 2]  # body-frame view of the shift axis
    omega_d = base.omega_d + tb_dot * w
    omega_d_dot = base.omega_d_dot + tb_ddot * w - tb_dot * cross(omega_d, w)
    return ReferenceSample(rd, omega_d, omega_d_dot)


def shift_parameters(theta0: float, gains: GainSet, mode: ControllerMode) -> tuple[float, float]:
    """theta_b0 and gamma from the epsilon recipe for the given mode.

    If the closeness condition on theta0 - theta_b0 is slack for every choice
    (small theta0), only the theta0 * epsilon candidate is used.
    """
    mode = ControllerMode.parse(mode)
    eps = gains.epsilon
    if mode.adaptive:
        b = gains.b
        level = b * eps / gains.k_r
    else:
        level = 2.0 * gains.a * eps
    candidates = [theta0 * eps]
    if level < 2.0:
        alt = theta0 - math.acos(1.0 - level)
        if alt > 0.0:
            candidates.append(alt)
    theta_b0 = min(candidates)
    if not 0.0 < theta_b0 < theta0:
        raise InvariantViolation(f"theta_b0 = {theta_b0!r} is not inside (0, theta0 = {theta0!r})")
    if mode.adaptive:
        gamma = (2.0 / theta_b0) * math.sqrt(2.0 * (1.0 - eps) * b) * eps
    else:
        gamma = (4.0 / theta_b0) * math.sqrt(gains.a * gains.k_r * (1.0 - eps)) * eps
    return theta_b0, gamma


def shift_bounds(theta0: float, theta_b0: float, gains: GainSet, mode: ControllerMode) -> dict[str, float]:
    """Slack of the two shift constraints (positive = satisfied strictly, zero allowed for closeness)."""
    mode = ControllerMode.parse(mode)
    eps = gains.epsilon
    if mode.adaptive:
        b = gains.b
        close = b * eps / gains.k_r
        gamma_max = (2.0 / theta_b0) * math.sqrt(2.0 * (1.0 - eps) * b)
    else:
        close = 2.0 * eps * gains.a
        gamma_max = (4.0 / theta_b0) * math.sqrt(gains.a * gains.k_r * (1.0 - eps))
    return {
        "closeness_slack": close - (1.0 - math.cos(theta0 - theta_b0)),
        "gamma_max": gamma_max,
    }


def build_shifted_reference(r0, base: ReferenceProvider, gains: GainSet,
                            mode: ControllerMode | str = ControllerMode.GTS,
                            theta_b0: float | None = None, gamma: float | None = None) -> ShiftedReference:
    """Shifted reference that starts on the conjugacy class of R(0) R_d(0)^T.

    ``theta_b0`` and ``gamma`` default to the epsilon recipe; explicit values
    are checked against the same constraints.

    Raises:
        DegenerateInitialError: R(0) already equals R_d(0).
        InvariantViolation: theta_b0 or gamma break their constraints.
    """
    mode = ControllerMode.parse(mode)
    rd0 = base(0.0).rd
    dec = conjugacy_decompose(np.asarray(r0) @ rd0.T)
    theta0 = dec.theta
    if theta0 <= 0.0:
        raise DegenerateInitialError("initial attitude equals the reference; no shift needed")
    tb0, gam = shift_parameters(theta0, gains, mode)
    if theta_b0 is not None:
        tb0 = float(theta_b0)
    if gamma is not None:
        gam = float(gamma)
    if not 0.0 < tb0 < theta0:
        raise InvariantViolation(f"theta_b0 = {tb0!r} is not inside (0, theta0 = {theta0!r})")
    bounds = shift_bounds(theta0, tb0, gains, mode)
    if bounds["closeness_slack"] < -1e-12:
        raise InvariantViolation("1 - cos(theta0 - theta_b0) exceeds its bound")
    if not 0.0 < gam < bounds["gamma_max"]:
        raise InvariantViolation(f"gamma = {gam!r} must lie in (0, {bounds['gamma_max']!r})")
    return ShiftedReference(u0=dec.u, theta0=theta0, theta_b0=tb0, gamma=gam, base=base)


# --- branch selection --------------------------------------------------------

def initial_v0(initial: RigidBodyState, ref0: ReferenceSample, gains: GainSet) -> float:
    return (gains.k_r / 4.0) * float(np.sum((initial.r - ref0.rd) ** 2)) \
        + 0.5 * float(np.sum((initial.omega - ref0.omega_d) ** 2))


def uses_shift(initial: RigidBodyState, base: ReferenceProvider, gains: GainSet, mode: ControllerMode) -> bool:
    """Branch decision, made once from data at t = 0 (boundary goes to the unshifted branch)."""
    mode = ControllerMode.parse(mode)
    if not mode.shifting:
        return False
    return initial_v0(initial, base(0.0), gains) > gains.roa_level(mode)


def gts_torque(initial: RigidBodyState, state: RigidBodyState, t: float, base: ReferenceProvider,
               shifted: ShiftedReference | None, gains: GainSet, inertia: Inertia) -> np.ndarray:
    """GTS torque: AGTS against the true reference, or against the shifted one when
    the initial state lies outside the AGTS region of attraction."""
    if uses_shift(initial, base, gains, ControllerMode.GTS):
        if shifted is None:
            raise ValueError("initial state requires a shifted reference")
        return agts_torque(state, shifted(t), gains, inertia)
    return agts_torque(state, base(t), gains, inertia)


class TrackingController:
    """Closed-loop controller for one run: the branch is frozen at construction.

    Use :meth:`for_initial_state` to build it; ``reference(t)`` is the trajectory
    actually tracked (shifted or not).
    """

    def __init__(self, mode: ControllerMode | str, gains: GainSet, inertia: Inertia,
                 base: ReferenceProvider, shifted: ShiftedReference | None = None):
        self.mode = ControllerMode.parse(mode)
        self.gains = gains
        self.inertia = inertia
        self.base = base
        self.shifted = shifted

    @classmethod
    def for_initial_state(cls, mode, gains: GainSet, inertia: Inertia, base: ReferenceProvider,
                          initial: RigidBodyState) -> "TrackingController":
        mode = ControllerMode.parse(mode)
        report = validate_gains(gains, mode)
        if not report.ok:
            raise InvalidGains("; ".join(report.violations))
        shifted = None
        if uses_shift(initial, base, gains, mode):
            shifted = build_shifted_reference(initial.r, base, gains, mode)
        return cls(mode, gains, inertia, base, shifted)

    @property
    def branch(self) -> str:
        return "shifted" if self.shifted is not None else "direct"

    def reference(self, t: float) -> ReferenceSample:
        if self.shifted is not None:
            return shifted_sample(self.shifted, t)
        return self.base(t)

    def theta_b(self, t: float) -> float | None:
        return self.shifted.theta_b(t) if self.shifted is not None else None

    def torque(self, t: float, state: RigidBodyState, dhat=None) -> np.ndarray:
        tau = agts_torque(state, self.reference(t), self.gains, self.inertia)
        if self.mode.adaptive and dhat is not None:
            tau = tau - dhat
        return tau

    def estimate_rate(self, t: float, state: RigidBodyState) -> np.ndarray:
        if not self.mode.adaptive:
            return np.zeros(3)
        return estimate_rate(state, self.reference(t), self.gains, self.inertia)


# --- region of attraction ----------------------------------------------------

@dataclass
class RoaReport:
    mode: ControllerMode
    theta0: float
    v0: float
    level: float
    e_omega_norm: float
    in_r1: bool
    in_r3: bool | None
    in_r: bool
    bound_direct: float
    bound_shifted: float | None
    active_bound: str
    theta_b0: float | None = None
    gamma: float | None = None
    b: float | None = None

    @property
    def guaranteed(self) -> bool:
        return self.in_r1 or bool(self.in_r3)


def roa_membership(r0, omega0, ref0: ReferenceSample, gains: GainSet,
                   mode: ControllerMode | str = ControllerMode.GTS) -> RoaReport:
    """Membership of (R(0), Omega(0)) in the guaranteed region of attraction.

    ``in_r1``: the unshifted branch is taken and converges; ``in_r3``: the shifted
    initial error is inside the level set; ``in_r``: the explicit sufficient set
    bounding |e_Omega(0)| by the larger of the two closed-form radii.
    """
    mode = ControllerMode.parse(mode)
    r0 = np.asarray(r0, dtype=float)
    omega0 = np.asarray(omega0, dtype=float)
    theta0 = conjugacy_decompose(r0 @ ref0.rd.T).theta
    e_w = float(np.linalg.norm(omega0 - ref0.omega_d))
    level = gains.roa_level(mode)
    b = gains.b if mode.adaptive else None
    v0 = gains.k_r * (1.0 - math.cos(theta0)) + 0.5 * e_w ** 2
    in_r1 = v0 <= level

    radicand = level - gains.k_r * (1.0 - math.cos(theta0))
    bound_direct = math.sqrt(2.0 * radicand) if radicand > 0 else 0.0
    bound_shifted = None
    in_r3 = None
    theta_b0 = gamma = None
    if theta0 > 0.0:
        theta_b0, gamma = shift_parameters(theta0, gains, mode)
        if mode.adaptive:
            bound_shifted = math.sqrt(2.0 * (1.0 - gains.epsilon) * b) - 0.5 * gamma * theta_b0
        else:
            bound_shifted = 2.0 * math.sqrt(gains.a * gains.k_r * (1.0 - gains.epsilon)) - 0.5 * gamma * theta_b0
        sref = build_shifted_reference(r0, _constant_sample(ref0), gains, mode, theta_b0, gamma)
        s0 = shifted_sample(sref, 0.0)
        e_w_shift = float(np.linalg.norm(omega0 - s0.omega_d))
        v0_shift = gains.k_r * (1.0 - math.cos(theta0 - theta_b0)) + 0.5 * e_w_shift ** 2
        in_r3 = v0_shift <= level
    radii = {"direct": bound_direct, "shifted": bound_shifted if bound_shifted is not None else -math.inf}
    active = max(radii, key=radii.get)
    in_r = e_w < radii[active]
    return RoaReport(mode=mode, theta0=theta0, v0=v0, level=level, e_omega_norm=e_w, in_r1=in_r1,
                     in_r3=in_r3, in_r=in_r, bound_direct=bound_direct, bound_shifted=bound_shifted,
                     active_bound=active, theta_b0=theta_b0, gamma=gamma, b=b)


def _constant_sample(sample: ReferenceSample) -> ReferenceProvider:
    # only t = 0 is queried when assessing initial conditions
    return lambda t: sample
