"""Closed-loop simulation over a fixed time grid.

Two engines produce the same :class:`Trajectory`:

* ``"python"`` steps :func:`so3track.dynamics.integrate_coupled_step` with the
  controller object; it is the readable reference path.
* ``"numba"`` samples the tracked reference once at every RK4 stage time and
  runs the same RK4 + polar-projection loop in compiled code.  The torque
  formula inside the kernel mirrors :func:`so3track.controllers.agts_torque`;
  the test-suite checks both engines agree.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numba import njit

from .controllers import TrackingController
from .dynamics import (Disturbance, RigidBodyState, ReferenceSample, check_reference_bounds,
                       integrate_coupled_step, REFERENCE_CAP)
from .errors import NumericalDivergence

DIVERGENCE_NORM = 1e6


@dataclass
class Trajectory:
    """Time histories on the integrator grid (``n_steps + 1`` samples)."""

    t: np.ndarray
    r: np.ndarray        # (n, 3, 3)
    omega: np.ndarray    # (n, 3)
    dhat: np.ndarray     # (n, 3)
    tau: np.ndarray      # (n, 3) torque applied at each sample
    rd: np.ndarray       # tracked reference (shifted when active)
    omega_d: np.ndarray
    omega_d_dot: np.ndarray

    def state(self, i: int) -> RigidBodyState:
        return RigidBodyState(self.r[i], self.omega[i])

    def reference(self, i: int) -> ReferenceSample:
        return ReferenceSample(self.rd[i], self.omega_d[i], self.omega_d_dot[i])


def reference_grid(provider, t0: float, h: float, n_steps: int, cap: float = REFERENCE_CAP):
    """Reference samples at every half step t0 + j h / 2, j = 0..2 n_steps."""
    m = 2 * n_steps + 1
    rd = np.empty((m, 3, 3))
    wd = np.empty((m, 3))
    wdd = np.empty((m, 3))
    for j in range(m):
        t = t0 + 0.5 * h * j
        s = provider(t)
        check_reference_bounds(s, t, cap)
        rd[j], wd[j], wdd[j] = s.rd, s.omega_d, s.omega_d_dot
    return rd, wd, wdd


def simulate_closed_loop(controller: TrackingController, initial: RigidBodyState, dist: Disturbance,
                         t_final: float, h: float, engine: str = "numba",
                         reference_cap: float = REFERENCE_CAP) -> Trajectory:
    if h <= 0.0 or t_final <= 0.0:
        raise ValueError("t_final and h must be positive")
    n_steps = int(round(t_final / h))
    if abs(n_steps * h - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final = {t_final} is not a whole number of steps h = {h}")
    rd, wd, wdd = reference_grid(controller.reference, 0.0, h, n_steps, reference_cap)
    t = h * np.arange(n_steps + 1)
    if engine == "numba":
        g = controller.gains
        r, w, d, tau, status = _closed_loop_kernel(
            np.ascontiguousarray(initial.r, dtype=float), np.asarray(initial.omega, dtype=float),
            rd, wd, wdd, controller.inertia.j, controller.inertia.j_inv,
            g.k_r, g.k_omega, g.mu, g.k_delta or 0.0, controller.mode.adaptive,
            np.asarray(dist.delta, dtype=float), h, n_steps, DIVERGENCE_NORM)
        if status >= 0:
            raise NumericalDivergence(f"closed loop diverged at t = {t[status]:.6g}", float(t[status]))
    elif engine == "python":
        r, w, d, tau = _python_loop(controller, initial, dist, h, n_steps, t)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return Trajectory(t=t, r=r, omega=w, dhat=d, tau=tau, rd=rd[::2], omega_d=wd[::2], omega_d_dot=wdd[::2])


def _python_loop(controller, initial, dist, h, n_steps, t):
    r = np.empty((n_steps + 1, 3, 3))
    w = np.empty((n_steps + 1, 3))
    d = np.zeros((n_steps + 1, 3))
    tau = np.empty((n_steps + 1, 3))
    state = initial
    dhat = np.zeros(3)
    for i in range(n_steps + 1):
        r[i], w[i], d[i] = state.r, state.omega, dhat
        tau[i] = controller.torque(t[i], state, dhat)
        if i == n_steps:
            break
        state, dhat = integrate_coupled_step(state, dhat, controller, dist, controller.inertia, t[i], h)
        if np.linalg.norm(state.omega) > DIVERGENCE_NORM:
            raise NumericalDivergence(f"closed loop diverged at t = {t[i + 1]:.6g}", float(t[i + 1]))
    return r, w, d, tau


# --- compiled kernel -----------------------------------------------------------

@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _rhs(r, w, dh, rd, wd, wdd, J, Jinv, k_r, k_w, mu, k_d, adaptive, delta):
    q = rd.T @ r
    e_r = np.empty(3)
    e_r[0] = 0.5 * (q[2, 1] - q[1, 2])
    e_r[1] = 0.5 * (q[0, 2] - q[2, 0])
    e_r[2] = 0.5 * (q[1, 0] - q[0, 1])
    e_w = w - wd
    jw = J @ w
    tau = -_cross(jw, w) + J @ (-k_r * e_r - k_w * e_w + _cross(w, wd) + wdd)
    if adaptive:
        tau = tau - dh
    w_dot = Jinv @ (_cross(jw, w) + tau + delta)
    r_dot = np.empty((3, 3))
    for i in range(3):
        r_dot[i, 0] = r[i, 1] * w[2] - r[i, 2] * w[1]
        r_dot[i, 1] = r[i, 2] * w[0] - r[i, 0] * w[2]
        r_dot[i, 2] = r[i, 0] * w[1] - r[i, 1] * w[0]
    if adaptive:
        d_dot = k_d * (Jinv @ (e_w + mu * e_r))
    else:
        d_dot = np.zeros(3)
    return r_dot, w_dot, d_dot, tau


@njit(cache=True)
def _closed_loop_kernel(r0, w0, rd, wd, wdd, J, Jinv, k_r, k_w, mu, k_d, adaptive, delta, h, n_steps,
                        blowup):
    n = n_steps + 1
    rs = np.empty((n, 3, 3))
    ws = np.empty((n, 3))
    ds = np.zeros((n, 3))
    taus = np.empty((n, 3))
    r = r0.copy()
    w = w0.copy()
    dh = np.zeros(3)
    for i in range(n):
        rs[i] = r
        ws[i] = w
        ds[i] = dh
        j = 2 * i
        k1r, k1w, k1d, tau = _rhs(r, w, dh, rd[j], wd[j], wdd[j], J, Jinv, k_r, k_w, mu, k_d, adaptive, delta)
        taus[i] = tau
        if i == n_steps:
            break
        k2r, k2w, k2d, _ = _rhs(r + 0.5 * h * k1r, w + 0.5 * h * k1w, dh + 0.5 * h * k1d,
                                rd[j + 1], wd[j + 1], wdd[j + 1], J, Jinv, k_r, k_w, mu, k_d, adaptive, delta)
        k3r, k3w, k3d, _ = _rhs(r + 0.5 * h * k2r, w + 0.5 * h * k2w, dh + 0.5 * h * k2d,
                                rd[j + 1], wd[j + 1], wdd[j + 1], J, Jinv, k_r, k_w, mu, k_d, adaptive, delta)
        k4r, k4w, k4d, _ = _rhs(r + h * k3r, w + h * k3w, dh + h * k3d,
                                rd[j + 2], wd[j + 2], wdd[j + 2], J, Jinv, k_r, k_w, mu, k_d, adaptive, delta)
        r = r + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        w = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        dh = dh + (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(w)) and np.all(np.isfinite(dh))):
            return rs, ws, ds, taus, i + 1
        if math.sqrt(w @ w) > blowup or np.linalg.det(r) <= 0.0:
            return rs, ws, ds, taus, i + 1
        u, _, vt = np.linalg.svd(r)
        r = u @ vt
    return rs, ws, ds, taus, -1
