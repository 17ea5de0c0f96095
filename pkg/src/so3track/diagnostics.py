"""Lyapunov functions and the quadratic-form bounds used to certify convergence."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .controllers import GainSet
from .dynamics import ReferenceSample, RigidBodyState
from .errors import InvalidGains
from .so3 import attitude_error_vector

SQRT2 = math.sqrt(2.0)


def eval_v0(state: RigidBodyState, ref: ReferenceSample, gains: GainSet) -> float:
    e_rm = state.r - ref.rd
    e_w = state.omega - ref.omega_d
    return 0.25 * gains.k_r * float(np.sum(e_rm * e_rm)) + 0.5 * float(e_w @ e_w)


def eval_v(state: RigidBodyState, ref: ReferenceSample, gains: GainSet) -> float:
    e_r = attitude_error_vector(state.r, ref.rd)
    e_w = state.omega - ref.omega_d
    return eval_v0(state, ref, gains) + gains.mu * float(e_r @ e_w)


def eval_v_bar(state: RigidBodyState, ref: ReferenceSample, gains: GainSet, dhat, true_delta) -> float:
    """V augmented with the estimation-error energy; needs the true disturbance, so simulation only."""
    e_d = np.asarray(true_delta, dtype=float) - np.asarray(dhat, dtype=float)
    return eval_v(state, ref, gains) + float(e_d @ e_d) / (2.0 * gains.k_delta)


def sym2_eigvals(m) -> tuple[float, float]:
    """Eigenvalues (ascending) of a symmetric 2x2 matrix in closed form."""
    p, q, r = m[0][0], m[0][1], m[1][1]
    mean = 0.5 * (p + r)
    rad = math.hypot(0.5 * (p - r), q)
    return mean - rad, mean + rad


def w_matrices(gains: GainSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k_r, k_w, mu, a = gains.k_r, gains.k_omega, gains.mu, gains.a
    c = mu / (2.0 * SQRT2)
    w1 = np.array([[k_r / 4.0, -c], [-c, 0.5]])
    w2 = np.array([[k_r / 4.0, c], [c, 0.5]])
    w3 = np.array([[0.5 * (1.0 - a) * mu * k_r, -c * k_w], [-c * k_w, k_w - mu]])
    return w1, w2, w3


def stability_matrices(gains: GainSet) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """(W1, W2, W3, sigma) where sigma = lambda_min(W3) / lambda_max(W2) is the decay rate of V.

    Raises:
        InvalidGains: if W3 is not positive-definite.
    """
    w1, w2, w3 = w_matrices(gains)
    lam3 = sym2_eigvals(w3)[0]
    if not lam3 > 0.0:
        raise InvalidGains(f"W3 is not positive-definite (lambda_min = {lam3:.6g})")
    return w1, w2, w3, lam3 / sym2_eigvals(w2)[1]


@dataclass(frozen=True)
class LyapunovSample:
    t: float
    v0: float
    v: float
    e_r_norm: float
    e_omega_norm: float
    v_bar: float | None = None
    e_delta_norm: float | None = None


def lyapunov_sample(t: float, state: RigidBodyState, ref: ReferenceSample, gains: GainSet,
                    dhat=None, true_delta=None) -> LyapunovSample:
    v0 = eval_v0(state, ref, gains)
    v = eval_v(state, ref, gains)
    v_bar = e_d = None
    if dhat is not None and true_delta is not None:
        v_bar = eval_v_bar(state, ref, gains, dhat, true_delta)
        e_d = float(np.linalg.norm(np.asarray(true_delta) - dhat))
    return LyapunovSample(t=t, v0=v0, v=v, e_r_norm=float(np.linalg.norm(state.r - ref.rd)),
                          e_omega_norm=float(np.linalg.norm(state.omega - ref.omega_d)),
                          v_bar=v_bar, e_delta_norm=e_d)


@dataclass
class EnvelopeReport:
    sigma: float
    envelope_violations: list[tuple[float, float, float]] = field(default_factory=list)
    monotone_violations: list[tuple[float, float]] = field(default_factory=list)
    max_ratio: float = 0.0
    max_increase: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.envelope_violations and not self.monotone_violations


def check_envelope(series: Sequence[LyapunovSample], sigma: float, tol: float = 1e-3,
                   step_tol: float = 1e-9, monotone: str = "v0") -> EnvelopeReport:
    """Check V(t) <= (1 + tol) V(0) exp(-sigma t) and that ``monotone`` (``v0`` or ``v_bar``) never rises.

    Envelope violations are (t, V(t), bound); monotonicity violations are (t, increase).
    """
    report = EnvelopeReport(sigma=sigma)
    if not series:
        return report
    t0 = series[0].t
    v_init = series[0].v
    for s in series:
        bound = (1.0 + tol) * v_init * math.exp(-sigma * (s.t - t0))
        if v_init > 0:
            report.max_ratio = max(report.max_ratio, s.v / (v_init * math.exp(-sigma * (s.t - t0))))
        if s.v > bound and s.v > 1e-14:
            report.envelope_violations.append((s.t, s.v, bound))
    for prev, cur in zip(series, series[1:]):
        inc = getattr(cur, monotone) - getattr(prev, monotone)
        report.max_increase = max(report.max_increase, inc)
        if inc > step_tol:
            report.monotone_violations.append((cur.t, inc))
    return report


def fit_decay_constant(t, err, rate: float) -> float:
    """Smallest C with err(t) <= C exp(-rate t / 2) on the samples."""
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    return float(np.max(err * np.exp(0.5 * rate * t)))


def lyapunov_arrays(r, omega, rd, omega_d, gains: GainSet, dhat=None, true_delta=None) -> dict[str, np.ndarray]:
    """V0, V (and V_bar when the disturbance is given) along stacked time histories.

    ``r``/``rd`` have shape (n, 3, 3), the velocities (n, 3).
    """
    e_rm = r - rd
    e_w = omega - omega_d
    q = np.einsum("nji,njk->nik", rd, r)
    e_r = 0.5 * np.stack([q[:, 2, 1] - q[:, 1, 2], q[:, 0, 2] - q[:, 2, 0], q[:, 1, 0] - q[:, 0, 1]], axis=1)
    er_norm2 = np.einsum("nij,nij->n", e_rm, e_rm)
    v0 = 0.25 * gains.k_r * er_norm2 + 0.5 * np.einsum("ni,ni->n", e_w, e_w)
    v = v0 + gains.mu * np.einsum("ni,ni->n", e_r, e_w)
    out = {"v0": v0, "v": v, "e_r_norm": np.sqrt(er_norm2), "e_omega_norm": np.linalg.norm(e_w, axis=1)}
    if dhat is not None and true_delta is not None:
        e_d = np.asarray(true_delta, dtype=float) - dhat
        out["v_bar"] = v + np.einsum("ni,ni->n", e_d, e_d) / (2.0 * gains.k_delta)
        out["e_delta_norm"] = np.linalg.norm(e_d, axis=1)
    return out


def samples_from_arrays(t, arrays: dict[str, np.ndarray]) -> list[LyapunovSample]:
    vb = arrays.get("v_bar")
    ed = arrays.get("e_delta_norm")
    return [
        LyapunovSample(t=float(t[i]), v0=float(arrays["v0"][i]), v=float(arrays["v"][i]),
                       e_r_norm=float(arrays["e_r_norm"][i]), e_omega_norm=float(arrays["e_omega_norm"][i]),
                       v_bar=None if vb is None else float(vb[i]), e_delta_norm=None if ed is None else float(ed[i]))
        for i in range(len(t))
    ]
