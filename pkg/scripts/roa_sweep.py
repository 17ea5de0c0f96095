"""Compare the certified region of attraction with observed convergence of GTS
over a grid of initial angle errors and angular-velocity errors.

Each cell prints: C = certified and converged, c = converged but not certified,
X = certified but did not converge (would contradict the theory), . = neither.

    python scripts/roa_sweep.py --thetas 8 --rates 6 --t-final 15
"""
import argparse
import math

import numpy as np

from so3track.controllers import GainSet, TrackingController, roa_membership
from so3track.dynamics import NO_DISTURBANCE, Inertia, RigidBodyState, benchmark_reference
from so3track.errors import NumericalDivergence
from so3track.simulate import simulate_closed_loop
from so3track.so3 import E2, exp_rodrigues, random_unit_vector


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mode", default="GTS", choices=["AGTS", "GTS"])
    p.add_argument("--thetas", type=int, default=8)
    p.add_argument("--rates", type=int, default=6)
    p.add_argument("--max-rate", type=float, default=3.0)
    p.add_argument("--t-final", type=float, default=15.0)
    p.add_argument("--threshold", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    g = GainSet.from_recipe(9.0, 4.2, 0.9)
    inertia = Inertia.diag(3.0, 2.0, 1.0)
    ref0 = benchmark_reference(0.0)
    thetas = np.linspace(0.1, math.pi - 1e-6, args.thetas)
    rates = np.linspace(0.0, args.max_rate, args.rates)
    print("rate\\theta/pi " + " ".join(f"{t / math.pi:5.2f}" for t in thetas))
    for rate in rates:
        cells = []
        direction = random_unit_vector(rng)
        for theta in thetas:
            r0 = exp_rodrigues(theta, E2)
            w0 = ref0.omega_d + rate * direction
            certified = roa_membership(r0, w0, ref0, g, args.mode).guaranteed
            init = RigidBodyState(r0, w0)
            try:
                ctrl = TrackingController.for_initial_state(args.mode, g, inertia, benchmark_reference, init)
                tr = simulate_closed_loop(ctrl, init, NO_DISTURBANCE, args.t_final, 1e-3)
                converged = np.linalg.norm(tr.r[-1] - benchmark_reference(args.t_final).rd) < args.threshold
            except NumericalDivergence:
                converged = False
            cells.append({(True, True): "C", (False, True): "c", (True, False): "X",
                          (False, False): "."}[(certified, bool(converged))])
        print(f"{rate:13.2f} " + " ".join(f"{c:>5s}" for c in cells))


if __name__ == "__main__":
    main()
