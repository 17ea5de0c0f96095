"""Sweep the epsilon recipe and random initial states inside the AGTS level set,
reporting the worst observed ratio V(t) / (V(0) exp(-sigma t)) and the decay rate sigma.

    python scripts/envelope_sweep.py --runs 10 --t-final 10
"""
import argparse

import numpy as np

from so3track.controllers import GainSet, TrackingController
from so3track.diagnostics import check_envelope, lyapunov_arrays, samples_from_arrays, stability_matrices
from so3track.dynamics import NO_DISTURBANCE, Inertia, RigidBodyState, benchmark_reference
from so3track.simulate import simulate_closed_loop
from so3track.so3 import exp_rodrigues, random_unit_vector


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.5, 0.7, 0.9])
    p.add_argument("--k-r", type=float, default=9.0)
    p.add_argument("--k-omega", type=float, default=4.2)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--t-final", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    inertia = Inertia.diag(3.0, 2.0, 1.0)
    ref0 = benchmark_reference(0.0)
    print("epsilon      mu       sigma  worst_ratio  max_dV0     violations")
    for eps in args.epsilons:
        g = GainSet.from_recipe(args.k_r, args.k_omega, eps)
        sigma = stability_matrices(g)[3]
        level = 2.0 * g.a * g.k_r
        worst, inc, bad = 0.0, -np.inf, 0
        for _ in range(args.runs):
            budget = rng.uniform(0.05, 0.999) * level
            share = rng.uniform()
            theta = np.arccos(max(-1.0, 1.0 - share * budget / g.k_r))
            init = RigidBodyState(exp_rodrigues(theta, random_unit_vector(rng)),
                                  ref0.omega_d + np.sqrt(2 * (1 - share) * budget) * random_unit_vector(rng))
            ctrl = TrackingController.for_initial_state("AGTS", g, inertia, benchmark_reference, init)
            tr = simulate_closed_loop(ctrl, init, NO_DISTURBANCE, args.t_final, 1e-3)
            rep = check_envelope(samples_from_arrays(tr.t, lyapunov_arrays(tr.r, tr.omega, tr.rd, tr.omega_d, g)),
                                 sigma)
            worst, inc = max(worst, rep.max_ratio), max(inc, rep.max_increase)
            bad += not rep.ok
        print(f"{eps:7.2f} {g.mu:8.5f} {sigma:11.6f} {worst:12.6f} {inc:9.2e} {bad:8d}")


if __name__ == "__main__":
    main()
