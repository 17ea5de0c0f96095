"""Attitude tracking on SO(3): almost-global and shifted-reference global controllers,
their adaptive variants, and the Lyapunov diagnostics that certify them."""
from .controllers import (ControllerMode, GainSet, ShiftedReference, TrackingController, agts_torque,
                          adaptive_torque, adaptive_update, build_shifted_reference, gts_torque,
                          roa_membership, shifted_sample, validate_gains)
from .diagnostics import (check_envelope, eval_v, eval_v0, eval_v_bar, lyapunov_arrays,
                          stability_matrices)
from .dynamics import (Disturbance, Inertia, ReferenceSample, RigidBodyState, constant_reference,
                       fixed_axis_reference, integrate_step, benchmark_reference, state_derivative)
from .harness import Scenario, load_scenario, benchmark_scenario, run_scenario
from .simulate import simulate_closed_loop
from .so3 import (attitude_error_vector, conjugacy_angle, conjugacy_decompose, exp_rodrigues, hat,
                  project_so3, rotation_distance, rotation_z, transport_matrix, vee)

__version__ = "0.1.0"
