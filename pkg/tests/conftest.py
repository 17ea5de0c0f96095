import math

import numpy as np
import pytest

from so3track.controllers import GainSet
from so3track.dynamics import Inertia, RigidBodyState, benchmark_reference
from so3track.so3 import E2, exp_rodrigues

THETA0 = 0.999 * math.pi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bench_gains():
    return GainSet.from_recipe(9.0, 4.2, 0.9)


@pytest.fixture
def adaptive_gains():
    return GainSet.from_recipe(9.0, 4.2, 0.9, k_delta=25.0, delta_max=3.0)


@pytest.fixture
def inertia():
    return Inertia.diag(3.0, 2.0, 1.0)


@pytest.fixture
def bench_initial():
    return RigidBodyState(benchmark_reference(0.0).rd @ exp_rodrigues(THETA0, E2), np.array([2.0, 0.0, 1.0]))


# --- acceptance report -----------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def acceptance_report():
    """Record one verdict per acceptance criterion: ``report(n, title, ok, detail)``."""

    def report(n: int, title: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE_RESULTS[n] = (bool(ok), title, detail)
        print(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
