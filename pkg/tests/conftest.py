import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from critnls.domain import build_domain  # noqa: E402
from critnls.potentials import sample_potential, well  # noqa: E402
from critnls.solvers import SolverConfig, find_local_minimizer, find_mountain_pass  # noqa: E402

ACCEPTANCE_LINES: list[str] = []
SOLVE_SECONDS: dict[str, float] = {}


@pytest.fixture(scope="session")
def well_setup():
    """N=3 log grid with the depth-7 unit well."""
    d = build_domain(3, "radial-log-spaced", 40.0, 4096)
    V, _ = sample_potential(well(7.0), d)
    return d, V


@pytest.fixture(scope="session")
def minimizers(well_setup):
    d, V = well_setup
    t0 = time.perf_counter()
    out = {mu: find_local_minimizer(d, V, SolverConfig(mu=mu)) for mu in (0.01, 0.05, 0.1)}
    SOLVE_SECONDS["minimizers"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def saddles(well_setup, minimizers):
    d, V = well_setup
    t0 = time.perf_counter()
    out = {mu: find_mountain_pass(d, V, SolverConfig(mu=mu), minimizer=b) for mu, b in minimizers.items()}
    SOLVE_SECONDS["saddles"] = time.perf_counter() - t0
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
