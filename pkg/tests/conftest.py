import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nashmg.markov_game import MarkovPolicy

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_policy(rng, H, S, n, concentration=1.0):
    return MarkovPolicy(rng.dirichlet(np.full(n, concentration), size=(H, S)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def acceptance_report(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def report(number, passed, detail):
        lines.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        print(lines[-1])
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
