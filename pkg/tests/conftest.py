import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

# Acceptance tests append (criterion number, label, passed, detail) here; the
# terminal summary prints one line per criterion after the run so the results
# survive pytest's output capture.
ACCEPTANCE_LINES: list[tuple[int, str, bool, str]] = []


def record_criterion(number: int, label: str, passed: bool, detail: str):
    ACCEPTANCE_LINES.append((number, label, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{number:02d}] {label}: {status}  {detail}")


@pytest.fixture(scope="session")
def default_config():
    from vcoreservoir import ReservoirSpec, random_reservoir

    return random_reservoir(ReservoirSpec())


@pytest.fixture(scope="session")
def tiny_config():
    """A 6-neuron fabric, cheap enough for per-test dynamics checks."""
    from vcoreservoir import ReservoirSpec, random_reservoir

    spec = ReservoirSpec(
        n_neurons=6,
        connection_density=0.25,
        input_density=0.8,
        weight_distribution=2,
        seed=5,
    )
    return random_reservoir(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
