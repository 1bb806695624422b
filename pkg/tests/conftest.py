import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance verdicts, printed once at the end of the run
ACCEPTANCE = {}


def record(criterion, status, detail):
    ACCEPTANCE[criterion] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {status}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
