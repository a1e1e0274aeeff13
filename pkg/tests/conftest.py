import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def M2():
    return np.array([[1.0, 0.2], [0.2, 1.0]])


def random_spd(rng, n, scale=1.0):
    A = rng.normal(size=(n, n))
    return scale * (A @ A.T / n + 0.5 * np.eye(n))


def random_gaussian(rng, n, mean_scale=1.0):
    from lsicert.metrics import GaussianDist

    return GaussianDist(mean_scale * rng.normal(size=n), random_spd(rng, n))


def banded_certified(rng, n, bandwidth=2, strength=0.45):
    """Random banded precision with unit-ish diagonal and small couplings that passes the certificate."""
    from lsicert import certify, quadratic

    while True:
        d = rng.uniform(1.0, 2.0, size=n)
        M = np.diag(d)
        for k in range(1, bandwidth + 1):
            off = rng.uniform(-1, 1, size=n - k) * strength / (bandwidth * 2)
            M += np.diag(off, k) + np.diag(off, -k)
        spec = quadratic(M)
        if certify(spec).passed:
            return spec


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
