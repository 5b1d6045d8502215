import sys

import numpy as np
import pytest
from hypothesis import settings

from nematic_plates import MaterialParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    """mu=1, kappa=2 (gamma=1/2), alpha0=h0=1 (delta0=1/2)."""
    return MaterialParams(mu=1.0, kappa=2.0, alpha0=1.0, h0=1.0)


@pytest.fixture
def params_unit_delta():
    """Same moduli with delta0 = alpha0 / (2 h0) = 1."""
    return MaterialParams(mu=1.0, kappa=2.0, alpha0=2.0, h0=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
