import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hsl(rng, shape=(3, 8, 8)):
    """Chromatic HSL planes away from the achromatic and extreme-lightness edges."""
    h = rng.uniform(0.0, 2 * np.pi, shape[1:])
    s = rng.uniform(0.05, 0.95, shape[1:])
    l = rng.uniform(0.05, 0.95, shape[1:])
    return np.stack([h, s, l])


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
