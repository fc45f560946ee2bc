import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pkanrelax.poly import Interval, Polynomial

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# (x-2)^4 - 2(x-2)^2 - 0.5(x-2), expanded
QUARTIC = Polynomial([9.0, -24.5, 22.0, -8.0, 1.0])
QUARTIC_DOMAIN = Interval(0.25, 3.75)

DEMO8 = Polynomial([0.0, 1.5, 1.3, 0.0, -0.7, 0.0, 0.08, 0.0, -0.0025])
DEMO8_DOMAIN = Interval(-4.1, 4.4)


@pytest.fixture
def quartic():
    return QUARTIC


@pytest.fixture
def demo8():
    return DEMO8


def random_poly(rng, degree, low=-1.0, high=1.0):
    return Polynomial(rng.uniform(low, high, degree + 1))


def grid_lower_hull(p, interval, n=20001):
    from pkanrelax.oracles import discrete_lower_hull

    xs = np.linspace(interval.lo, interval.hi, n)
    return discrete_lower_hull(xs, p(xs))


# acceptance results, filled by tests/test_acceptance.py and echoed at the end
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
