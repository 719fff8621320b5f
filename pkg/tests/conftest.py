import math

import pytest
from scipy.integrate import quad


class FakeStream:
    """Scripted uniform variates for exact sampler-contract tests."""

    def __init__(self, values):
        self.values = list(values)
        self.count = 0

    def uniform(self):
        self.count += 1
        return self.values.pop(0)


def survival_quadrature(spec, t):
    """Independent survival oracle: numerical quadrature of the continuous
    hazard plus the explicit atom product.  Never uses the closed-form
    cumulatives under test."""
    if t == 0.0:
        h_int = 0.0
    elif spec.continuous is None:
        h_int = 0.0
    else:
        kinks = set()
        if hasattr(spec.continuous, "breakpoints"):
            kinks.update(spec.continuous.breakpoints)
        if hasattr(spec.continuous, "a"):
            kinks.add(spec.continuous.a)
        points = sorted(k for k in kinks if 0.0 < k < t) or None
        h_int, _ = quad(spec.continuous.hazard, 0.0, t, points=points, limit=300)
    s = math.exp(-h_int)
    for a in spec.atoms:
        if a.offset <= t:
            s *= 1.0 - a.mass
    return s


@pytest.fixture
def fake_stream():
    return FakeStream
