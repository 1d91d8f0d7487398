from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from robust_hellinger.dist import BinnedDistribution

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def distributions(draw, n_atoms=None, min_atoms=1, max_atoms=20, allow_zeros=True):
    """Random valid point distribution built from integer weights (so masses are rational)."""
    n = n_atoms if n_atoms is not None else draw(st.integers(min_atoms, max_atoms))
    low = 0 if allow_zeros else 1
    weights = draw(st.lists(st.integers(low, 1000), min_size=n, max_size=n).filter(lambda w: sum(w) > 0))
    total = sum(weights)
    masses = np.array([w / total for w in weights])
    masses = masses / math.fsum(masses)
    return BinnedDistribution.points(masses)


@st.composite
def pairs(draw, min_atoms=2, max_atoms=20, allow_zeros=True):
    n = draw(st.integers(min_atoms, max_atoms))
    return (
        draw(distributions(n, allow_zeros=allow_zeros)),
        draw(distributions(n, allow_zeros=allow_zeros)),
    )


@st.composite
def triples(draw, min_atoms=2, max_atoms=12, allow_zeros=True):
    n = draw(st.integers(min_atoms, max_atoms))
    return tuple(draw(distributions(n, allow_zeros=allow_zeros)) for _ in range(3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
