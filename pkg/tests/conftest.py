import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_channel(rng, N, M, L):
    from trdma.channel import ChannelSet

    h = (rng.standard_normal((N, M, L)) + 1j * rng.standard_normal((N, M, L))) / np.sqrt(2)
    return ChannelSet.from_taps(h)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_channel(rng):
    return random_channel(rng, 2, 2, 3)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance check; the lines are echoed in the summary."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
