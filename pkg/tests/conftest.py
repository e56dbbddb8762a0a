import numpy as np
import pytest
from hypothesis import strategies as st

from squaretwist.origami import registry
from squaretwist.quat import UnitQuaternion
from squaretwist.repvar import propagate_batch


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# 4-vectors bounded away from zero, normalized
quaternion_arrays = (
    st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=4, max_size=4)
    .filter(lambda v: np.linalg.norm(v) > 0.1)
    .map(_unit)
)
unit_quaternions = quaternion_arrays.map(UnitQuaternion.from_array)
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="session")
def samples():
    """A few propagate samples per origami, keyed by registry name."""
    out = {}
    for name in ("fig1", "sprime", "l22"):
        o = registry(name)
        batch = propagate_batch(o, [(7, k) for k in range(8)])
        assert batch.ok.all()
        out[name] = (o, batch.representations())
    return out


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
