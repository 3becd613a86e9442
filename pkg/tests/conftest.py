import sys
import hypothesis.extra.numpy as npst
import numpy as np
import pytest
from hypothesis import strategies as st

from placo.domain import ConfusionMatrix, HumanProfile


def profile(phi, accuracy=0.8, cost=1.0, id=0):
    return HumanProfile(id=id, phi=ConfusionMatrix(np.asarray(phi, dtype=float)), accuracy=accuracy, cost=cost)


def random_column_stochastic(rng, k, diag_boost=0.0):
    """Dirichlet(1) columns, optionally pushed toward the diagonal."""
    alpha = np.ones((k, k)) + diag_boost * np.eye(k)
    return np.stack([rng.dirichlet(alpha[:, t]) for t in range(k)], axis=1)


@st.composite
def simplex(draw, k=None, min_k=2, max_k=8):
    if k is None:
        k = draw(st.integers(min_k, max_k))
    w = draw(npst.arrays(np.float64, (k,), elements=st.floats(0.01, 100.0)))
    return w / w.sum()


@st.composite
def column_stochastic(draw, k):
    w = draw(npst.arrays(np.float64, (k, k), elements=st.floats(0.01, 100.0)))
    return w / w.sum(axis=0, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
