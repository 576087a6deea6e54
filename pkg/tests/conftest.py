import numpy as np
import pytest

from corrdyn.cumulants import CorrelationSequence
from corrdyn.dynamics import default_model
from corrdyn.operators import random_hermitian


@pytest.fixture
def model():
    return default_model(seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_sequence(rng, top, delta=0.5, dim=2, max_order=None):
    comps = {n: random_hermitian(tuple(range(1, n + 1)), dim, rng, delta ** n)
             for n in range(1, top + 1)}
    return CorrelationSequence(comps, dim, max_order=max_order)


def max_entry(a, b):
    return float(np.max(np.abs(a.mat - b.mat)))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
