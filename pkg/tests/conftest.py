import numpy as np
import pytest


def random_probs(rng, n, k, conc=1.0):
    """Dense row-stochastic N x k matrix."""
    return rng.dirichlet(np.full(k, conc), size=n)


def random_groups(rng, n, k):
    """Labels 0..k-1 with every group present."""
    g = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    return rng.permutation(g)


def tied_response(rng, n, levels=4):
    return rng.integers(0, levels, size=n).astype(float)


@pytest.fixture
def rng():
    return np.random.default_rng(20131015)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
