import numpy as np
import pytest

from sparsesel import Dataset


def random_dataset(rng, n, p, k0=None, noise=1.0):
    """Gaussian design; if ``k0`` is given the response follows the first k0 columns."""
    a = rng.standard_normal((n, p))
    if k0 is None:
        y = rng.standard_normal(n)
    else:
        y = a[:, :k0] @ rng.uniform(1.0, 3.0, size=k0) + noise * rng.standard_normal(n)
    return Dataset(a, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
