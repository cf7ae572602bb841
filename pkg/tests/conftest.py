import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def random_ket(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def random_operator(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_operator(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))
