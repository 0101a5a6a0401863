import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqbell.measurement import GeneralizedMeasurement  # noqa: E402

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


def random_kraus(dim, n_out, rng):
    """Kraus operators cut from the first ``dim`` columns of a random unitary (numpy QR)."""
    g = rng.normal(size=(dim * n_out, dim * n_out)) + 1j * rng.normal(size=(dim * n_out, dim * n_out))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    iso = q[:, :dim]
    return [iso[k * dim:(k + 1) * dim] for k in range(n_out)]


def random_measurement(dim, n_out, rng, prefix="o"):
    ops = random_kraus(dim, n_out, rng)
    return GeneralizedMeasurement(tuple(f"{prefix}{k}" for k in range(n_out)), tuple(ops))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def phi_plus():
    s = 1 / np.sqrt(2)
    v = np.array([s, 0, 0, s], dtype=complex)
    return np.outer(v, v.conj())
