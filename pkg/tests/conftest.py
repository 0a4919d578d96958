import math
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from willmore_lab import get_surface

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

# acceptance criterion -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


@lru_cache(maxsize=None)
def surface(name, **params):
    """Catalog entries are compiled through sympy, so share them across tests."""
    return get_surface(name, **params)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def sphere():
    return surface("sphere")


@pytest.fixture(scope="session")
def catenoid():
    return surface("catenoid")


@pytest.fixture(scope="session")
def plane():
    return surface("plane")


def rotation(seed):
    """A random rotation of R^3 (QR of a Gaussian matrix with sign fix)."""
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


TAU = 2 * math.pi
