import os

import numpy as np
import pytest

from su11modes.model import PolarGrid, build_lg_basis, geometric_spectrum
from su11modes.su11 import InterferometerConfig, output_spectrum

# operating point of the reference experiment
G1, G2, PHI = 2.1, 3.3, 3.82


@pytest.fixture(scope="session")
def op_cfg():
    return InterferometerConfig(G1, G2, PHI)


@pytest.fixture(scope="session")
def small_grid():
    return PolarGrid.from_camera(32, 32, 1e-3, n_theta=64, n_phi=64)


@pytest.fixture(scope="session")
def small_basis(small_grid):
    return build_lg_basis(small_grid, 4e-3, 2, 1)


@pytest.fixture(scope="session")
def ten_mode_output(op_cfg):
    return output_spectrum(op_cfg, geometric_spectrum(0.5, 2, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_report_header(config):
    from su11modes import kernels

    forced = os.environ.get("SU11MODES_PURE_PYTHON", "")
    return f"su11modes kernel backend: {kernels.BACKEND}" + (" (forced)" if forced else "")


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def record_acceptance(number: int, passed: bool, detail: str) -> str:
    line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
