import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from optdiv.model import table1

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def diffusion_model():
    """Reference parameters without jumps, rho = 0, eta = 2."""
    return table1(rho=0.0, eta=2.0)


@pytest.fixture
def jump_model():
    """Jump setup: gamma 0.3, lambda 0.05, rho 0.2, loaded premium 0.1725, eta 2."""
    return table1(gamma=0.3, lam=0.05, rho=0.2, p=0.1725, eta=2.0)


@pytest.fixture
def table1_config():
    return ROOT / "configs" / "table1.json"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
