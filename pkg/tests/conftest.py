import numpy as np
import pytest

from sepcoord.product_measure import design_quadrature, sample_haar


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def mc22():
    """Shared balanced Monte Carlo measure on two qubits (2000 points)."""
    return sample_haar((2, 2), 500, 0, balanced=True)


@pytest.fixture(scope="session")
def design22_t4():
    return design_quadrature((2, 2), 4)


@pytest.fixture(scope="session")
def qubit_t2():
    return design_quadrature((2,), 2)


# --- acceptance summary -----------------------------------------------------

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(name: str, passed: bool, detail: str) -> None:
    """Store one acceptance outcome and echo it (visible with ``-s``)."""
    ACCEPTANCE[name] = (bool(passed), detail)
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for name, (ok, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
