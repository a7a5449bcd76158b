import numpy as np
import pytest

from slicedvp import _kernels

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
# criterion number -> list of informational lines (reference-rule comparisons)
ACCEPTANCE_INFO = {}


@pytest.fixture(params=sorted(_kernels.backends()))
def backend(request):
    """Run a test once per available kernel backend."""
    saved = _kernels.ACTIVE
    _kernels.use(request.param)
    yield request.param
    _kernels.use(saved)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        for line in ACCEPTANCE_INFO.get(n, []):
            terminalreporter.write_line(f"criterion {n:2d}: INFO  {line}")
