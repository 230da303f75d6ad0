import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from levyrmt import wigner_levy  # noqa: E402

# acceptance outcomes, printed at the end of the run
ACCEPTANCE: dict = {}

_RP_CACHE: dict = {}


def running_params(alpha):
    """Solved running parameters for unit range, shared across the session."""
    if alpha not in _RP_CACHE:
        t0 = time.perf_counter()
        rp = wigner_levy.solve_running_params(alpha)
        _RP_CACHE[alpha] = (rp, time.perf_counter() - t0)
    return _RP_CACHE[alpha]


@pytest.fixture
def record():
    def _record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
