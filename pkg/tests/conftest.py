import functools
import time

import pytest
from hypothesis import settings

from hybridion.experiments import FIGURES, run_scan

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def timed_figure_scan(preset: str, r: float):
    """Scans are expensive; share them between the acceptance and experiments suites.
    Returns the result and the wall time of the one real run."""
    t0 = time.perf_counter()
    res = run_scan(FIGURES[preset].spec(r))
    return res, time.perf_counter() - t0


def figure_scan(preset: str, r: float):
    return timed_figure_scan(preset, r)[0]


@pytest.fixture
def record_criterion():
    def record(n: int, ok: bool, detail: str):
        prev = ACCEPTANCE.get(n)
        if prev is not None:
            ok, detail = prev[0] and ok, f"{prev[1]}; {detail}"
        ACCEPTANCE[n] = (ok, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
