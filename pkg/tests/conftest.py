import time

import pytest

from petreg.scenario import bundled_path, load_raw, parse_scenario, with_overrides
from petreg.sim import run_scenario

ACCEPTANCE = {}
_RUNS = {}


def record(number, title, ok, detail=""):
    """Store one acceptance verdict; all verdicts print at the end of the session."""
    ACCEPTANCE[number] = (title, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")


def raw_doc(name, assignments=None):
    return with_overrides(load_raw(bundled_path(name)), assignments or {})


def simulate(name, assignments=None):
    """Run a bundled scenario (with ``{path: value}`` overrides) once per session.

    Returns ``(scenario, trajectory, log, seconds)``.
    """
    key = (name, tuple(sorted((assignments or {}).items())))
    if key not in _RUNS:
        sc = parse_scenario(raw_doc(name, assignments))
        t0 = time.perf_counter()
        traj, log = run_scenario(sc)
        _RUNS[key] = (sc, traj, log, time.perf_counter() - t0)
    return _RUNS[key]


def cached_runs():
    return dict(_RUNS)


@pytest.fixture(scope="session")
def four_followers():
    return simulate("four_followers")


@pytest.fixture(scope="session")
def four_followers_petm_c():
    return simulate("four_followers_petm_c")
