import numpy as np
import pytest

from cropdiv import CountCube

_criteria: dict[int, list] = {}


@pytest.fixture
def hand_cube():
    """Two cells with counts (30, 10) and (10, 10)."""
    return CountCube.from_counts([[30, 10], [10, 10]])


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20181))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key in report.keywords:
        if key.startswith("criterion_"):
            n = int(key.split("_")[1])
            _criteria.setdefault(n, []).append((report.nodeid, report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.keywords[f"criterion_{m.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcomes = [o for _, o in _criteria[n]]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        names = ", ".join(nid.split("::")[-1] for nid, _ in _criteria[n])
        terminalreporter.write_line(f"criterion {n:2d}: {status}  ({names})")
