import os
from pathlib import Path

import pytest

from robust_rcpsp.instances import chain3, par2
from robust_rcpsp.milp import default_backend

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
J301 = DATA / "j301_1.sm"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")
    config.addinivalue_line("markers", "solver: needs an external MILP backend")
    config._criteria = {}


@pytest.fixture
def chain():
    return chain3()


@pytest.fixture
def par():
    return par2()


@pytest.fixture(scope="session")
def backend():
    cfg = default_backend(time_limit=60)
    if cfg is None:
        pytest.skip("no MILP backend available")
    return cfg


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    results = item.config._criteria
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        prior = results.get(label, "PASS")
        state = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        rank = {"PASS": 0, "SKIP": 1, "FAIL": 2}
        results[label] = state if rank[state] > rank[prior] else prior
        if label not in item.config.__dict__.setdefault("_criteria_order", []):
            item.config._criteria_order.append(label)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label in config._criteria_order:
        terminalreporter.write_line(f"{results[label]:4}  {label}")


def corpus_dir(family: str) -> Path | None:
    """PSPLib family directory from ROBUST_RCPSP_PSPLIB or data/psplib."""
    roots = [os.environ.get("ROBUST_RCPSP_PSPLIB"), Path(__file__).parent.parent / "data" / "psplib"]
    for root in roots:
        if root and (Path(root) / family).is_dir():
            return Path(root) / family
    return None
