from __future__ import annotations

import csv
import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qck.cloud import QuantumCloud, load_cloud  # noqa: E402

DATA = Path(str(resources.files("qck") / "data"))

ACCEPTANCE_RESULTS: dict[int, tuple[str, bool]] = {}


def bundled(name: str) -> QuantumCloud:
    return load_cloud(DATA / name)


def table1() -> list[dict[str, int]]:
    with open(DATA / "table1.csv", newline="") as fh:
        return [{k: int(v) for k, v in row.items() if k != "state"} for row in csv.DictReader(fh)]


@pytest.fixture(scope="session")
def specker_bug() -> QuantumCloud:
    return bundled("specker-bug.cloud")


@pytest.fixture(scope="session")
def pentagon() -> QuantumCloud:
    return bundled("pentagon.cloud")


@pytest.fixture(scope="session")
def tifs_cloud() -> QuantumCloud:
    return bundled("tifs.cloud")


@pytest.fixture(scope="session")
def tits_cloud() -> QuantumCloud:
    return bundled("tits.cloud")


@pytest.fixture(scope="session")
def combined() -> QuantumCloud:
    return bundled("combined.cloud")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, ok = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
