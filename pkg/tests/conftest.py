from __future__ import annotations

import pytest

from oaindex.ensemble import fuse_all, load_scores
from oaindex.fixture import write_fixture
from oaindex.taxonomy import load_taxonomy


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    return write_fixture(tmp_path_factory.mktemp("fixture"))


@pytest.fixture(scope="session")
def taxonomy_files(fixture_paths):
    return {k: fixture_paths[k] for k in ("dwa_file", "task_file", "occupation_file", "task_dwa_file")}


@pytest.fixture(scope="session")
def taxonomy(taxonomy_files):
    return load_taxonomy(**taxonomy_files)


@pytest.fixture(scope="session")
def fused(fixture_paths):
    return fuse_all(load_scores(fixture_paths["scores"]))


_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _acceptance[report.nodeid] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{outcome} {nodeid.split('::')[-1]}")
