import socket

import pytest

from leomine.fixtures import generate_fixture, golden_spec

GOLDEN_SEED = 7


@pytest.fixture(autouse=True)
def _no_network(monkeypatch):
    """Any attempt to open a socket fails the test: the suite runs offline."""
    def guard(*args, **kwargs):
        raise RuntimeError("network access attempted during tests")
    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)


@pytest.fixture(scope="session")
def golden_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden_fixture")
    truth = generate_fixture(golden_spec(), GOLDEN_SEED, out)
    return out, truth


_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        doc = _ACCEPTANCE.get(report.nodeid, ("", ""))[1]
        _ACCEPTANCE[report.nodeid] = ("PASS" if report.passed else "FAIL", doc)


def pytest_collection_modifyitems(items):
    for item in items:
        if "test_acceptance.py::test_criterion_" in item.nodeid:
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _ACCEPTANCE[item.nodeid] = ("NOT RUN", doc)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE):
        status, doc = _ACCEPTANCE[nodeid]
        terminalreporter.write_line(f"{status:7s} criterion {doc}")
