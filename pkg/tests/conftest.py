import sys

import pytest
from hypothesis import HealthCheck, settings

from sosieforge import corpus_dir, load_program
from sosieforge.sesig import collect_signatures
from sosieforge.typecheck import typecheck

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")
# the interpreter raises this on first use; doing it up front keeps hypothesis quiet
sys.setrecursionlimit(max(sys.getrecursionlimit(), 10_000))

LARGE = ("hashmap", "textkit", "arraystats")
SMALL = ("sigdemo", "bank")


@pytest.fixture(scope="session")
def programs():
    return {name: load_program(corpus_dir(name)) for name in LARGE + SMALL}


@pytest.fixture(scope="session")
def scopes(programs):
    return {name: typecheck(p) for name, p in programs.items()}


@pytest.fixture(scope="session")
def stores(programs):
    return {name: collect_signatures(p) for name, p in programs.items()}


def pytest_collection_modifyitems(config, items):
    # acceptance checks reuse work recorded by the module tests, so they run last
    items.sort(key=lambda item: item.nodeid.startswith("tests/test_acceptance.py"))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, line = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {line}")
