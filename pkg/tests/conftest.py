import pathlib

import pytest

from cuspgrowth.models import GroupSpec, build_model, load_spec

ROOT = pathlib.Path(__file__).resolve().parent.parent
SPECS = ROOT / "specs"

PSL_GENS = {"T": [1, 1, 0, 1], "S": [0, -1, 1, 0]}


@pytest.fixture(scope="session")
def psl():
    """The shipped modular-group model (truncation 14); caches are shared across tests."""
    return build_model(load_spec(SPECS / "psl2z.yaml"))


@pytest.fixture(scope="session")
def psl_small():
    return build_model(GroupSpec.half_plane(PSL_GENS, ["T"], 1.0, 10))


@pytest.fixture(scope="session")
def psl_cocompact():
    return build_model(GroupSpec.half_plane(PSL_GENS, [], 1.0, 10))


@pytest.fixture(scope="session")
def tree():
    return build_model(GroupSpec.cusped_cayley(["a", "b"], [], 0, 8))


@pytest.fixture(scope="session")
def cusped():
    return build_model(GroupSpec.cusped_cayley(["a", "b"], ["a"], 5, 8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
