from importlib import resources

import pytest

from surfalg.algebra import build_reduction
from surfalg.bracket import DoubleBracket
from surfalg.covering import build_covering
from surfalg.surface import parse_surface

FIXTURES = ("disk3", "disk4", "disk5", "threearcs", "triangle", "annulus11")


def fixture_text(name: str) -> str:
    return (resources.files("surfalg") / "fixtures" / f"{name}.surf").read_text()


def load(name: str):
    return parse_surface(fixture_text(name))


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("SURFALG_WORKERS_COUNT", "1")
    monkeypatch.setenv("SURFALG_DATABASE_ENABLED", "false")


@pytest.fixture(params=FIXTURES)
def any_surface(request):
    return load(request.param)


@pytest.fixture
def disk3():
    return load("disk3")


@pytest.fixture
def disk4():
    return load("disk4")


@pytest.fixture
def disk5():
    return load("disk5")


@pytest.fixture
def threearcs():
    return load("threearcs")


@pytest.fixture
def triangle():
    return load("triangle")


@pytest.fixture
def annulus():
    return load("annulus11")


@pytest.fixture(scope="session")
def disk4_cover():
    return build_covering(load("disk4"), 2)


@pytest.fixture(scope="session")
def disk4_cover_bracket(disk4_cover):
    return DoubleBracket(build_reduction(disk4_cover.cover, True))
