import pytest

from conftest import fixture_text, load
from surfalg.surface import (
    EdgeEnd,
    SurfaceError,
    check_symmetry,
    compose_symmetries,
    euler_characteristic,
    flip_triangulation,
    identity_symmetry,
    parse_surface,
    serialize_surface,
    symmetry_from_flip_pair,
    validate,
)


def test_fixtures_validate(any_surface):
    report = validate(any_surface)
    assert report.passed, report.lines()


def test_serialize_reparses_to_equal_surface(any_surface):
    assert parse_surface(serialize_surface(any_surface)) == any_surface


def test_euler_characteristics():
    assert euler_characteristic(load("disk3")) == 1
    assert euler_characteristic(load("disk5")) == 1
    assert euler_characteristic(load("annulus11")) == 0


def test_parallel_arcs_warn():
    report = validate(load("annulus11"))
    assert report.passed
    assert report.has("fan-order-sensitive")


def test_missing_surface_declaration():
    with pytest.raises(SurfaceError):
        parse_surface("puncture 1 2\n")


def test_unknown_keyword_reports_line():
    text = fixture_text("disk3") + "vertex 7\n"
    with pytest.raises(SurfaceError) as info:
        parse_surface(text)
    assert info.value.line == len(text.splitlines())


def test_undeclared_edge_in_face():
    text = fixture_text("disk3").replace("face f +a3 +a2 +a1", "face f +a3 +a2 +zz")
    with pytest.raises(SurfaceError, match="undeclared edge 'zz'"):
        parse_surface(text)


def test_missing_fan_end_fails_coverage():
    text = fixture_text("disk3").replace("fan 1: a1.t a3.h", "fan 1: a1.t")
    report = validate(parse_surface(text))
    assert not report.passed
    assert report.has("fan coverage")


def test_broken_face_fails_composability():
    text = fixture_text("disk3").replace("face f +a3 +a2 +a1", "face f +a3 -a2 +a1")
    report = validate(parse_surface(text))
    assert report.has("face composability")


def test_bigon_is_degenerate():
    text = "\n".join(
        [
            "surface bigon",
            "puncture 1 2",
            "edge a 1 2",
            "edge b 2 1",
            "face f +b +a",
            "fan 1: a.t b.h",
            "fan 2: b.t a.h",
        ]
    )
    report = validate(parse_surface(text))
    assert report.has("degenerate disk")


def test_flip_replaces_diagonal(disk4):
    flipped = flip_triangulation(disk4, "d13")
    assert not flipped.has_edge("d13")
    new = flipped.edge("d13'")
    assert {new.tail, new.head} == {"2", "4"}
    assert validate(flipped).passed
    assert EdgeEnd("d13'", "h") in flipped.fan(new.head)


def test_flip_of_boundary_edge_rejected(disk4):
    with pytest.raises(SurfaceError, match="external"):
        flip_triangulation(disk4, "b12")


def test_double_flip_returns_original_up_to_symmetry(disk5):
    once = flip_triangulation(disk5, "d14")
    twice = flip_triangulation(once, "d14'")
    assert twice.has_edge("d14")
    symmetry = symmetry_from_flip_pair(disk5, twice)
    assert check_symmetry(symmetry) == []


def test_identity_symmetry_composes(disk4):
    ident = identity_symmetry(disk4)
    assert check_symmetry(ident) == []
    assert compose_symmetries(ident, ident).edges == ident.edges
