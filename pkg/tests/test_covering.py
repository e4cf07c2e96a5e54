import re
from fractions import Fraction

import pytest

from conftest import load
from surfalg.algebra import AlgebraElement, Tensor, build_reduction
from surfalg.bracket import DoubleBracket, quasi_poisson_check
from surfalg.covering import (
    CoveringError,
    build_covering,
    deck_involution,
    disambiguate_theta_law,
    scaffold_counts,
    serialize_sidecar,
    theta_pm,
    triangle_scaffold,
)
from surfalg.surface import check_symmetry, euler_characteristic, parse_surface, serialize_surface, validate


@pytest.mark.parametrize(
    "n, expected",
    [
        (2, (3, 1, 6, 6)),
        (3, (6, 3, 9, 9)),
    ],
)
def test_scaffold_counts(n, expected):
    sc = triangle_scaffold("t", ("1", "2", "3"), n)
    counts = (len(sc.whites), len(sc.interior_blacks), len(sc.edge_blacks), len(sc.zigzags))
    assert counts == expected
    # one marked corner per cell, each corner used n times
    assert sorted(sc.cell_corners) == sorted(["1", "2", "3"] * n)


@pytest.mark.parametrize(
    "name, n, chi",
    [
        ("triangle", 2, 1),
        ("triangle", 3, 0),
        ("disk4", 2, 0),
        ("disk4", 3, -3),
        ("disk5", 2, -1),
    ],
)
def test_riemann_hurwitz(name, n, chi):
    data = build_covering(load(name), n)
    assert euler_characteristic(data.cover) == chi
    assert data.riemann_hurwitz() == (chi, chi)
    assert all(len(fiber) == n for fiber in data.fibers.values())
    assert len(data.cover.punctures) == n * len(data.base.punctures)


def test_scaffold_counts_per_triangle(disk4):
    counts = scaffold_counts(build_covering(disk4, 3))
    assert counts == {"f1": (6, 3, 9, 9), "f2": (6, 3, 9, 9)}


def test_double_cover_shape(disk4_cover):
    cover = disk4_cover.cover
    assert len(cover.punctures) == 8
    assert len(cover.edges) == 10
    assert len(cover.faces) == 2
    assert all(len(face) == 6 for face in cover.faces)
    assert validate(cover).passed
    assert disk4_cover.lifts["d13"] == ("a13", "a31")


def test_sidecar(disk4_cover):
    text = serialize_sidecar(disk4_cover)
    assert text.startswith("# cover of disk4, n = 2\n")
    assert "lift d13 -> a13 a31\n" in text
    assert "fiber 1 -> 1_1 1_2\n" in text
    assert text.endswith("ram 2\n")


def test_deck_involution_is_a_symmetry(disk4_cover):
    theta = deck_involution(disk4_cover)
    assert check_symmetry(theta) == []
    assert theta.edges["a31"] == ("a13", -1)
    assert theta.punctures["1_1"] == "1_2"


def test_theta_is_an_anti_involution(disk4_cover, disk4_cover_bracket):
    system = disk4_cover_bracket.system
    gens = [AlgebraElement.generator(system, e) for e in disk4_cover.cover.edge_ids]
    for sign in (1, -1):
        for x in gens:
            assert theta_pm(disk4_cover, sign, theta_pm(disk4_cover, sign, x)) == x
        x, y = gens[0], gens[3]
        assert theta_pm(disk4_cover, sign, x * y) == theta_pm(disk4_cover, sign, y) * theta_pm(
            disk4_cover, sign, x
        )


def test_theta_on_a_generator(disk4_cover, disk4_cover_bracket):
    system = disk4_cover_bracket.system
    a13 = AlgebraElement.generator(system, "a13")
    a31 = AlgebraElement.generator(system, "a31")
    assert theta_pm(disk4_cover, 1, a31) == a13.scale(system.delta)
    assert theta_pm(disk4_cover, -1, a31) == a13.scale(-system.delta)


def test_bracket_at_a_shared_lift(disk4_cover_bracket):
    br = disk4_cover_bracket
    system = br.system
    a41 = AlgebraElement.generator(system, "a41")
    a43 = AlgebraElement.generator(system, "a43")
    a14 = AlgebraElement.generator(system, "a14")
    assert br(a41, a43) == Tensor.pure(a41, a43).scale(Fraction(1, 2))
    assert br(a14, a43).is_zero()


def test_theta_law_is_found(disk4_cover, disk4_cover_bracket):
    report = disambiguate_theta_law(disk4_cover, disk4_cover_bracket)
    assert report.pairs == 100
    assert report.law(1) == "direct"
    assert report.law(-1) == "direct"
    assert report.swapped == {1: False, -1: False}


def test_cover_is_quasi_poisson(disk4_cover_bracket):
    report = quasi_poisson_check(disk4_cover_bracket, word_samples=0)
    assert report.passed, report.failures[:3]


def test_untwisted_cover_bracket(disk4_cover):
    br = DoubleBracket(build_reduction(disk4_cover.cover, False))
    a41 = AlgebraElement.generator(br.system, "a41")
    a43 = AlgebraElement.generator(br.system, "a43")
    assert br(a41, a43) == Tensor.pure(a41, a43).scale(Fraction(1, 2))


def test_loops_have_no_double_cover(annulus):
    with pytest.raises(CoveringError, match="loop"):
        build_covering(annulus, 2)


def test_sheet_count_must_be_at_least_two(disk3):
    with pytest.raises(CoveringError, match="at least 2"):
        build_covering(disk3, 1)


def test_theta_needs_two_sheets(disk4):
    data = build_covering(disk4, 3)
    with pytest.raises(CoveringError, match="n = 2"):
        deck_involution(data)


@pytest.mark.parametrize("name", ["triangle", "disk4"])
def test_three_sheeted_cover_reparses(name):
    cover = build_covering(load(name), 3).cover
    assert all(re.fullmatch(r"[A-Za-z0-9_']+", f.id) for f in cover.faces)
    text = serialize_surface(cover)
    again = parse_surface(text)
    assert serialize_surface(again) == text
    assert validate(again).passed
