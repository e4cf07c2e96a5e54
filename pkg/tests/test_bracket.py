from fractions import Fraction

import numpy as np
import pytest

from conftest import FIXTURES, load
from surfalg.algebra import AlgebraElement, Tensor, build_reduction, tau
from surfalg.bracket import (
    LOCAL_TABLE,
    BracketError,
    DoubleBracket,
    EndIncidence,
    composable_words,
    descent_check,
    lie_check,
    quasi_poisson_check,
)
from surfalg.surface import HEAD, TAIL, SurfaceSymmetry, apply_symmetry, check_symmetry


def bracket_for(surface, twisted=True):
    return DoubleBracket(build_reduction(surface, twisted))


def gen(bracket, edge, exp=1):
    return AlgebraElement.generator(bracket.system, edge, exp)


def test_local_table_is_skew():
    for (k1, k2, first_left), case in LOCAL_TABLE.items():
        mirror = LOCAL_TABLE[(k2, k1, not first_left)]
        assert mirror.coefficient == -case.coefficient
        left, right = case.words("x", "y")
        m_left, m_right = mirror.words("y", "x")
        # -tau swaps the slots
        assert (m_left, m_right) == (right, left)


def test_disk3_generator_brackets(disk3):
    br = bracket_for(disk3)
    a1, a2 = gen(br, "a1"), gen(br, "a2")
    one = AlgebraElement.one(br.system)
    assert br(a1, a2) == Tensor.pure(a2 * a1, one).scale(Fraction(1, 2))
    assert br(a2, a1) == Tensor.pure(one, a2 * a1).scale(Fraction(-1, 2))


def test_local_pair_on_different_curves_rejected(disk3):
    br = bracket_for(disk3)
    with pytest.raises(BracketError, match="different decoration curves"):
        br.local_pair_bracket(EndIncidence("a1", TAIL, "1", 0), EndIncidence("a2", HEAD, "3", 1))


def test_skew_symmetry_on_words(disk4):
    br = bracket_for(disk4)
    words = composable_words(disk4, 2)[:12]
    for w in words:
        for v in words:
            x = AlgebraElement.from_word(br.system, w)
            y = AlgebraElement.from_word(br.system, v)
            assert br(y, x) == -tau(br(x, y))


def test_leibniz_in_second_argument(disk4):
    br = bracket_for(disk4)
    one = AlgebraElement.one(br.system)
    x = gen(br, "b12") + gen(br, "d13")
    y = gen(br, "b34") * gen(br, "d13", -1)
    z = gen(br, "b12", -1) + 2
    lhs = br(x, y * z)
    rhs = Tensor.pure(y, one) * br(x, z) + br(x, y) * Tensor.pure(one, z)
    assert lhs == rhs


def test_uniderivation_at_a_puncture(threearcs):
    br = bracket_for(threearcs)
    one = AlgebraElement.one(br.system)
    a1, a2, a3 = gen(br, "a1"), gen(br, "a2"), gen(br, "a3")
    assert br.uniderivation("p", a1) == -Tensor.pure(one, a1)
    assert br.uniderivation("p", a2) == Tensor.pure(a2, one)
    assert br.uniderivation("p", a3) == -Tensor.pure(one, a3)
    with pytest.raises(BracketError, match="unknown puncture"):
        br.uniderivation("zz", a1)


def test_triple_bracket_matches_derivation_formula(threearcs):
    br = bracket_for(threearcs)
    one = AlgebraElement.one(br.system)
    a1, a2, a3 = gen(br, "a1"), gen(br, "a2"), gen(br, "a3")
    expected = Tensor.pure(one, a2 * a3, a1).scale(Fraction(1, 4))
    assert br.triple_from_derivation(a1, a2, a3) == expected
    assert br.triple_bracket(a1, a2, a3) == expected


@pytest.mark.parametrize("name", FIXTURES)
def test_quasi_poisson_on_fixtures(name):
    surface = load(name)
    report = quasi_poisson_check(bracket_for(surface), word_samples=4, seed=1)
    assert report.generator_triples == len(surface.edge_ids) ** 3
    assert report.passed, report.failures[:3]


def test_quasi_poisson_untwisted(disk3):
    assert quasi_poisson_check(bracket_for(disk3, False), word_samples=0).passed


def test_face_words_descend(any_surface):
    report = descent_check(bracket_for(any_surface))
    assert report.checked > 0
    assert report.passed, report.failures[:3]


def test_cyclic_bracket_is_a_lie_bracket(any_surface):
    report = lie_check(bracket_for(any_surface), samples=50, seed=3)
    assert report.triples == 50
    assert report.passed, report.failures[:3]


def word_pool(surface):
    return [w for n in range(1, 5) for w in composable_words(surface, n)]


def random_element(br, rng, pool):
    x = AlgebraElement.zero(br.system)
    for _ in range(int(rng.integers(1, 4))):
        w = pool[int(rng.integers(len(pool)))]
        c = Fraction(int(rng.integers(-3, 4)) or 1, int(rng.integers(1, 4)))
        x = x + AlgebraElement.from_word(br.system, w, c)
    return x


def test_random_skew_symmetry(any_surface):
    br = bracket_for(any_surface)
    rng = np.random.default_rng(11)
    pool = word_pool(any_surface)
    for _ in range(100):
        x, y = random_element(br, rng, pool), random_element(br, rng, pool)
        assert br(y, x) == -tau(br(x, y)), (x, y)


def test_random_leibniz_rules(any_surface):
    br = bracket_for(any_surface)
    one = AlgebraElement.one(br.system)
    rng = np.random.default_rng(12)
    pool = word_pool(any_surface)
    for _ in range(100):
        x, y, z = (random_element(br, rng, pool) for _ in range(3))
        outer = Tensor.pure(y, one) * br(x, z) + br(x, y) * Tensor.pure(one, z)
        assert br(x, y * z) == outer, (x, y, z)
        inner = Tensor.pure(one, x) * br(y, z) + br(x, z) * Tensor.pure(y, one)
        assert br(x * y, z) == inner, (x, y, z)


def disk4_half_turn(disk4):
    return SurfaceSymmetry(
        source=disk4,
        target=disk4,
        punctures={"1": "3", "2": "4", "3": "1", "4": "2"},
        edges={
            "b12": ("b34", 1),
            "b23": ("b41", 1),
            "b34": ("b12", 1),
            "b41": ("b23", 1),
            "d13": ("d13", -1),
        },
        faces={"f1": "f2", "f2": "f1"},
    )


def test_bracket_commutes_with_a_symmetry(disk4):
    f = disk4_half_turn(disk4)
    assert check_symmetry(f) == []
    br = bracket_for(disk4)

    def push(x):
        return apply_symmetry(f, x, system=br.system)

    def push_tensor(t):
        total = Tensor.zero(br.system)
        for (w1, w2), c in t.terms.items():
            left = AlgebraElement(br.system, {w1: Fraction(1)})
            right = AlgebraElement(br.system, {w2: Fraction(1)})
            total = total + Tensor.pure(push(left), push(right)).scale(c)
        return total

    words = [((e, k),) for e in disk4.edge_ids for k in (1, -1)] + composable_words(disk4, 2)[:10]
    elements = [AlgebraElement.from_word(br.system, w) for w in words]
    for x in elements:
        for y in elements:
            assert br(push(x), push(y)) == push_tensor(br(x, y)), (x, y)
