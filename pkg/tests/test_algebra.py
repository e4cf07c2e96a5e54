from fractions import Fraction

import pytest

from surfalg.algebra import (
    AlgebraElement,
    AlgebraMismatchError,
    ElementSyntaxError,
    GroupWord,
    ReductionError,
    Tensor,
    abelianize,
    build_reduction,
    cyclic_reduce,
    free_reduce,
    minimal_rotation,
    mu,
    parse_element,
    parse_tensor,
    tau,
)
from surfalg.surface import parse_surface


@pytest.fixture
def system(disk3):
    return build_reduction(disk3, True)


def gen(system, edge, exp=1):
    return AlgebraElement.generator(system, edge, exp)


def test_free_reduce_cancels_adjacent_inverses():
    assert free_reduce([("a", 1), ("b", 1), ("b", -1), ("a", -1), ("c", 1)]) == (("c", 1),)


def test_disk3_eliminates_one_edge(system):
    assert system.rank == 2
    assert set(system.survivors) == {"a1", "a2"}
    assert system.substitutions["a3"] == GroupWord(-1, (("a1", -1), ("a2", -1)))


def test_untwisted_substitution_has_no_sign(disk3):
    untwisted = build_reduction(disk3, False)
    assert untwisted.substitutions["a3"].sign == 1
    assert untwisted.delta == 1


def test_face_words_are_delta(any_surface):
    for twisted in (True, False):
        system = build_reduction(any_surface, twisted)
        for face in any_surface.faces:
            value = AlgebraElement.from_signed_edges(system, face.word)
            assert value == system.delta


def test_reversal_is_delta_times_inverse(system):
    reversed_edge = AlgebraElement.from_signed_edges(system, [("a1", -1)])
    assert reversed_edge == -gen(system, "a1", -1)


def test_rank_below_two_rejected():
    bigon = parse_surface(
        "\n".join(
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
    )
    with pytest.raises(ReductionError, match="free rank"):
        build_reduction(bigon)


def test_products_of_inverses_normalize(system):
    a1 = gen(system, "a1")
    assert (a1 * gen(system, "a1", -1)) == 1
    a3 = gen(system, "a3")
    assert a3 * gen(system, "a2") * a1 == -1


def test_arithmetic_laws(system):
    a1, a2 = gen(system, "a1"), gen(system, "a2")
    x = a1 + a2.scale(Fraction(1, 2))
    y = a1 * a2 - 3
    assert x * (y + a1) == x * y + x * a1
    assert (x + y) - y == x
    assert (x * 0).is_zero()
    assert (a1 * a2).degree() == 2


def test_elements_over_different_surfaces_do_not_mix(system, disk4):
    other = build_reduction(disk4, True)
    with pytest.raises(AlgebraMismatchError):
        gen(system, "a1") + gen(other, "b12")


def test_parse_serialize_roundtrip(system):
    x = parse_element("1/2 * a1 a2^-1 - 3 * a2 + 1", system)
    assert parse_element(x.serialize(), system) == x
    assert x.serialize() == "1/1 * 1 + 1/2 * a1^1 a2^-1 + -3/1 * a2^1"


def test_parse_uses_normal_form(system):
    assert parse_element("a3", system) == gen(system, "a3")
    assert parse_element("a3 a2 a1", system) == -1


def test_parse_rejects_unknown_letters(system):
    with pytest.raises(ElementSyntaxError, match="unknown letter"):
        parse_element("a1 zz", system)
    with pytest.raises(ElementSyntaxError):
        parse_element("a1 +", system)


def test_parse_tensor(system):
    t = parse_tensor("1/2 * (a2 a1) (x) (1)", system)
    expected = Tensor.pure(gen(system, "a2") * gen(system, "a1"), AlgebraElement.one(system)).scale(
        Fraction(1, 2)
    )
    assert t == expected
    assert parse_tensor(t.serialize(), system) == t


def test_tau_and_mu(system):
    a1, a2 = gen(system, "a1"), gen(system, "a2")
    t = Tensor.pure(a1, a2)
    assert tau(t) == Tensor.pure(a2, a1)
    assert tau(tau(t)) == t
    t3 = Tensor.pure(a1, a2, a1 * a2)
    assert tau(tau(tau(t3))) == t3
    assert mu(t) == a1 * a2


def test_cyclic_reduction():
    w = (("a", 1), ("b", 1), ("c", 1), ("a", -1))
    assert cyclic_reduce(w) == (("b", 1), ("c", 1))
    assert minimal_rotation((("b", 1), ("a", 1))) == (("a", 1), ("b", 1))


def test_abelianize_is_a_trace(system):
    a1, a2 = gen(system, "a1"), gen(system, "a2")
    x = a1 * a2 + a2.scale(2)
    y = a2 * a1 * a1 - a1
    assert abelianize(x * y) == abelianize(y * x)
    g = a1 * a2
    assert abelianize(g * x * gen(system, "a2", -1) * gen(system, "a1", -1)) == abelianize(x)


def test_extra_letters_stay_free(disk4):
    system = build_reduction(disk4, True).with_letters(["Y"])
    y = AlgebraElement.generator(system, "Y")
    assert y.letters() == {"Y"}
    assert parse_element("Y b12", system) == y * AlgebraElement.generator(system, "b12")
