import pytest
from sympy import Matrix, Rational, eye, kronecker_product

from surfalg.algebra import AlgebraElement, Tensor, build_reduction
from surfalg.repcheck import (
    SYMPLECTIC_FORM,
    DecorationData,
    InvolutiveContext,
    RepresentationError,
    evaluate,
    evaluate_tensor,
    first_order_membership,
    form_checks,
    group_membership,
    holonomy_function,
    identity_oracle,
    is_unitary,
    lie_membership,
    random_rep,
    serialize_matrix,
    word_endpoints,
)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_face_words_evaluate_to_delta(any_surface, N):
    for twisted in (True, False):
        rep = random_rep(any_surface, N, seed=7, twisted=twisted)
        for face in any_surface.faces:
            value = evaluate(rep, rep.system.signed_edges(face.word))
            assert value == rep.system.delta * eye(N)


def test_same_seed_same_representation(disk4):
    first = random_rep(disk4, 3, seed=[1, 2])
    second = random_rep(disk4, 3, seed=[1, 2])
    assert first.assignment == second.assignment
    assert all(m.det() != 0 for m in first.assignment.values())


def test_dimension_must_be_positive(disk3):
    with pytest.raises(RepresentationError):
        random_rep(disk3, 0)


def test_tensor_is_a_kronecker_product(disk3):
    system = build_reduction(disk3)
    rep = random_rep(system, 2, seed=3)
    a1 = AlgebraElement.generator(system, "a1")
    a2 = AlgebraElement.generator(system, "a2")
    t = Tensor.pure(a1, a2 + 1)
    expected = kronecker_product(rep.assignment["a1"], rep.assignment["a2"] + eye(2))
    assert evaluate_tensor(rep, t) == expected


def test_oracle_accepts_equal_sides(disk3):
    system = build_reduction(disk3)
    a1 = AlgebraElement.generator(system, "a1")
    a2 = AlgebraElement.generator(system, "a2")
    verdict = identity_oracle((a1 + a2) * (a1 - a2), a1 * a1 - a1 * a2 + a2 * a1 - a2 * a2, [2, 3], 2, 0)
    assert verdict.passed
    assert verdict.probabilistic
    assert verdict.checked == 4


def test_oracle_rejects_commutator(disk3):
    system = build_reduction(disk3)
    a1 = AlgebraElement.generator(system, "a1")
    a2 = AlgebraElement.generator(system, "a2")
    verdict = identity_oracle(a1 * a2, a2 * a1, [3], 3, 5)
    assert verdict.status == "fail"
    assert verdict.line().startswith("fail (probabilistic evidence)")


def test_serialize_matrix():
    assert serialize_matrix(Matrix([[1, Rational(1, 2)], [0, -3]])) == "1/1 1/2; 0/1 -3/1"


def test_holonomy_is_multiplicative(disk3):
    rep = random_rep(disk3, 1, seed=11)
    d = DecorationData({"1": Rational(2), "2": Rational(3), "3": Rational(-5)})
    path = (("a2", 1), ("a1", 1))
    assert word_endpoints(disk3, path) == ("1", "3")
    assert holonomy_function(d, rep, path) == holonomy_function(d, rep, path[:1]) * holonomy_function(
        d, rep, path[1:]
    )


def test_holonomy_rejects_broken_paths(disk3):
    rep = random_rep(disk3, 1, seed=11)
    d = DecorationData.constant(disk3.punctures)
    with pytest.raises(RepresentationError, match="not composable"):
        holonomy_function(d, rep, (("a1", 1), ("a1", 1)))
    with pytest.raises(RepresentationError, match="rank-one"):
        holonomy_function(d, random_rep(disk3, 2, seed=1), (("a1", 1),))
    with pytest.raises(RepresentationError, match="vanishes"):
        DecorationData({"1": Rational(0)})


@pytest.mark.parametrize(
    "g, label",
    [
        (Matrix([[1, 1], [0, 1]]), "symplectic"),
        (Matrix([[2, 0], [0, Rational(1, 2)]]), "both"),
        (Matrix([[0, 1], [1, 0]]), "indefinite-orthogonal"),
        (Matrix([[2, 0], [0, 1]]), "neither"),
    ],
)
def test_group_membership(g, label):
    assert group_membership(InvolutiveContext(1), g).label == label


def _xi(ctx, x, y, z):
    return ctx.block([[x, y], [z, -ctx.sigma(x)]])


def test_lie_membership():
    ctx = InvolutiveContext(2)
    x = Matrix([[1, 2], [3, 4]])
    symmetric = _xi(ctx, x, Matrix([[1, 5], [5, 2]]), Matrix([[0, 1], [1, 3]]))
    antisymmetric = _xi(ctx, x, Matrix([[0, 1], [-1, 0]]), Matrix([[0, -2], [2, 0]]))
    assert lie_membership(ctx, symmetric).label == "sp2"
    assert lie_membership(ctx, antisymmetric).label == "o11"
    assert first_order_membership(ctx, symmetric).label == "sp2"
    assert first_order_membership(ctx, antisymmetric).label == "o11"


def test_twisted_involution():
    ctx = InvolutiveContext(2, SYMPLECTIC_FORM)
    a = Matrix([[1, 2], [3, 4]])
    b = Matrix([[0, 1], [5, -1]])
    assert ctx.sigma(ctx.sigma(a)) == a
    assert ctx.sigma(a * b) == ctx.sigma(b) * ctx.sigma(a)
    with pytest.raises(RepresentationError):
        InvolutiveContext(2, Matrix([[1, 2], [3, 4]]))


def test_unitary():
    ctx = InvolutiveContext(2)
    rotation = Matrix([[Rational(3, 5), Rational(-4, 5)], [Rational(4, 5), Rational(3, 5)]])
    assert is_unitary(ctx, rotation)
    assert not is_unitary(ctx, Matrix([[1, 1], [0, 1]]))


def test_form_checks():
    ctx = InvolutiveContext(1)
    record = form_checks(ctx, [Matrix([[1]]), Matrix([[0]])], [Matrix([[0]]), Matrix([[1]])])
    assert record.isotropic
    assert record.normalized
    assert record.pairing == eye(1)
