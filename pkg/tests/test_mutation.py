import pytest

from conftest import load
from surfalg.algebra import AlgebraElement
from surfalg.covering import build_covering
from surfalg.mutation import (
    MutationError,
    apply_pushforward,
    corrupt_move,
    equivariance_check_numeric,
    equivariance_check_symbolic,
    equivariance_suite,
    exchange_explore,
    export_adjacency,
    flip_pushforward,
    numeric_pairs,
    round_trip_check,
    triangulation_key,
)


@pytest.fixture(scope="module")
def move(disk4_cover):
    return flip_pushforward(disk4_cover, "d13")


def word(m, *letters):
    return AlgebraElement.from_word(m.old_system, letters)


def test_roles_follow_the_first_triangle(move):
    assert move.roles == {1: "1", 2: "2", 3: "3", 4: "4"}
    assert move.new.base.has_edge("d13'")


def test_binomial_images(move):
    b24 = word(move, ("a23", 1), ("a13", -1), ("a14", 1)) + word(move, ("a21", 1), ("a31", -1), ("a34", 1))
    b42 = word(move, ("a41", 1), ("a31", -1), ("a32", 1)) + word(move, ("a43", 1), ("a13", -1), ("a12", 1))
    assert move.images["a24"] == b24
    assert move.images["a42"] == b42
    assert move.images["a12"] == AlgebraElement.generator(move.old_system, "a12")
    assert move.symbols["a24"].base == b24


def test_normal_form_of_new_diagonal_pushes_to_its_image(move):
    assert apply_pushforward(move, move.new_element("a24")) == move.images["a24"]
    assert apply_pushforward(move, move.new_element("a42")) == move.images["a42"]


def test_substitution_lines(move):
    lines = move.substitution_lines()
    assert [line.split(" -> ")[0] for line in lines] == ["a24", "a42", "a13", "a31"]
    assert "Ya24" in lines[3]


def test_unknown_generator(move):
    with pytest.raises(MutationError):
        move.new_element("zz")


def test_boundary_edge_is_not_a_diagonal(disk4_cover):
    with pytest.raises(MutationError, match="not the diagonal"):
        flip_pushforward(disk4_cover, "b12")


def test_mutation_needs_two_sheets(disk4):
    with pytest.raises(MutationError, match="n = 2"):
        flip_pushforward(build_covering(disk4, 3), "d13")


@pytest.mark.parametrize("x, y", [("a24", "a21"), ("a24", "a23"), ("a42", "a41"), ("a24", "a42"), ("a12", "a34")])
def test_symbolic_equivariance(move, x, y):
    verdict = equivariance_check_symbolic(move, move.new_element(x), move.new_element(y))
    assert verdict.status == "pass", verdict.detail


def test_numeric_equivariance_for_old_diagonal(move):
    verdict = equivariance_check_numeric(
        move, move.new_element("a31"), move.new_element("a24"), sizes=[2], samples=1, seed=0
    )
    assert verdict.passed, verdict.detail
    assert verdict.probabilistic


def test_numeric_pairs(move):
    pairs = numeric_pairs(move)
    assert len(pairs) == 10
    assert ("a31", "a24") in pairs
    assert ("a13", "a31") in pairs


def test_suite_passes(move):
    report = equivariance_suite(move, sizes=[2], samples=1, seed=0)
    symbolic = report.counts(report.symbolic)
    assert symbolic["fail"] == 0
    assert symbolic["pass"] > 0
    assert report.passed


def test_dropped_binomial_term_fails_the_round_trip(move):
    bad = corrupt_move(move)
    assert len(bad.images["a42"].terms) == len(move.images["a42"].terms) - 1
    assert set(bad.images["a42"].terms) < set(move.images["a42"].terms)
    assert bad.symbols["a42"].base == bad.images["a42"]
    back = flip_pushforward(move.new, "d13'")
    verdict = round_trip_check(bad, back, sizes=[2], samples=1, seed=0)
    assert verdict.status == "fail"
    assert "sample 0" in verdict.detail


def test_shifted_image_fails_a_pair(move):
    bad = corrupt_move(move, "shift")
    verdict = equivariance_check_symbolic(bad, move.new_element("a42"), move.new_element("a41"))
    assert verdict.status == "fail"
    assert move.images["a42"] != bad.images["a42"]


def test_unknown_corruption_mode(move):
    with pytest.raises(MutationError):
        corrupt_move(move, "swap")


def test_suite_at_oracle_sizes(move):
    report = equivariance_suite(move, sizes=[5, 7], samples=5, seed=0)
    assert report.passed
    assert report.counts(report.symbolic)["fail"] == 0
    assert report.counts(report.numeric)["pass"] == len(numeric_pairs(move)) == 10


def test_round_trip(move):
    back = flip_pushforward(move.new, "d13'")
    assert back.roles == {1: "2", 2: "3", 3: "4", 4: "1"}
    verdict = round_trip_check(move, back, sizes=[2], samples=1, seed=0)
    assert verdict.passed, verdict.detail


def test_pentagon_exchange_graph(disk5):
    graph = exchange_explore(disk5, 2, None)
    assert graph.graph.number_of_nodes() == 5
    assert graph.graph.number_of_edges() == 5
    assert all(degree == 2 for _, degree in graph.graph.degree())
    assert sorted(node.distance for node in graph.nodes.values()) == [0, 1, 1, 2, 2]
    assert graph.mutation_relations
    text = export_adjacency(graph)
    assert len(text.splitlines()) == 5
    assert text.startswith(sorted(graph.graph.nodes)[0] + ": ")


def test_depth_bounds_exploration(disk5):
    graph = exchange_explore(disk5, 2, 1)
    assert graph.graph.number_of_nodes() == 3
    assert graph.root == triangulation_key(disk5)


def test_higher_sheets_record_only_generators(disk4):
    graph = exchange_explore(disk4, 3, 1)
    assert graph.graph.number_of_nodes() == 2
    assert graph.mutation_relations == []
    assert graph.notes
    assert all(":" in g for g in graph.generators)


def test_negative_depth_rejected():
    with pytest.raises(MutationError):
        exchange_explore(load("disk4"), 2, -1)
