"""
Flips as algebra maps on the double cover.

A flip of the base diagonal 1–3 to 2–4 sends the new cover generators to
Laurent expressions in the old ones. The binomial images of a24 and a42 are
inverted by fresh formal letters, so pushforwards land in the old algebra
extended by those letters.
"""

import hashlib
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import networkx as nx

from surfalg.algebra import (
    AlgebraElement,
    ReductionSystem,
    Tensor,
    Tensor2,
    build_reduction,
)
from surfalg.bracket import DoubleBracket
from surfalg.covering import CoveringData, build_covering, deck_involution, theta_pm
from surfalg.repcheck import (
    MatrixRep,
    RepresentationError,
    Verdict,
    evaluate,
    identity_oracle,
    random_rep,
    sample_seed,
)
from surfalg.config import CONFIG
from surfalg.surface import MarkedSurface, SurfaceError, flip_triangulation
from surfalg.task_manager import task_manager

logger = logging.getLogger(__name__)


class MutationError(ValueError):
    pass


@dataclass(frozen=True)
class FormalInverseSymbol:
    """A fresh letter Y with YB = BY = 1."""

    name: str
    inverts: str
    base: AlgebraElement


@dataclass
class FlipMove:
    old: CoveringData
    new: CoveringData
    diagonal: str
    roles: dict[int, str]
    old_system: ReductionSystem
    new_system: ReductionSystem
    images: dict[str, AlgebraElement]
    symbols: dict[str, FormalInverseSymbol]
    derived: dict[str, AlgebraElement] = field(default_factory=dict)

    def name(self, i: int, j: int) -> str:
        """Cover generator a_ij for role labels i, j"""
        a, b = self.roles[i], self.roles[j]
        long_ids = any(len(p) > 1 for p in self.old.base.punctures)
        return f"a{a}_{b}" if long_ids else f"a{a}{b}"

    @property
    def formal(self) -> dict[str, AlgebraElement]:
        return {s.name: s.base for s in self.symbols.values()}

    def old_bracket(self) -> DoubleBracket:
        return DoubleBracket(self.old_system, self.formal)

    def new_bracket(self) -> DoubleBracket:
        return DoubleBracket(self.new_system)

    def new_element(self, label: str) -> AlgebraElement:
        """A new-cover generator, or an old diagonal lift written through the new one."""
        if label in self.derived:
            a31, a13 = self.name(3, 1), self.name(1, 3)
            if label == a31:
                letters = [(self.name(3, 4), 1), (self.name(2, 4), -1), (self.name(2, 1), 1)]
            elif label == a13:
                letters = [(self.name(1, 2), 1), (self.name(4, 2), -1), (self.name(4, 3), 1)]
            else:
                raise MutationError(f"no expression for {label}")
            return AlgebraElement.from_word(self.new_system, letters)
        if not self.new.cover.has_edge(label):
            raise MutationError(f"'{label}' is not a generator of the flipped cover")
        return AlgebraElement.generator(self.new_system, label)

    def substitution_lines(self) -> list[str]:
        lines = []
        for edge in sorted(self.images):
            image = self.images[edge]
            if image != AlgebraElement.generator(self.old_system, edge):
                lines.append(f"{edge} -> {image.serialize()}")
        for label in sorted(self.derived):
            lines.append(f"{label} -> {self.derived[label].serialize()}")
        return lines


def _roles(base: MarkedSurface, diagonal: str) -> dict[int, str]:
    edge = base.edge(diagonal)
    faces = base.faces_with_edge(diagonal)
    if len(faces) != 2 or any(len(f) != 3 for f in faces):
        raise MutationError(f"{diagonal} is not the diagonal of two triangles")
    ends = {edge.tail, edge.head}
    apexes = []
    corners = None
    for f in faces:
        tri = [base.edge(e).start(s) for e, s in f.traversal]
        apex = [p for p in tri if p not in ends]
        if len(apex) != 1:
            raise MutationError(f"face {f.id} does not span a quadrilateral with {diagonal}")
        apexes.append(apex[0])
        if corners is None:
            i = tri.index(apex[0])
            corners = (tri[i - 1], tri[i], tri[(i + 1) % 3])
    return {1: corners[0], 2: corners[1], 3: corners[2], 4: apexes[1]}


def flip_pushforward(c: CoveringData, diagonal: str) -> FlipMove:
    """The flip of `diagonal` as a map from the flipped cover's algebra to the current one."""
    if c.n != 2:
        raise MutationError(f"mutation formulas are implemented for n = 2, got {c.n}")
    if not c.base.has_edge(diagonal):
        raise MutationError(f"cover is not over a triangulation containing {diagonal}")
    roles = _roles(c.base, diagonal)
    try:
        flipped = flip_triangulation(c.base, diagonal)
    except SurfaceError as e:
        raise MutationError(str(e)) from e
    new = build_covering(flipped, 2)

    old_plain = build_reduction(c.cover, True)
    new_system = build_reduction(new.cover, True)
    move = FlipMove(
        old=c,
        new=new,
        diagonal=diagonal,
        roles=roles,
        old_system=old_plain,
        new_system=new_system,
        images={},
        symbols={},
    )
    a = move.name
    y24, y42 = f"Y{a(2, 4)}", f"Y{a(4, 2)}"
    old = old_plain.with_letters([y24, y42])
    move.old_system = old

    def word(*letters):
        return AlgebraElement.from_word(old, letters)

    b24 = word((a(2, 3), 1), (a(1, 3), -1), (a(1, 4), 1)) + word(
        (a(2, 1), 1), (a(3, 1), -1), (a(3, 4), 1)
    )
    # the opposite diagonal comes from θ⁺, which sends a24 to ±a42
    target, orientation = deck_involution(new).edges[a(2, 4)]
    sign = new_system.delta if orientation < 0 else 1
    if target != a(4, 2) or orientation > 0:
        raise MutationError(f"θ⁺ does not carry {a(2, 4)} to {a(4, 2)}")
    b42 = theta_pm(c, 1, _restrict(b24, old_plain)).scale(sign)
    b42 = AlgebraElement(old, b42.terms)

    for edge in new.cover.edge_ids:
        if edge == a(2, 4):
            move.images[edge] = b24
        elif edge == a(4, 2):
            move.images[edge] = b42
        elif c.cover.has_edge(edge):
            move.images[edge] = AlgebraElement.generator(old, edge)
        else:
            raise MutationError(f"generator {edge} has no counterpart before the flip")
    move.symbols = {
        a(2, 4): FormalInverseSymbol(y24, a(2, 4), b24),
        a(4, 2): FormalInverseSymbol(y42, a(4, 2), b42),
    }
    move.derived = {
        a(3, 1): word((a(3, 4), 1), (y24, 1), (a(2, 1), 1)),
        a(1, 3): word((a(1, 2), 1), (y42, 1), (a(4, 3), 1)),
    }
    logger.info(f"[Flip] {c.base.name}: {diagonal} with roles {roles}")
    return move


def _restrict(x: AlgebraElement, system: ReductionSystem) -> AlgebraElement:
    return AlgebraElement(system, x.terms)


def expand_inverses(x: AlgebraElement, symbols: Sequence[FormalInverseSymbol]) -> AlgebraElement:
    """Rewrite every Y⁻¹ as its base B."""
    rules = {s.name: s.base for s in symbols}
    result = AlgebraElement(x.system)
    for w, c in x.terms.items():
        term = AlgebraElement.constant(x.system, c)
        for edge, exp in w:
            if edge in rules and exp < 0:
                term = term * AlgebraElement(x.system, rules[edge].terms)
            else:
                term = term * AlgebraElement.from_word(x.system, ((edge, exp),))
        result = result + term
    return result


def _letter_image(m: FlipMove, edge: str, exp: int) -> AlgebraElement:
    if exp > 0:
        return m.images[edge]
    symbol = m.symbols.get(edge)
    if symbol is not None:
        return AlgebraElement.generator(m.old_system, symbol.name)
    image = m.images[edge]
    if len(image.terms) != 1:
        raise MutationError(f"image of {edge} is not invertible as a monomial")
    (w, c), = image.terms.items()
    inverse = tuple((e, -k) for e, k in reversed(w))
    return AlgebraElement.from_word(m.old_system, inverse, 1 / c)


def apply_pushforward(m: FlipMove, x):
    """F₊ on an element or tensor over the flipped cover."""
    if isinstance(x, Tensor):
        result = type(x)(m.old_system)
        for key, c in x.terms.items():
            slots = [apply_pushforward(m, AlgebraElement(x.system, {w: Fraction(1)})) for w in key]
            result = result + Tensor.pure(*slots).scale(c)
        return result
    if not m.new_system.compatible(x.system):
        raise MutationError("element is not over the flipped cover")
    result = AlgebraElement(m.old_system)
    for w, c in x.terms.items():
        term = AlgebraElement.constant(m.old_system, c)
        for edge, exp in w:
            term = term * _letter_image(m, edge, exp)
        result = result + term
    return expand_inverses(result, list(m.symbols.values()))


def _has_formal(m: FlipMove, x) -> bool:
    names = {s.name for s in m.symbols.values()}
    words = x.terms if isinstance(x, AlgebraElement) else [w for key in x.terms for w in key]
    return any(edge in names for w in words for edge, _ in w)


def equivariance_sides(m: FlipMove, x: AlgebraElement, y: AlgebraElement) -> tuple[Tensor2, Tensor2]:
    """(F₊⟨⟨x,y⟩⟩, ⟨⟨F₊x, F₊y⟩⟩)"""
    lhs = apply_pushforward(m, m.new_bracket().double_bracket(x, y))
    rhs = m.old_bracket().double_bracket(apply_pushforward(m, x), apply_pushforward(m, y))
    return lhs, rhs


def equivariance_check_symbolic(m: FlipMove, x: AlgebraElement, y: AlgebraElement) -> Verdict:
    fx, fy = apply_pushforward(m, x), apply_pushforward(m, y)
    if _has_formal(m, fx) or _has_formal(m, fy):
        return Verdict("deferred", "formal inverse in an image; use the numeric check")
    lhs = apply_pushforward(m, m.new_bracket().double_bracket(x, y))
    if _has_formal(m, lhs):
        return Verdict("deferred", "formal inverse in the pushed bracket; use the numeric check")
    rhs = m.old_bracket().double_bracket(fx, fy)
    if lhs == rhs:
        return Verdict("pass", "normal forms agree", checked=1)
    return Verdict("fail", f"{lhs.serialize()} != {rhs.serialize()}", checked=1)


def equivariance_check_numeric(
    m: FlipMove,
    x: AlgebraElement,
    y: AlgebraElement,
    sizes: Sequence[int] | None = None,
    samples: int | None = None,
    seed: int | None = None,
) -> Verdict:
    lhs, rhs = equivariance_sides(m, x, y)
    return identity_oracle(lhs, rhs, sizes, samples, seed, formal=m.formal, system=m.old_system)


def corrupt_move(m: FlipMove, mode: str = "drop") -> FlipMove:
    """Negative control on the image of the surviving new diagonal.

    ``drop`` removes the last term of its binomial image. A lone monomial
    behaves like a simple arc, so this mode is left to the round trip.
    ``shift`` adds a constant, which the pair checks catch.
    """
    # an eliminated diagonal never reaches its image through normal forms
    candidates = [m.name(2, 4), m.name(4, 2)]
    target = next((d for d in candidates if d in m.new_system.survivors), None)
    if target is None:
        raise MutationError("both new diagonals are eliminated")
    image = m.images[target]
    if mode == "drop":
        if len(image.terms) < 2:
            raise MutationError(f"image of {target} has no term to drop")
        dropped = sorted(image.terms)[-1]
        broken = AlgebraElement(image.system, {w: c for w, c in image.terms.items() if w != dropped})
    elif mode == "shift":
        broken = image + 1
    else:
        raise MutationError(f"unknown corruption mode: {mode}")
    images = dict(m.images)
    images[target] = broken
    symbols = dict(m.symbols)
    symbols[target] = replace(symbols[target], base=broken)
    return replace(m, images=images, symbols=symbols)


def round_trip_check(
    forward: FlipMove,
    back: FlipMove,
    sizes: Sequence[int] | None = None,
    samples: int | None = None,
    seed: int | None = None,
) -> Verdict:
    """Flip, flip back, and compare every generator with its composite image numerically."""
    sizes = list(sizes or CONFIG.get("oracle.sizes", [5, 7]))
    samples = int(samples if samples is not None else CONFIG.get("oracle.samples", 5))
    seed = int(seed if seed is not None else CONFIG.get("oracle.seed", 0))
    retries = int(CONFIG.get("oracle.max_retries", 100))
    generators = forward.old.cover.edge_ids
    checked = 0
    for N in sizes:
        for k in range(samples):
            for attempt in range(retries):
                try:
                    rep = random_rep(forward.old_system, N, sample_seed(seed, N, k, attempt)).with_formal(forward.formal)
                    middle = {e: evaluate(rep, img) for e, img in forward.images.items()}
                    mid_rep = MatrixRep(back.old_system, N, middle).with_formal(back.formal)
                    break
                except RepresentationError:
                    continue
            else:
                raise RepresentationError(f"no usable sample at N={N}, sample {k}")
            for g in generators:
                if not back.new.cover.has_edge(g):
                    raise MutationError(f"generator {g} is missing after flipping back")
                checked += 1
                if evaluate(mid_rep, back.images[g]) != rep.assignment[g]:
                    return Verdict("fail", f"{g} differs at N={N}, sample {k}", sizes, samples, seed, checked, True)
    return Verdict("pass", f"{checked} generator samples return", sizes, samples, seed, checked, True)


def numeric_pairs(m: FlipMove) -> list[tuple[str, str]]:
    """Pairs routed to the numeric oracle: old diagonal lifts against the new diagonals."""
    derived = sorted(m.derived)
    diagonals = [m.name(2, 4), m.name(4, 2)]
    pairs = []
    for d in derived:
        for g in diagonals:
            pairs.extend([(d, g), (g, d)])
    pairs.extend([(derived[0], derived[1]), (derived[1], derived[0])])
    return pairs


@dataclass
class EquivarianceReport:
    symbolic: list[tuple[str, str, Verdict]] = field(default_factory=list)
    numeric: list[tuple[str, str, Verdict]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.status != "fail" for _, _, v in self.symbolic + self.numeric) and all(
            v.passed for _, _, v in self.numeric
        )

    def counts(self, rows) -> dict[str, int]:
        out = {"pass": 0, "fail": 0, "deferred": 0}
        for _, _, v in rows:
            out[v.status] += 1
        return out


def equivariance_suite(
    m: FlipMove,
    sizes: Sequence[int] | None = None,
    samples: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> EquivarianceReport:
    generators = list(m.new.cover.edge_ids)
    pairs = [(x, y) for x in generators for y in generators]

    def symbolic(pair):
        x, y = pair
        return (x, y, equivariance_check_symbolic(m, m.new_element(x), m.new_element(y)))

    def numeric(pair):
        x, y = pair
        return (x, y, equivariance_check_numeric(m, m.new_element(x), m.new_element(y), sizes, samples, seed))

    report = EquivarianceReport()
    report.symbolic = task_manager.map_ordered(symbolic, pairs, workers)
    report.numeric = task_manager.map_ordered(numeric, numeric_pairs(m), workers)
    logger.info(
        f"[Flip] symbolic {report.counts(report.symbolic)}, numeric {report.counts(report.numeric)}"
    )
    return report


# -- exchange graph ----------------------------------------------------------


def triangulation_key(s: MarkedSurface) -> str:
    """Hash of the internal edges as unordered puncture pairs"""
    pairs = sorted(
        tuple(sorted((e.tail, e.head))) for e in s.edges if s.is_internal(e.id)
    )
    return hashlib.sha1(repr(pairs).encode()).hexdigest()[:12]


@dataclass
class ExchangeNode:
    id: str
    surface: MarkedSurface
    generators: tuple[str, ...]
    distance: int


@dataclass
class ExchangeGraph:
    root: str
    n: int
    graph: nx.Graph
    nodes: dict[str, ExchangeNode]
    generators: set[str] = field(default_factory=set)
    face_relations: list[str] = field(default_factory=list)
    mutation_relations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _node_generators(s: MarkedSurface, n: int, key: str) -> tuple[tuple[str, ...], list[str], CoveringData | None]:
    cover = build_covering(s, n)
    relations = []
    for f in cover.cover.faces:
        word = " ".join(f"{'+' if sign > 0 else '-'}{e}" for e, sign in f.word)
        relations.append(f"{word} = delta")
    names = cover.cover.edge_ids if n == 2 else tuple(f"{key}:{e}" for e in cover.cover.edge_ids)
    return tuple(names), relations, cover


def exchange_explore(base: MarkedSurface, n: int, depth: int | None) -> ExchangeGraph:
    """Breadth-first search over triangulations reachable by at most `depth` flips."""
    if depth is not None and depth < 0:
        raise MutationError(f"depth must be non-negative, got {depth}")
    root = triangulation_key(base)
    graph = nx.Graph()
    result = ExchangeGraph(root=root, n=n, graph=graph, nodes={})
    if n != 2:
        result.notes.append("substitution maps are recorded for n = 2 only")

    covers: dict[str, CoveringData] = {}

    def visit(s: MarkedSurface, key: str, distance: int):
        names, relations, cover = _node_generators(s, n, key)
        covers[key] = cover
        result.nodes[key] = ExchangeNode(key, s, names, distance)
        result.generators.update(names)
        result.face_relations.extend(relations)
        graph.add_node(key, distance=distance, generators=len(names))

    visit(base, root, 0)
    queue = deque([root])
    while queue:
        key = queue.popleft()
        node = result.nodes[key]
        if depth is not None and node.distance >= depth:
            continue
        for edge in node.surface.edges:
            if not node.surface.is_internal(edge.id):
                continue
            try:
                flipped = flip_triangulation(node.surface, edge.id)
            except SurfaceError:
                continue
            other = triangulation_key(flipped)
            if other not in result.nodes:
                visit(flipped, other, node.distance + 1)
                queue.append(other)
            if graph.has_edge(key, other):
                continue
            move = None
            if n == 2:
                move = flip_pushforward(covers[key], edge.id)
                result.mutation_relations.extend(move.substitution_lines())
            graph.add_edge(key, other, diagonal=edge.id, move=move)
    logger.info(f"[Explore] {base.name}: {graph.number_of_nodes()} nodes, {graph.number_of_edges()} flips")
    return result


def export_adjacency(g: ExchangeGraph) -> str:
    lines = []
    for node in sorted(g.graph.nodes):
        neighbors = " ".join(sorted(g.graph.neighbors(node)))
        lines.append(f"{node}: {neighbors}".rstrip())
    return "\n".join(lines) + "\n"


__all__ = [
    "MutationError",
    "FormalInverseSymbol",
    "FlipMove",
    "flip_pushforward",
    "expand_inverses",
    "apply_pushforward",
    "equivariance_sides",
    "equivariance_check_symbolic",
    "equivariance_check_numeric",
    "corrupt_move",
    "round_trip_check",
    "numeric_pairs",
    "EquivarianceReport",
    "equivariance_suite",
    "triangulation_key",
    "ExchangeNode",
    "ExchangeGraph",
    "exchange_explore",
    "export_adjacency",
]
