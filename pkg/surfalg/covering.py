"""
The n:1 ramified covering of a triangulated marked surface.

Each triangle carries a lattice of black points with white points in the
upward cells; zigzag paths turn right at white and left at black points and
cut the triangle into cells, one marked corner per cell. Cells glue along
shared simple segments and across shared edges into the cover Σ.
"""

import logging
import math
from dataclasses import dataclass, field

from surfalg.algebra import AlgebraElement, ReductionSystem, Tensor2
from surfalg.surface import (
    HEAD,
    TAIL,
    Edge,
    EdgeEnd,
    Face,
    MarkedSurface,
    SurfaceSymmetry,
    euler_characteristic,
    finish_end,
    start_end,
)

logger = logging.getLogger(__name__)

Node = tuple[str, int, int]


class CoveringError(ValueError):
    pass


@dataclass
class TriangleScaffold:
    face: str
    corners: tuple[str, str, str]
    n: int
    whites: list[Node]
    interior_blacks: list[Node]
    edge_blacks: list[Node]
    segments: list[tuple[Node, Node]]
    zigzags: list[tuple[Node, ...]]
    cell_corners: list[str]
    neighbors: dict[Node, list[Node]]
    sides: dict[Node, tuple[int, int]]

    def through(self) -> dict[tuple[Node, Node, Node], int]:
        """(previous, node, next) -> index of the zigzag taking that turn"""
        out = {}
        for index, path in enumerate(self.zigzags):
            for a, b, c in zip(path, path[1:], path[2:]):
                out[(a, b, c)] = index
        return out

    def starting_at(self, black: Node) -> int:
        return next(i for i, z in enumerate(self.zigzags) if z[0] == black)

    def ending_at(self, black: Node) -> int:
        return next(i for i, z in enumerate(self.zigzags) if z[-1] == black)


def _coords(node: Node) -> tuple[int, int]:
    kind, t, s = node
    if kind == "v":
        return (3 * (2 * t - s), 3 * s)
    points = [(t, s), (t, s - 1), (t + 1, s)]
    return (sum(2 * a - b for a, b in points), sum(b for _, b in points))


def _ccw(center: Node, around: list[Node]) -> list[Node]:
    cx, cy = _coords(center)

    def angle(node):
        x, y = _coords(node)
        return math.atan2(y - cy, x - cx) % (2 * math.pi)

    return sorted(around, key=angle)


def triangle_scaffold(face: str, corners: tuple[str, str, str], n: int) -> TriangleScaffold:
    """Points, segments, zigzags and cells of one triangle with n sheets."""
    corner_nodes = {("v", 0, 0), ("v", n + 1, 0), ("v", n + 1, n + 1)}
    sides: dict[Node, tuple[int, int]] = {}
    for k in range(1, n + 1):
        sides[("v", k, 0)] = (0, k)
        sides[("v", n + 1, k)] = (1, k)
        sides[("v", n + 1 - k, n + 1 - k)] = (2, k)

    whites = [("w", t, s) for t in range(1, n + 1) for s in range(1, t + 1)]
    interior = [("v", t, s) for t in range(2, n + 1) for s in range(1, t)]
    edge_blacks = sorted(sides, key=lambda b: sides[b])

    adjacency: dict[Node, list[Node]] = {}
    segments = []
    for w in whites:
        _, t, s = w
        for b in (("v", t, s), ("v", t, s - 1), ("v", t + 1, s)):
            if b in corner_nodes:
                raise CoveringError(f"white point {w} touches a corner")
            adjacency.setdefault(w, []).append(b)
            adjacency.setdefault(b, []).append(w)
            segments.append((w, b))
    neighbors = {node: _ccw(node, around) for node, around in adjacency.items()}

    for b in interior:
        if len(neighbors.get(b, [])) != 3:
            raise CoveringError(f"interior black point {b} has degree {len(neighbors.get(b, []))}")

    def turn(node: Node, came_from: Node) -> Node:
        ring = neighbors[node]
        i = ring.index(came_from)
        # right at white points, left at black points
        step = 1 if node[0] == "w" else -1
        return ring[(i + step) % len(ring)]

    zigzags = []
    limit = 4 * len(adjacency) + 4
    for start in edge_blacks:
        path = [start, neighbors[start][0]]
        while path[-1] not in sides:
            if len(path) > limit:
                raise CoveringError(f"zigzag from {start} does not terminate")
            path.append(turn(path[-1], path[-2]))
        zigzags.append(tuple(path))

    traversals: dict[tuple[Node, Node], int] = {}
    for path in zigzags:
        for a, b in zip(path, path[1:]):
            key = (a, b) if a[0] == "w" else (b, a)
            traversals[key] = traversals.get(key, 0) + 1
    for seg in segments:
        if traversals.get(seg, 0) != 2:
            raise CoveringError(f"segment {seg} lies on {traversals.get(seg, 0)} zigzags")

    perimeter = 3 * (n + 1)

    def position(b: Node) -> int:
        side, k = sides[b]
        return side * (n + 1) + k

    cell_corners = []
    for path in zigzags:
        start, end = position(path[0]), position(path[-1])
        found = []
        p = end
        while True:
            p = (p - 1) % perimeter
            if p == start:
                break
            if p % (n + 1) == 0:
                found.append(corners[p // (n + 1)])
        if len(found) != 1:
            raise CoveringError(f"cell of zigzag {path[0]} holds {len(found)} marked points")
        cell_corners.append(found[0])

    return TriangleScaffold(
        face=face,
        corners=corners,
        n=n,
        whites=whites,
        interior_blacks=interior,
        edge_blacks=edge_blacks,
        segments=segments,
        zigzags=zigzags,
        cell_corners=cell_corners,
        neighbors=neighbors,
        sides=sides,
    )


@dataclass
class CoveringData:
    base: MarkedSurface
    n: int
    cover: MarkedSurface
    scaffolds: dict[str, TriangleScaffold]
    fibers: dict[str, tuple[str, ...]]
    puncture_projection: dict[str, str]
    edge_projection: dict[str, str | None]
    ramification: list[tuple[str, Node]] = field(default_factory=list)

    @property
    def lifts(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {e: [] for e in self.base.edge_ids}
        for cover_edge, base_edge in self.edge_projection.items():
            if base_edge is not None:
                out[base_edge].append(cover_edge)
        return {e: tuple(v) for e, v in out.items()}

    def riemann_hurwitz(self) -> tuple[int, int]:
        """(χ(Σ), n·χ(S) − ramification)"""
        return (
            euler_characteristic(self.cover),
            self.n * euler_characteristic(self.base) - len(self.ramification),
        )


# -- helpers -----------------------------------------------------------------


def _triangle_corners(s: MarkedSurface, f: Face) -> tuple[str, str, str]:
    steps = f.traversal
    return tuple(s.edge(e).start(sign) for e, sign in steps)


def _check_base(s: MarkedSurface, n: int):
    if n < 2:
        raise CoveringError(f"sheet count must be at least 2, got {n}")
    for f in s.faces:
        if len(f) != 3:
            raise CoveringError(f"face {f.id} is not a triangle")
    for p in s.punctures:
        if not any(not s.is_internal(end.edge) for end in s.fan(p)):
            raise CoveringError(f"puncture {p} is internal")


def fans_from_faces(
    punctures: list[str], edges: dict[str, Edge], faces: list[Face]
) -> tuple[tuple[str, tuple[EdgeEnd, ...]], ...]:
    """Fan orders from face corners: a departing end directly precedes the arriving end."""
    successor: dict[EdgeEnd, EdgeEnd] = {}
    ends_at: dict[str, list[EdgeEnd]] = {p: [] for p in punctures}
    for e in edges.values():
        ends_at[e.tail].append(EdgeEnd(e.id, TAIL))
        ends_at[e.head].append(EdgeEnd(e.id, HEAD))
    for f in faces:
        steps = f.traversal
        for i, (edge, sign) in enumerate(steps):
            arriving = finish_end(steps[i - 1][0], steps[i - 1][1])
            departing = start_end(edge, sign)
            if departing in successor and successor[departing] != arriving:
                logger.warning(f"[Cover] conflicting corners at {departing}")
                continue
            successor[departing] = arriving

    fans = []
    for p in punctures:
        ends = ends_at[p]
        preceded = {successor[e] for e in ends if e in successor}
        heads = [e for e in ends if e not in preceded] or sorted(ends, key=str)[:1]
        order: list[EdgeEnd] = []
        for head in heads:
            cur = head
            while cur is not None and cur not in order:
                order.append(cur)
                cur = successor.get(cur)
        order.extend(e for e in sorted(ends, key=str) if e not in order)
        fans.append((p, tuple(order)))
    return tuple(fans)


def _edge_name(i: str, j: str, long_ids: bool) -> str:
    return f"a{i}_{j}" if long_ids else f"a{i}{j}"


def lift_name(p: str, sheet: int) -> str:
    return f"{p}_{sheet}"


# -- construction ------------------------------------------------------------


def _double_cover(base: MarkedSurface, scaffolds) -> CoveringData:
    seen: dict[frozenset, str] = {}
    for e in base.edges:
        if e.is_loop:
            raise CoveringError(f"double cover needs a simple triangulation; {e.id} is a loop")
        key = frozenset((e.tail, e.head))
        if key in seen:
            raise CoveringError(f"double cover needs a simple triangulation; {seen[key]} and {e.id} are parallel")
        seen[key] = e.id

    long_ids = any(len(p) > 1 for p in base.punctures)
    edges: dict[str, Edge] = {}
    edge_projection: dict[str, str | None] = {}
    for e in base.edges:
        for i, j in ((e.tail, e.head), (e.head, e.tail)):
            name = _edge_name(i, j, long_ids)
            # a_ij runs from the first lift of j to the second lift of i
            edges[name] = Edge(name, lift_name(j, 1), lift_name(i, 2))
            edge_projection[name] = e.id

    def a(i, j):
        return _edge_name(i, j, long_ids)

    faces = []
    for f in base.faces:
        i, j, k = _triangle_corners(base, f)
        traversal = [
            (a(j, i), 1),
            (a(j, k), -1),
            (a(i, k), 1),
            (a(i, j), -1),
            (a(k, j), 1),
            (a(k, i), -1),
        ]
        faces.append(Face(f.id, tuple(reversed(traversal))))

    punctures = [lift_name(p, sheet) for p in base.punctures for sheet in (1, 2)]
    cover = MarkedSurface(
        name=f"{base.name}-cover2",
        punctures=tuple(punctures),
        edges=tuple(edges.values()),
        faces=tuple(faces),
        fans=fans_from_faces(punctures, edges, faces),
    )
    return CoveringData(
        base=base,
        n=2,
        cover=cover,
        scaffolds=scaffolds,
        fibers={p: (lift_name(p, 1), lift_name(p, 2)) for p in base.punctures},
        puncture_projection={lift_name(p, k): p for p in base.punctures for k in (1, 2)},
        edge_projection=edge_projection,
    )


def _segment_cover(base: MarkedSurface, n: int, scaffolds: dict[str, TriangleScaffold]) -> CoveringData:
    order = [f.id for f in base.faces]
    parent: dict[tuple[str, int], tuple[str, int]] = {}

    def find(c):
        while parent.get(c, c) != c:
            c = parent[c]
        return c

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb, key=lambda x: (order.index(x[0]), x[1]))] = min(
                ra, rb, key=lambda x: (order.index(x[0]), x[1])
            )

    # edge blacks keyed by (base edge, index from its tail)
    on_edge: dict[tuple[str, int], list[tuple[str, Node]]] = {}
    for f in base.faces:
        sc = scaffolds[f.id]
        for b in sc.edge_blacks:
            side, k = sc.sides[b]
            edge, sign = f.traversal[side]
            key = (edge, k if sign > 0 else n + 1 - k)
            on_edge.setdefault(key, []).append((f.id, b))

    for key, hits in on_edge.items():
        if len(hits) == 2:
            (t1, b1), (t2, b2) = hits
            s1, s2 = scaffolds[t1], scaffolds[t2]
            union((t1, s1.ending_at(b1)), (t2, s2.starting_at(b2)))
            union((t1, s1.starting_at(b1)), (t2, s2.ending_at(b2)))

    cells = [(f.id, z) for f in base.faces for z in range(len(scaffolds[f.id].zigzags))]
    corner_of: dict[tuple[str, int], str] = {}
    lifts: dict[tuple[str, int], str] = {}
    fibers: dict[str, list[str]] = {p: [] for p in base.punctures}
    for cell in cells:
        root = find(cell)
        corner = scaffolds[cell[0]].cell_corners[cell[1]]
        if corner_of.setdefault(root, corner) != corner:
            raise CoveringError(f"glued cells disagree on their marked point at {cell}")
        if root not in lifts:
            fibers[corner].append(lift_name(corner, len(fibers[corner]) + 1))
            lifts[root] = fibers[corner][-1]
    for p, fiber in fibers.items():
        if len(fiber) != n:
            raise CoveringError(f"puncture {p} has {len(fiber)} preimages, expected {n}")

    def lift(tri: str, zig: int) -> str:
        return lifts[find((tri, zig))]

    edges: dict[str, Edge] = {}
    edge_projection: dict[str, str | None] = {}
    crossing: dict[tuple[str, tuple[Node, Node]], tuple[str, int]] = {}
    shared: dict[tuple[str, int], tuple[str, int]] = {}
    for f in base.faces:
        sc = scaffolds[f.id]
        turns = sc.through()
        for w, b in sc.segments:
            key = None
            if b in sc.sides:
                side, k = sc.sides[b]
                edge, sign = f.traversal[side]
                key = (edge, k if sign > 0 else n + 1 - k)
                if key in shared:
                    crossing[(f.id, (w, b))] = (shared[key][0], -1)
                    continue
            first = next(z for (x, y, _), z in turns.items() if (x, y) == (w, b)) if b not in sc.sides else sc.ending_at(b)
            second = next(z for (x, y, _), z in turns.items() if (x, y) == (b, w)) if b not in sc.sides else sc.starting_at(b)
            name = f"g{len(edges) + 1}"
            edges[name] = Edge(name, lift(f.id, first), lift(f.id, second))
            edge_projection[name] = key[0] if key else None
            crossing[(f.id, (w, b))] = (name, 1)
            if key is not None:
                shared[key] = (name, 1)

    faces = []
    for f in base.faces:
        sc = scaffolds[f.id]
        for w in sc.whites:
            ring = sc.neighbors[w]
            traversal = []
            for u in ring:
                name, sign = crossing[(f.id, (w, u))]
                traversal.append((name, sign))
            faces.append(Face(f"{f.id}_w{w[1]}_{w[2]}", tuple(reversed(traversal))))
        for b in sc.interior_blacks:
            ring = sc.neighbors[b]
            traversal = []
            for u in reversed(ring):
                name, sign = crossing[(f.id, (u, b))]
                traversal.append((name, -sign))
            faces.append(Face(f"{f.id}_b{b[1]}_{b[2]}", tuple(reversed(traversal))))

    punctures = [q for p in base.punctures for q in fibers[p]]
    cover = MarkedSurface(
        name=f"{base.name}-cover{n}",
        punctures=tuple(punctures),
        edges=tuple(edges.values()),
        faces=tuple(faces),
        fans=fans_from_faces(punctures, edges, faces),
    )
    return CoveringData(
        base=base,
        n=n,
        cover=cover,
        scaffolds=scaffolds,
        fibers={p: tuple(v) for p, v in fibers.items()},
        puncture_projection={q: p for p, v in fibers.items() for q in v},
        edge_projection=edge_projection,
    )


def build_covering(s: MarkedSurface, n: int) -> CoveringData:
    """Build the n-sheeted cover; hexagons for n = 2, segment generators otherwise."""
    _check_base(s, n)
    scaffolds = {f.id: triangle_scaffold(f.id, _triangle_corners(s, f), n) for f in s.faces}
    if n == 2:
        data = _double_cover(s, scaffolds)
    else:
        data = _segment_cover(s, n, scaffolds)
    data.ramification = [(f.id, b) for f in s.faces for b in scaffolds[f.id].interior_blacks]
    chi, expected = data.riemann_hurwitz()
    if chi != expected:
        raise CoveringError(f"Riemann-Hurwitz fails: χ(Σ) = {chi}, expected {expected}")
    logger.info(
        f"[Cover] {s.name} n={n}: {len(data.cover.punctures)} punctures, "
        f"{len(data.cover.edges)} edges, {len(data.cover.faces)} faces"
    )
    return data


# -- deck involution and θ± --------------------------------------------------


def deck_involution(c: CoveringData) -> SurfaceSymmetry:
    """Sheet swap of the double cover; a_ji goes to the reversal of a_ij."""
    if c.n != 2:
        raise CoveringError(f"deck involution needs n = 2, got {c.n}")
    long_ids = any(len(p) > 1 for p in c.base.punctures)
    punctures = {}
    for p, (first, second) in c.fibers.items():
        punctures[first] = second
        punctures[second] = first
    edges = {}
    for e in c.base.edges:
        for i, j in ((e.tail, e.head), (e.head, e.tail)):
            edges[_edge_name(j, i, long_ids)] = (_edge_name(i, j, long_ids), -1)
    return SurfaceSymmetry(
        source=c.cover,
        target=c.cover,
        punctures=punctures,
        edges=edges,
        faces={f.id: f.id for f in c.cover.faces},
    )


def _theta_word(theta: SurfaceSymmetry, sign: int, delta: int, w):
    """θ±(w) as (coefficient, letters): anti-multiplicative, ±(θ∘g)⁻¹ on generators"""
    coeff = 1
    letters = []
    for edge, exp in reversed(w):
        image = theta.edges.get(edge)
        if image is None:
            raise CoveringError(f"letter {edge} is not a cover generator")
        target, orientation = image
        coeff *= sign
        if orientation < 0:
            coeff *= delta
        letters.append((target, exp * orientation * -1))
    return coeff, tuple(letters)


def theta_pm(c: CoveringData, sign: int, x, theta: SurfaceSymmetry | None = None):
    """Apply θ⁺ (sign = 1) or θ⁻ (sign = −1) to an element or a 2-tensor over Σ."""
    if c.n != 2:
        raise CoveringError(f"θ± needs n = 2, got {c.n}")
    theta = theta or deck_involution(c)
    system: ReductionSystem = x.system
    delta = system.delta
    if isinstance(x, AlgebraElement):
        raw = []
        for w, coeff in x.terms.items():
            k, letters = _theta_word(theta, sign, delta, w)
            raw.append((k * coeff, letters))
        return AlgebraElement.from_raw(system, raw)
    if isinstance(x, Tensor2):
        result = Tensor2(system)
        for (w1, w2), coeff in x.terms.items():
            k1, l1 = _theta_word(theta, sign, delta, w1)
            k2, l2 = _theta_word(theta, sign, delta, w2)
            first = AlgebraElement.from_word(system, l2, k2)
            second = AlgebraElement.from_word(system, l1, k1)
            result = result + Tensor2.pure(first, second).scale(coeff)
        return result
    raise CoveringError(f"θ± is defined on elements and 2-tensors, not {type(x).__name__}")


@dataclass
class ThetaLawReport:
    """Which argument order of the θ± equivariance law holds on all generator pairs"""

    pairs: int
    direct: dict[int, bool]
    swapped: dict[int, bool]

    def law(self, sign: int) -> str:
        d, s = self.direct[sign], self.swapped[sign]
        if d and s:
            return "both"
        if d:
            return "direct"
        if s:
            return "swapped"
        return "neither"


def disambiguate_theta_law(c: CoveringData, bracket) -> ThetaLawReport:
    """
    Test ⟨⟨θx,θy⟩⟩ = θ⟨⟨x,y⟩⟩ against ⟨⟨θx,θy⟩⟩ = θ⟨⟨y,x⟩⟩ for θ⁺ and θ⁻
    on every ordered pair of generators of Σ.
    """
    theta = deck_involution(c)
    system = bracket.system
    generators = [AlgebraElement.generator(system, e) for e in c.cover.edge_ids]
    direct = {1: True, -1: True}
    swapped = {1: True, -1: True}
    pairs = 0
    for x in generators:
        for y in generators:
            pairs += 1
            for sign in (1, -1):
                tx = theta_pm(c, sign, x, theta)
                ty = theta_pm(c, sign, y, theta)
                lhs = bracket.double_bracket(tx, ty)
                if direct[sign] and lhs != theta_pm(c, sign, bracket.double_bracket(x, y), theta):
                    direct[sign] = False
                if swapped[sign] and lhs != theta_pm(c, sign, bracket.double_bracket(y, x), theta):
                    swapped[sign] = False
    report = ThetaLawReport(pairs=pairs, direct=direct, swapped=swapped)
    logger.info(f"[Cover] θ law on {pairs} pairs: θ+ {report.law(1)}, θ- {report.law(-1)}")
    return report


def serialize_sidecar(c: CoveringData) -> str:
    lines = [f"# cover of {c.base.name}, n = {c.n}"]
    for base_edge, cover_edges in c.lifts.items():
        lines.append(f"lift {base_edge} -> {' '.join(cover_edges)}")
    for p, fiber in c.fibers.items():
        lines.append(f"fiber {p} -> {' '.join(fiber)}")
    lines.append(f"ram {len(c.ramification)}")
    return "\n".join(lines) + "\n"


def scaffold_counts(c: CoveringData) -> dict[str, tuple[int, int, int, int]]:
    """Per triangle: (white, interior black, edge black, zigzags)"""
    return {
        face: (len(sc.whites), len(sc.interior_blacks), len(sc.edge_blacks), len(sc.zigzags))
        for face, sc in c.scaffolds.items()
    }


__all__ = [
    "CoveringError",
    "TriangleScaffold",
    "CoveringData",
    "ThetaLawReport",
    "triangle_scaffold",
    "fans_from_faces",
    "lift_name",
    "build_covering",
    "deck_involution",
    "theta_pm",
    "disambiguate_theta_law",
    "serialize_sidecar",
    "scaffold_counts",
]
