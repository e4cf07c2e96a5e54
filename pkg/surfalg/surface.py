"""
Combinatorial marked surfaces: parsing, validation, flips and symmetries.
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

logger = logging.getLogger(__name__)

TAIL = "t"
HEAD = "h"

_IDENT = re.compile(r"^[A-Za-z0-9_']+$")


class SurfaceError(ValueError):
    """Malformed surface data, optionally tied to a line of the input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str

    def start(self, sign: int) -> str:
        """Puncture where the edge begins when traversed with the given sign"""
        return self.tail if sign > 0 else self.head

    def end(self, sign: int) -> str:
        return self.head if sign > 0 else self.tail

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass(frozen=True)
class EdgeEnd:
    edge: str
    kind: str

    def flipped(self) -> "EdgeEnd":
        return EdgeEnd(self.edge, HEAD if self.kind == TAIL else TAIL)

    def __str__(self):
        return f"{self.edge}.{self.kind}"


def start_end(edge: str, sign: int) -> EdgeEnd:
    """Edge end at which a signed traversal departs"""
    return EdgeEnd(edge, TAIL if sign > 0 else HEAD)


def finish_end(edge: str, sign: int) -> EdgeEnd:
    """Edge end at which a signed traversal arrives"""
    return EdgeEnd(edge, HEAD if sign > 0 else TAIL)


@dataclass(frozen=True)
class Face:
    """A face; `word` is in composition order, the rightmost entry traversed first."""

    id: str
    word: tuple[tuple[str, int], ...]

    @property
    def traversal(self) -> tuple[tuple[str, int], ...]:
        return tuple(reversed(self.word))

    def __len__(self):
        return len(self.word)


@dataclass(frozen=True)
class MarkedSurface:
    name: str
    punctures: tuple[str, ...]
    edges: tuple[Edge, ...]
    faces: tuple[Face, ...]
    fans: tuple[tuple[str, tuple[EdgeEnd, ...]], ...]

    @cached_property
    def _edge_index(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def _fan_index(self) -> dict[str, tuple[EdgeEnd, ...]]:
        return dict(self.fans)

    @cached_property
    def _positions(self) -> dict[EdgeEnd, tuple[str, int]]:
        positions = {}
        for puncture, ends in self.fans:
            for index, end in enumerate(ends):
                positions[end] = (puncture, index)
        return positions

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edge_index[edge_id]
        except KeyError:
            raise SurfaceError(f"undeclared edge '{edge_id}'") from None

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edge_index

    def face(self, face_id: str) -> Face:
        for f in self.faces:
            if f.id == face_id:
                return f
        raise SurfaceError(f"undeclared face '{face_id}'")

    def fan(self, puncture: str) -> tuple[EdgeEnd, ...]:
        return self._fan_index.get(puncture, ())

    def position(self, end: EdgeEnd) -> tuple[str, int] | None:
        """(puncture, index along the decoration curve) of an edge end"""
        return self._positions.get(end)

    def puncture_of(self, end: EdgeEnd) -> str:
        e = self.edge(end.edge)
        return e.tail if end.kind == TAIL else e.head

    def faces_with_edge(self, edge_id: str) -> list[Face]:
        return [f for f in self.faces if any(e == edge_id for e, _ in f.word)]

    def is_internal(self, edge_id: str) -> bool:
        return sum(1 for f in self.faces for e, _ in f.word if e == edge_id) == 2


@dataclass
class ValidationReport:
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def has(self, tag: str) -> bool:
        return any(tag in line for line in self.failures + self.warnings)

    def lines(self) -> list[str]:
        if self.passed and not self.warnings:
            return ["pass"]
        out = ["pass" if self.passed else "fail"]
        out.extend(f"failure: {line}" for line in self.failures)
        out.extend(f"warning: {line}" for line in self.warnings)
        return out


@dataclass(frozen=True)
class SurfaceSymmetry:
    """Relabeling of a marked surface; edges map to signed edges of the target."""

    source: MarkedSurface
    target: MarkedSurface
    punctures: dict[str, str]
    edges: dict[str, tuple[str, int]]
    faces: dict[str, str]

    def map_end(self, end: EdgeEnd) -> EdgeEnd:
        image, sign = self.edges[end.edge]
        mapped = EdgeEnd(image, end.kind)
        return mapped if sign > 0 else mapped.flipped()

    def map_signed(self, edge_id: str, sign: int) -> tuple[str, int]:
        image, s = self.edges[edge_id]
        return image, sign * s


# -- parsing -----------------------------------------------------------------


def _parse_signed(token: str, line: int) -> tuple[str, int]:
    if len(token) < 2 or token[0] not in "+-":
        raise SurfaceError(f"signed edge expected, got '{token}'", line)
    return token[1:], 1 if token[0] == "+" else -1


def _parse_end(token: str, line: int) -> EdgeEnd:
    edge, dot, kind = token.rpartition(".")
    if not dot or kind not in (TAIL, HEAD) or not edge:
        raise SurfaceError(f"edge end expected, got '{token}'", line)
    return EdgeEnd(edge, kind)


def _check_ident(token: str, line: int) -> str:
    if not _IDENT.match(token):
        raise SurfaceError(f"invalid identifier '{token}'", line)
    return token


def parse_surface(text: str) -> MarkedSurface:
    """Parse the line-oriented surface format; checks referential integrity only."""
    name = None
    punctures: list[str] = []
    edges: list[tuple[Edge, int]] = []
    faces: list[tuple[Face, int]] = []
    fans: dict[str, tuple[tuple[EdgeEnd, ...], int]] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()

        if keyword == "surface":
            if name is not None:
                raise SurfaceError("duplicate surface declaration", number)
            if not rest or len(rest.split()) != 1:
                raise SurfaceError("surface needs exactly one name", number)
            name = rest
        elif keyword == "puncture":
            ids = rest.split()
            if not ids:
                raise SurfaceError("puncture line without ids", number)
            for pid in ids:
                if pid in punctures:
                    raise SurfaceError(f"duplicate puncture '{pid}'", number)
                punctures.append(_check_ident(pid, number))
        elif keyword == "edge":
            parts = rest.split()
            if len(parts) != 3:
                raise SurfaceError("edge needs <id> <tail> <head>", number)
            eid = _check_ident(parts[0], number)
            if any(e.id == eid for e, _ in edges):
                raise SurfaceError(f"duplicate edge '{eid}'", number)
            edges.append((Edge(eid, parts[1], parts[2]), number))
        elif keyword == "face":
            parts = rest.split()
            if len(parts) < 2:
                raise SurfaceError("face needs an id and at least one edge", number)
            fid = _check_ident(parts[0], number)
            if any(f.id == fid for f, _ in faces):
                raise SurfaceError(f"duplicate face '{fid}'", number)
            word = tuple(_parse_signed(tok, number) for tok in parts[1:])
            faces.append((Face(fid, word), number))
        elif keyword == "fan":
            head, colon, tail = rest.partition(":")
            puncture = head.strip()
            if not colon or not puncture:
                raise SurfaceError("fan needs '<puncture>: <ends>'", number)
            if puncture in fans:
                raise SurfaceError(f"duplicate fan for '{puncture}'", number)
            ends = tuple(_parse_end(tok, number) for tok in tail.split())
            fans[puncture] = (ends, number)
        else:
            raise SurfaceError(f"unknown keyword '{keyword}'", number)

    if name is None:
        raise SurfaceError("missing surface declaration")

    known = set(punctures)
    edge_ids = {e.id for e, _ in edges}
    for e, number in edges:
        for p in (e.tail, e.head):
            if p not in known:
                raise SurfaceError(f"undeclared puncture '{p}'", number)
    for f, number in faces:
        for eid, _ in f.word:
            if eid not in edge_ids:
                raise SurfaceError(f"undeclared edge '{eid}'", number)
    for puncture, (ends, number) in fans.items():
        if puncture not in known:
            raise SurfaceError(f"undeclared puncture '{puncture}'", number)
        for end in ends:
            if end.edge not in edge_ids:
                raise SurfaceError(f"undeclared edge '{end.edge}'", number)

    return MarkedSurface(
        name=name,
        punctures=tuple(punctures),
        edges=tuple(e for e, _ in edges),
        faces=tuple(f for f, _ in faces),
        fans=tuple((p, fans[p][0]) for p in punctures if p in fans),
    )


def serialize_surface(s: MarkedSurface) -> str:
    lines = [f"surface {s.name}", "puncture " + " ".join(s.punctures)]
    lines.extend(f"edge {e.id} {e.tail} {e.head}" for e in s.edges)
    for f in s.faces:
        word = " ".join(f"{'+' if sign > 0 else '-'}{eid}" for eid, sign in f.word)
        lines.append(f"face {f.id} {word}")
    for puncture, ends in s.fans:
        body = " ".join(str(end) for end in ends)
        lines.append(f"fan {puncture}:" + (f" {body}" if body else ""))
    return "\n".join(lines) + "\n"


# -- validation --------------------------------------------------------------


def euler_characteristic(s: MarkedSurface) -> int:
    return len(s.punctures) - len(s.edges) + len(s.faces)


def face_corners(s: MarkedSurface, f: Face):
    """Yield (puncture, arriving end, departing end) for every corner of a face."""
    steps = f.traversal
    for i, (eid, sign) in enumerate(steps):
        nxt_id, nxt_sign = steps[(i + 1) % len(steps)]
        yield (
            s.edge(eid).end(sign),
            finish_end(eid, sign),
            start_end(nxt_id, nxt_sign),
        )


def validate(s: MarkedSurface) -> ValidationReport:
    report = ValidationReport()

    # fan coverage
    seen: Counter[EdgeEnd] = Counter()
    for puncture, ends in s.fans:
        for end in ends:
            seen[end] += 1
            if s.has_edge(end.edge) and s.puncture_of(end) != puncture:
                report.failures.append(f"fan coverage: {end} listed at {puncture}")
    for e in s.edges:
        for kind in (TAIL, HEAD):
            end = EdgeEnd(e.id, kind)
            if seen[end] == 0:
                report.failures.append(f"fan coverage: {end} missing")
            elif seen[end] > 1:
                report.failures.append(f"fan coverage: {end} repeated")

    # edge multiplicity
    occurrences = Counter(eid for f in s.faces for eid, _ in f.word)
    for e in s.edges:
        if occurrences[e.id] not in (1, 2):
            report.failures.append(
                f"edge multiplicity: {e.id} occurs {occurrences[e.id]} times"
            )

    # face composability
    composable = True
    for f in s.faces:
        steps = f.traversal
        for i, (eid, sign) in enumerate(steps):
            nxt_id, nxt_sign = steps[(i + 1) % len(steps)]
            if s.edge(eid).end(sign) != s.edge(nxt_id).start(nxt_sign):
                report.failures.append(
                    f"face composability: {f.id} breaks between {eid} and {nxt_id}"
                )
                composable = False
                break

    chi = euler_characteristic(s)
    if chi > 1:
        report.failures.append(f"euler characteristic: {chi} > 1")
    elif chi == 1 and len(s.punctures) <= 2:
        report.failures.append(
            f"degenerate disk: {len(s.punctures)} boundary punctures"
        )

    pairs = Counter(frozenset((e.tail, e.head)) for e in s.edges if not e.is_loop)
    for pair, count in sorted(pairs.items(), key=lambda kv: sorted(kv[0])):
        if count > 1:
            report.warnings.append(
                "fan-order-sensitive: "
                f"{count} edges between {' and '.join(sorted(pair))}"
            )

    if composable and report.passed:
        orientations = set()
        for f in s.faces:
            for puncture, arriving, departing in face_corners(s, f):
                pa, pd = s.position(arriving), s.position(departing)
                if pa is None or pd is None:
                    continue
                if abs(pa[1] - pd[1]) != 1:
                    report.warnings.append(
                        f"fan corner: {arriving} and {departing} not adjacent at {puncture}"
                    )
                orientations.add(pd[1] < pa[1])
        if len(orientations) > 1:
            report.warnings.append("fan corner: mixed corner orientations")

    return report


# -- flips -------------------------------------------------------------------


def _rotate_to(steps: tuple[tuple[str, int], ...], edge_id: str):
    for i, (eid, _) in enumerate(steps):
        if eid == edge_id:
            return steps[i:] + steps[:i]
    raise SurfaceError(f"edge '{edge_id}' not on face")


def _insert_between(fan: tuple[EdgeEnd, ...], a: EdgeEnd, b: EdgeEnd, new: EdgeEnd):
    i, j = fan.index(a), fan.index(b)
    if abs(i - j) != 1:
        raise SurfaceError(f"fan corner not adjacent: {a} and {b}")
    k = max(i, j)
    return fan[:k] + (new,) + fan[k:]


def flip_triangulation(
    s: MarkedSurface, diag: str, new_id: str | None = None
) -> MarkedSurface:
    """Replace an internal diagonal by the other diagonal of its quadrilateral."""
    d = s.edge(diag)
    owners = s.faces_with_edge(diag)
    if not s.is_internal(diag):
        raise SurfaceError(f"edge '{diag}' is external")
    if len(owners) != 2:
        raise SurfaceError(f"edge '{diag}' bounds a single face twice")
    if any(len(f) != 3 for f in owners):
        raise SurfaceError(f"faces adjacent to '{diag}' are not triangles")

    first, second = owners
    f1 = _rotate_to(first.traversal, diag)
    f2 = _rotate_to(second.traversal, diag)
    (_, sign1), side_s, side_s2 = f1
    _, side_t, side_t2 = f2

    u = d.start(sign1)
    v = d.end(sign1)
    w = s.edge(side_s[0]).end(side_s[1])
    z = s.edge(side_t[0]).end(side_t[1])

    if len({u, v, w, z}) != 4:
        raise SurfaceError(f"quadrilateral around '{diag}' is degenerate")
    if {side_s[0], side_s2[0]} & {side_t[0], side_t2[0]}:
        raise SurfaceError(f"quadrilateral around '{diag}' is degenerate")

    if new_id is None:
        new_id = diag[:-1] if diag.endswith("'") else diag + "'"
    if s.has_edge(new_id):
        raise SurfaceError(f"edge '{new_id}' already exists")

    # new diagonal runs z -> w
    face1 = Face(first.id, ((new_id, 1), side_t, side_s2))
    face2 = Face(second.id, ((new_id, -1), side_s, side_t2))

    fans = {}
    for puncture, ends in s.fans:
        fans[puncture] = tuple(end for end in ends if end.edge != diag)
    fans[w] = _insert_between(
        fans[w],
        finish_end(*side_s),
        start_end(*side_s2),
        EdgeEnd(new_id, HEAD),
    )
    fans[z] = _insert_between(
        fans[z],
        finish_end(*side_t),
        start_end(*side_t2),
        EdgeEnd(new_id, TAIL),
    )

    edges = tuple(Edge(new_id, z, w) if e.id == diag else e for e in s.edges)
    faces = tuple(
        face1 if f.id == first.id else face2 if f.id == second.id else f
        for f in s.faces
    )
    logger.debug(f"[Flip] {s.name}: {diag} ({u}-{v}) -> {new_id} ({z}-{w})")
    return MarkedSurface(
        name=s.name,
        punctures=s.punctures,
        edges=edges,
        faces=faces,
        fans=tuple((p, fans[p]) for p, _ in s.fans),
    )


# -- symmetries --------------------------------------------------------------


def identity_symmetry(s: MarkedSurface) -> SurfaceSymmetry:
    return SurfaceSymmetry(
        source=s,
        target=s,
        punctures={p: p for p in s.punctures},
        edges={e.id: (e.id, 1) for e in s.edges},
        faces={f.id: f.id for f in s.faces},
    )


def _same_cycle(a: tuple, b: tuple) -> bool:
    if len(a) != len(b):
        return False
    return any(a[i:] + a[:i] == b for i in range(len(a))) or not a


def check_symmetry(f: SurfaceSymmetry) -> list[str]:
    """Return the list of violated symmetry conditions (empty when valid)."""
    src, tgt = f.source, f.target
    problems = []
    for e in src.edges:
        image, sign = f.edges[e.id]
        target_edge = tgt.edge(image)
        tail, head = (
            (target_edge.tail, target_edge.head)
            if sign > 0
            else (target_edge.head, target_edge.tail)
        )
        if (f.punctures[e.tail], f.punctures[e.head]) != (tail, head):
            problems.append(f"incidence: {e.id}")
    for face in src.faces:
        image = tuple(f.map_signed(eid, sign) for eid, sign in face.word)
        if not _same_cycle(image, tgt.face(f.faces[face.id]).word):
            problems.append(f"face: {face.id}")
    for puncture, ends in src.fans:
        mapped = tuple(f.map_end(end) for end in ends)
        if mapped != tgt.fan(f.punctures[puncture]):
            problems.append(f"fan: {puncture}")
    return problems


def compose_symmetries(g: SurfaceSymmetry, f: SurfaceSymmetry) -> SurfaceSymmetry:
    """g after f"""
    return SurfaceSymmetry(
        source=f.source,
        target=g.target,
        punctures={p: g.punctures[q] for p, q in f.punctures.items()},
        edges={e: g.map_signed(*image) for e, image in f.edges.items()},
        faces={x: g.faces[y] for x, y in f.faces.items()},
    )


def symmetry_from_flip_pair(
    original: MarkedSurface, other: MarkedSurface
) -> SurfaceSymmetry:
    """Identity-on-punctures isomorphism matching edges by id and orientation."""
    edges = {}
    for e in original.edges:
        image = other.edge(e.id)
        if (image.tail, image.head) == (e.tail, e.head):
            edges[e.id] = (e.id, 1)
        elif (image.head, image.tail) == (e.tail, e.head):
            edges[e.id] = (e.id, -1)
        else:
            raise SurfaceError(f"edge '{e.id}' changed endpoints")

    faces = {}
    for face in original.faces:
        image = tuple((eid, sign * edges[eid][1]) for eid, sign in face.word)
        match = [g.id for g in other.faces if _same_cycle(image, g.word)]
        if not match:
            raise SurfaceError(f"no face matches '{face.id}'")
        faces[face.id] = match[0]

    return SurfaceSymmetry(
        source=original,
        target=other,
        punctures={p: p for p in original.punctures},
        edges=edges,
        faces=faces,
    )


def apply_symmetry(f: SurfaceSymmetry, x, system=None):
    """Push an algebra element over f.source forward to f.target."""
    from surfalg.algebra import AlgebraMismatchError, apply_letter_map, build_reduction

    if x.system.surface is not f.source and x.system.surface != f.source:
        raise AlgebraMismatchError("element is not over the symmetry's source")
    if system is None:
        system = build_reduction(f.target, x.system.twisted)
    return apply_letter_map(x, f.edges, system)


__all__ = [
    "TAIL",
    "HEAD",
    "SurfaceError",
    "Edge",
    "EdgeEnd",
    "Face",
    "MarkedSurface",
    "SurfaceSymmetry",
    "ValidationReport",
    "start_end",
    "finish_end",
    "parse_surface",
    "serialize_surface",
    "validate",
    "euler_characteristic",
    "face_corners",
    "flip_triangulation",
    "identity_symmetry",
    "check_symmetry",
    "compose_symmetries",
    "symmetry_from_flip_pair",
    "apply_symmetry",
]
