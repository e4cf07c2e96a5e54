"""
The double bracket on the surface algebra.

Brackets are assembled on raw letter sequences (edges of the polygon
decomposition, eliminated ones included) from the local intersection table
at the decoration curves, then normal-formed. Also here: uniderivations,
the two triple brackets, the cyclic Lie bracket and the verification reports
built on them.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from surfalg.algebra import (
    AlgebraElement,
    AlgebraMismatchError,
    CyclicElement,
    Letter,
    ReductionSystem,
    Tensor2,
    Tensor3,
    Word,
    abelianize,
    concat,
    format_word,
    mu,
    tau,
)
from surfalg.config import CONFIG
from surfalg.surface import HEAD, TAIL, EdgeEnd
from surfalg.task_manager import task_manager

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)

Raw = dict[tuple[Word, Word], Fraction]


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class EndIncidence:
    """An edge end sitting on the decoration curve of a puncture."""

    edge: str
    kind: str
    puncture: str
    position: int


@dataclass(frozen=True)
class LocalCase:
    """
    One row of the local table. `shape` places α₁ (first argument) and α₂
    (second argument) into the two slots, `|` separating them:

        "21|"  α₂α₁ ⊗ 1
        "2|1"  α₂ ⊗ α₁
        "1|2"  α₁ ⊗ α₂
        "|12"  1 ⊗ α₁α₂
    """

    kind1: str
    kind2: str
    first_left: bool
    coefficient: Fraction
    shape: str

    def words(self, alpha1: str, alpha2: str) -> tuple[Word, Word]:
        letters = {"1": (alpha1, 1), "2": (alpha2, 1)}
        left, right = self.shape.split("|")
        return (
            tuple(letters[ch] for ch in left),
            tuple(letters[ch] for ch in right),
        )


# first_left: the end of α₁ precedes the end of α₂ along the decoration curve
LOCAL_TABLE: dict[tuple[str, str, bool], LocalCase] = {
    (HEAD, TAIL, True): LocalCase(HEAD, TAIL, True, -HALF, "21|"),
    (TAIL, TAIL, True): LocalCase(TAIL, TAIL, True, HALF, "2|1"),
    (HEAD, HEAD, True): LocalCase(HEAD, HEAD, True, HALF, "1|2"),
    (TAIL, HEAD, True): LocalCase(TAIL, HEAD, True, -HALF, "|12"),
    (HEAD, TAIL, False): LocalCase(HEAD, TAIL, False, HALF, "21|"),
    (TAIL, TAIL, False): LocalCase(TAIL, TAIL, False, -HALF, "2|1"),
    (HEAD, HEAD, False): LocalCase(HEAD, HEAD, False, -HALF, "1|2"),
    (TAIL, HEAD, False): LocalCase(TAIL, HEAD, False, HALF, "|12"),
}


def _acc(target: dict, key, coeff: Fraction):
    value = target.get(key, 0) + coeff
    if value:
        target[key] = value
    else:
        target.pop(key, None)


def _raw_add(target: Raw, raw: Raw, k: Fraction | int = 1):
    for key, c in raw.items():
        _acc(target, key, k * c)


def _sandwich(left: tuple[Word, Word], raw: Raw, right: tuple[Word, Word]) -> Raw:
    """(l₁⊗l₂)·raw·(r₁⊗r₂) with slot-wise products"""
    out: Raw = {}
    for (a, b), c in raw.items():
        key = (
            concat(concat(left[0], a), right[0]),
            concat(concat(left[1], b), right[1]),
        )
        _acc(out, key, c)
    return out


class DoubleBracket:
    """
    Double bracket bound to one reduction system.

    `formal` maps fresh letters Y to the elements B they invert; such letters
    are bracketed through YB = BY = 1.
    """

    def __init__(self, system: ReductionSystem, formal: Mapping[str, AlgebraElement] | None = None):
        self.system = system
        self.surface = system.surface
        self.formal = dict(formal or {})
        self._generator_cache: dict[tuple[Letter, Letter], Raw] = {}
        self._derivation_cache: dict[tuple[str, Letter], Raw] = {}

    # -- plumbing

    def _check(self, *elements):
        for x in elements:
            if not self.system.compatible(x.system):
                raise AlgebraMismatchError("element is not over this bracket's surface")

    def normalize(self, raw: Raw) -> Tensor2:
        terms: dict[tuple[Word, Word], Fraction] = {}
        for (a, b), c in raw.items():
            ga = self.system.reduce_word(a)
            gb = self.system.reduce_word(b)
            _acc(terms, (ga.letters, gb.letters), c * ga.sign * gb.sign)
        return Tensor2(self.system, terms)

    def incidences(self, edge: str) -> list[EndIncidence]:
        out = []
        for kind in (TAIL, HEAD):
            located = self.surface.position(EdgeEnd(edge, kind))
            if located is None:
                raise BracketError(f"end {edge}.{kind} is missing from the fans")
            puncture, index = located
            out.append(EndIncidence(edge, kind, puncture, index))
        return out

    # -- local table

    def _local_raw(self, c1: EndIncidence, c2: EndIncidence) -> Raw:
        if c1.puncture != c2.puncture:
            raise BracketError(
                f"ends {c1.edge}.{c1.kind} and {c2.edge}.{c2.kind} lie on different decoration curves"
            )
        if c1.position == c2.position:
            raise BracketError(f"coincident crossing at {c1.puncture}:{c1.position}")
        case = LOCAL_TABLE[(c1.kind, c2.kind, c1.position < c2.position)]
        return {case.words(c1.edge, c2.edge): case.coefficient}

    def local_pair_bracket(self, c1: EndIncidence, c2: EndIncidence) -> Tensor2:
        return self.normalize(self._local_raw(c1, c2))

    # -- generators

    def _generator_raw(self, a: Letter, b: Letter) -> Raw:
        key = (a, b)
        cached = self._generator_cache.get(key)
        if cached is not None:
            return cached

        e, i = a
        f, j = b
        if e in self.formal:
            inner = self._element_raw(self.formal[e], None, b)
            result = inner if i < 0 else _sandwich(((), (a,)), {k: -c for k, c in inner.items()}, ((a,), ()))
        elif f in self.formal:
            inner = self._element_raw(self.formal[f], a, None)
            result = inner if j < 0 else _sandwich(((b,), ()), {k: -c for k, c in inner.items()}, ((), (b,)))
        elif j < 0:
            base = self._generator_raw(a, (f, 1))
            result = _sandwich((((f, -1),), ()), base, ((), ((f, -1),)))
            result = {k: -c for k, c in result.items()}
        elif i < 0:
            base = self._generator_raw((e, 1), b)
            result = _sandwich(((), ((e, -1),)), base, (((e, -1),), ()))
            result = {k: -c for k, c in result.items()}
        else:
            result = {}
            for c1 in self.incidences(e):
                for c2 in self.incidences(f):
                    if c1.puncture != c2.puncture or c1.position == c2.position:
                        continue
                    _raw_add(result, self._local_raw(c1, c2))

        self._generator_cache[key] = result
        return result

    def _element_raw(self, element: AlgebraElement, first: Letter | None, second: Letter | None) -> Raw:
        """Raw ⟨⟨first, element⟩⟩ or ⟨⟨element, second⟩⟩"""
        out: Raw = {}
        for w, c in element.terms.items():
            if first is not None:
                _raw_add(out, self.words_raw((first,), w), c)
            else:
                _raw_add(out, self.words_raw(w, (second,)), c)
        return out

    def generator_bracket(self, g1: Letter, g2: Letter) -> Tensor2:
        return self.normalize(self._generator_raw(g1, g2))

    # -- words and elements

    def words_raw(self, w: Word, v: Word) -> Raw:
        """Σ (L'⊗L)·⟨⟨l, m⟩⟩·(R⊗R') over letters l of w and m of v"""
        out: Raw = {}
        for i, letter in enumerate(w):
            left, right = w[:i], w[i + 1 :]
            for j, other in enumerate(v):
                g = self._generator_raw(letter, other)
                if not g:
                    continue
                _raw_add(out, _sandwich((v[:j], left), g, (right, v[j + 1 :])))
        return out

    def bracket_words(self, w: Iterable[Letter], v: Iterable[Letter]) -> Tensor2:
        """Bracket of two unreduced letter sequences"""
        return self.normalize(self.words_raw(tuple(w), tuple(v)))

    def double_bracket(self, x: AlgebraElement, y: AlgebraElement) -> Tensor2:
        self._check(x, y)
        out: Raw = {}
        for w, c in x.terms.items():
            for v, d in y.terms.items():
                _raw_add(out, self.words_raw(w, v), c * d)
        return self.normalize(out)

    __call__ = double_bracket

    # -- uniderivation

    def _letter_derivation(self, p: str, letter: Letter) -> Raw:
        key = (p, letter)
        cached = self._derivation_cache.get(key)
        if cached is not None:
            return cached
        e, k = letter
        if e in self.formal:
            inner: Raw = {}
            for w, c in self.formal[e].terms.items():
                _raw_add(inner, self._word_derivation(p, w), c)
            result = inner if k < 0 else _sandwich((((e, 1),), ()), {q: -c for q, c in inner.items()}, ((), ((e, 1),)))
        else:
            edge = self.surface.edge(e)
            base: Raw = {}
            if edge.tail == p:
                _acc(base, (((e, 1),), ()), Fraction(1))
            if edge.head == p:
                _acc(base, ((), ((e, 1),)), Fraction(-1))
            if k > 0:
                result = base
            else:
                inv = ((e, -1),)
                result = {q: -c for q, c in _sandwich((inv, ()), base, ((), inv)).items()}
        self._derivation_cache[key] = result
        return result

    def _word_derivation(self, p: str, w: Word) -> Raw:
        out: Raw = {}
        for i, letter in enumerate(w):
            d = self._letter_derivation(p, letter)
            if d:
                _raw_add(out, _sandwich((w[:i], ()), d, ((), w[i + 1 :])))
        return out

    def uniderivation(self, p: str, x: AlgebraElement) -> Tensor2:
        if p not in self.surface.punctures:
            raise BracketError(f"unknown puncture '{p}'")
        self._check(x)
        out: Raw = {}
        for w, c in x.terms.items():
            _raw_add(out, self._word_derivation(p, w), c)
        return self.normalize(out)

    def total_uniderivation(self, x: AlgebraElement) -> Tensor2:
        total = Tensor2(self.system)
        for p in self.surface.punctures:
            total = total + self.uniderivation(p, x)
        return total

    # -- triple brackets

    def _nested(self, a: AlgebraElement, b: AlgebraElement, c: AlgebraElement) -> Tensor3:
        """(⟨⟨·,·⟩⟩⊗Id)(Id⊗⟨⟨·,·⟩⟩)(a⊗b⊗c)"""
        inner = self.double_bracket(b, c)
        terms: dict = {}
        for (w1, w2), k in inner.terms.items():
            outer = self.double_bracket(a, AlgebraElement(self.system, {w1: Fraction(1)}))
            for (u1, u2), m in outer.terms.items():
                _acc(terms, (u1, u2, w2), k * m)
        return Tensor3(self.system, terms)

    def triple_bracket(self, x: AlgebraElement, y: AlgebraElement, z: AlgebraElement) -> Tensor3:
        """
        Triple bracket, returned rotated once by τ.

        With B = (⟨⟨·,·⟩⟩⊗1)(1⊗⟨⟨·,·⟩⟩) and τ(x₁⊗x₂⊗x₃) = x₂⊗x₃⊗x₁, the value is
        τ(B(x,y,z) + τB(z,x,y) + τ²B(y,z,x)). The extra rotation puts the
        slots in the order of `triple_from_derivation`, whose terms read
        a′b″ ⊗ b′c″ ⊗ c′a″ for uniderivation parts a′⊗a″, b′⊗b″ and c′⊗c″
        of x, y and z.
        """
        self._check(x, y, z)
        cyclic = (
            self._nested(x, y, z)
            + tau(self._nested(z, x, y))
            + tau(tau(self._nested(y, z, x)))
        )
        return tau(cyclic)

    def triple_from_derivation(self, x: AlgebraElement, y: AlgebraElement, z: AlgebraElement) -> Tensor3:
        self._check(x, y, z)
        terms: dict = {}
        for p in self.surface.punctures:
            da = self.uniderivation(p, x).terms
            db = self.uniderivation(p, y).terms
            dc = self.uniderivation(p, z).terms
            if not (da and db and dc):
                continue
            for (a1, a2), ca in da.items():
                for (b1, b2), cb in db.items():
                    for (c1, c2), cc in dc.items():
                        key = (concat(a1, b2), concat(b1, c2), concat(c1, a2))
                        _acc(terms, key, QUARTER * ca * cb * cc)
        return Tensor3(self.system, terms)

    # -- cyclic space

    def lie_bracket_cyclic(self, a: CyclicElement, b: CyclicElement) -> CyclicElement:
        if not (self.system.compatible(a.system) and self.system.compatible(b.system)):
            raise AlgebraMismatchError("classes are not over this bracket's surface")
        return abelianize(mu(self.double_bracket(a.representative(), b.representative())))


# -- sampling ----------------------------------------------------------------


def letter_ends(surface, letter: Letter) -> tuple[str, str]:
    """(start, finish) punctures of a signed letter"""
    edge = surface.edge(letter[0])
    return (edge.tail, edge.head) if letter[1] > 0 else (edge.head, edge.tail)


def composable_words(surface, length: int = 2) -> list[Word]:
    """All words of `length` edge letters whose consecutive letters compose"""
    letters = [(e, k) for e in surface.edge_ids for k in (1, -1)]
    words = []
    for combo in itertools.product(letters, repeat=length):
        ok = True
        # rightmost letter is traversed first
        for left, right in zip(combo, combo[1:]):
            if letter_ends(surface, right)[1] != letter_ends(surface, left)[0]:
                ok = False
                break
            if left[0] == right[0] and left[1] == -right[1]:
                ok = False
                break
        if ok:
            words.append(tuple(combo))
    return words


def sample_loops(surface, rng: np.random.Generator, count: int, max_length: int = 4) -> list[Word]:
    """Random closed composable words, each based at a puncture"""
    letters = [(e, k) for e in surface.edge_ids for k in (1, -1)]
    leaving: dict[str, list[Letter]] = {p: [] for p in surface.punctures}
    for letter in letters:
        leaving[letter_ends(surface, letter)[0]].append(letter)
    loops: list[Word] = []
    attempts = 0
    while len(loops) < count and attempts < 200 * max(count, 1):
        attempts += 1
        base = surface.punctures[int(rng.integers(len(surface.punctures)))]
        here = base
        path: list[Letter] = []
        for _ in range(int(rng.integers(1, max_length + 1))):
            options = [l for l in leaving[here] if not (path and l[0] == path[-1][0] and l[1] == -path[-1][1])]
            if not options:
                break
            step = options[int(rng.integers(len(options)))]
            path.append(step)
            here = letter_ends(surface, step)[1]
        if path and here == base:
            # composition order lists the last step first
            loops.append(tuple(reversed(path)))
    return loops


# -- reports -----------------------------------------------------------------


@dataclass
class QuasiPoissonReport:
    surface: str
    generator_triples: int = 0
    word_triples: int = 0
    failures: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def checked(self) -> int:
        return self.generator_triples + self.word_triples

    def lines(self) -> list[str]:
        out = [
            f"surface: {self.surface}",
            f"triples checked: {self.checked} ({self.generator_triples} generator, {self.word_triples} word)",
            f"failures: {len(self.failures)}",
        ]
        return out


@dataclass
class DescentReport:
    surface: str
    checked: int = 0
    failures: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class LieReport:
    surface: str
    pairs: int = 0
    triples: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _label(words: Iterable[Word]) -> str:
    return " | ".join(format_word(w) for w in words)


def quasi_poisson_check(
    bracket: DoubleBracket,
    word_samples: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> QuasiPoissonReport:
    """Compare both triple brackets on every edge-letter triple and on sampled short words."""
    system = bracket.system
    surface = system.surface
    if word_samples is None:
        word_samples = int(CONFIG.get("quasi.word_samples", 0))
    if seed is None:
        seed = int(CONFIG.get("quasi.seed", 0))

    generators = [((e, 1),) for e in surface.edge_ids]
    triples = list(itertools.product(generators, repeat=3))
    n_generator = len(triples)

    pool = composable_words(surface, 2)
    if word_samples and pool:
        rng = np.random.default_rng(seed)
        for _ in range(word_samples):
            picks = rng.integers(len(pool), size=3)
            triples.append(tuple(pool[int(i)] for i in picks))

    def check(triple):
        x, y, z = (AlgebraElement.from_word(system, w) for w in triple)
        lhs = bracket.triple_bracket(x, y, z)
        rhs = bracket.triple_from_derivation(x, y, z)
        if lhs == rhs:
            return None
        return (_label(triple), lhs.serialize(), rhs.serialize())

    results = task_manager.map_ordered(check, triples, workers)
    report = QuasiPoissonReport(
        surface=surface.name,
        generator_triples=n_generator,
        word_triples=len(triples) - n_generator,
        failures=[r for r in results if r is not None],
    )
    logger.info(f"[Quasi] {surface.name}: {report.checked} triples, {len(report.failures)} failures")
    return report


def descent_check(bracket: DoubleBracket) -> DescentReport:
    """Every face word, left unreduced, brackets to zero against every edge letter."""
    system = bracket.system
    surface = system.surface
    report = DescentReport(surface=surface.name)
    for face in surface.faces:
        relator = system.signed_edges(face.word).letters
        for edge in surface.edge_ids:
            letter = ((edge, 1),)
            for w, v in ((letter, relator), (relator, letter)):
                report.checked += 1
                value = bracket.bracket_words(w, v)
                if not value.is_zero():
                    report.failures.append((face.id, _label((w, v)), value.serialize()))
    logger.info(f"[Descent] {surface.name}: {report.checked} brackets, {len(report.failures)} failures")
    return report


def lie_check(bracket: DoubleBracket, samples: int = 50, seed: int = 0) -> LieReport:
    """Antisymmetry and Jacobi of the cyclic bracket on random closed loops."""
    system = bracket.system
    surface = system.surface
    rng = np.random.default_rng(seed)
    loops = sample_loops(surface, rng, 3 * samples)
    classes = [abelianize(AlgebraElement.from_word(system, w)) for w in loops]
    report = LieReport(surface=surface.name)
    lie = bracket.lie_bracket_cyclic
    for i in range(0, len(classes) - 2, 3):
        a, b, c = classes[i : i + 3]
        report.pairs += 1
        if lie(a, b) != -lie(b, a):
            report.failures.append(("antisymmetry", _label(loops[i : i + 2])))
        report.triples += 1
        jacobi = lie(a, lie(b, c)) + lie(b, lie(c, a)) + lie(c, lie(a, b))
        if not jacobi.is_zero():
            report.failures.append(("jacobi", _label(loops[i : i + 3])))
    logger.info(f"[Lie] {surface.name}: {report.triples} triples, {len(report.failures)} failures")
    return report


__all__ = [
    "BracketError",
    "EndIncidence",
    "LocalCase",
    "LOCAL_TABLE",
    "DoubleBracket",
    "QuasiPoissonReport",
    "DescentReport",
    "LieReport",
    "letter_ends",
    "composable_words",
    "sample_loops",
    "quasi_poisson_check",
    "descent_check",
    "lie_check",
]
