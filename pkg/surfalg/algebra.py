"""
Exact arithmetic in the surface algebra: signed words, normal forms, tensors
and the cyclic space.
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from surfalg.surface import MarkedSurface

logger = logging.getLogger(__name__)

Letter = tuple[str, int]
Word = tuple[Letter, ...]

Scalar = int | Fraction


class ReductionError(ValueError):
    pass


class AlgebraMismatchError(ValueError):
    pass


class ElementSyntaxError(ValueError):
    pass


# -- words -------------------------------------------------------------------


def free_reduce(letters: Iterable[Letter]) -> Word:
    stack: list[Letter] = []
    for edge, exp in letters:
        if stack and stack[-1][0] == edge and stack[-1][1] == -exp:
            stack.pop()
        else:
            stack.append((edge, exp))
    return tuple(stack)


def concat(a: Word, b: Word) -> Word:
    """Product of two freely reduced words (a applied after b)."""
    i = 0
    n = min(len(a), len(b))
    while i < n and a[-1 - i][0] == b[i][0] and a[-1 - i][1] == -b[i][1]:
        i += 1
    return a[: len(a) - i] + b[i:]


def invert(w: Word) -> Word:
    return tuple((edge, -exp) for edge, exp in reversed(w))


@dataclass(frozen=True)
class GroupWord:
    """An element of the twisted group: δ-sign times a word."""

    sign: int
    letters: Word

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.sign * other.sign, concat(self.letters, other.letters))

    def inverse(self) -> "GroupWord":
        return GroupWord(self.sign, invert(self.letters))

    def power(self, exp: int) -> "GroupWord":
        return self if exp > 0 else self.inverse()


@dataclass(eq=False)
class ReductionSystem:
    surface: MarkedSurface
    twisted: bool
    survivors: tuple[str, ...]
    substitutions: dict[str, GroupWord]
    order: tuple[str, ...]
    extra_letters: frozenset[str] = field(default_factory=frozenset)

    @property
    def delta(self) -> int:
        return -1 if self.twisted else 1

    @property
    def rank(self) -> int:
        return len(self.survivors)

    def letters(self) -> frozenset[str]:
        return frozenset(self.surface.edge_ids) | self.extra_letters

    def compatible(self, other: "ReductionSystem") -> bool:
        return self is other or (
            self.twisted == other.twisted and self.surface == other.surface
        )

    def with_letters(self, names: Iterable[str]) -> "ReductionSystem":
        """Copy of this system that also admits free letters `names`"""
        return ReductionSystem(
            surface=self.surface,
            twisted=self.twisted,
            survivors=self.survivors,
            substitutions=self.substitutions,
            order=self.order,
            extra_letters=self.extra_letters | frozenset(names),
        )

    def reduce_word(self, letters: Iterable[Letter], sign: int = 1) -> GroupWord:
        out: list[Letter] = []
        for edge, exp in letters:
            rule = self.substitutions.get(edge)
            if rule is None:
                out.append((edge, exp))
                continue
            image = rule.power(exp)
            sign *= image.sign
            out.extend(image.letters)
        return GroupWord(sign, free_reduce(out))

    def signed_edges(self, signed: Iterable[tuple[str, int]]) -> GroupWord:
        """Group element of a path of signed edges; a reversed edge is δ·e⁻¹."""
        sign = 1
        letters = []
        for edge, s in signed:
            if s < 0:
                sign *= self.delta
            letters.append((edge, 1 if s > 0 else -1))
        return GroupWord(sign, tuple(letters))


def _face_letters(word) -> tuple[list[Letter], int]:
    letters = [(edge, 1 if s > 0 else -1) for edge, s in word]
    negatives = sum(1 for _, s in word if s < 0)
    return letters, negatives


def build_reduction(s: MarkedSurface, twisted: bool = True) -> ReductionSystem:
    """Eliminate one edge per face by greedy shelling."""
    unprocessed = list(s.faces)
    definitions: dict[str, GroupWord] = {}
    order: list[str] = []

    while unprocessed:
        chosen = None
        for face in unprocessed:
            counts = Counter(edge for edge, _ in face.word)
            others = {
                edge
                for other in unprocessed
                if other is not face
                for edge, _ in other.word
            }
            for index, (edge, _) in enumerate(face.word):
                if edge in definitions or counts[edge] != 1 or edge in others:
                    continue
                chosen = (face, index)
                break
            if chosen:
                break
        if chosen is None:
            stuck = ", ".join(f.id for f in unprocessed)
            raise ReductionError(f"shelling stuck on faces: {stuck}")

        face, index = chosen
        letters, negatives = _face_letters(face.word)
        # face word = δ, so the bare letters multiply to δ^(1 + negatives)
        constant = (-1) ** (1 + negatives) if twisted else 1
        prefix = letters[:index]
        suffix = letters[index + 1 :]
        solved = GroupWord(constant, free_reduce(invert(tuple(prefix)) + invert(tuple(suffix))))
        edge, exp = letters[index]
        definitions[edge] = solved if exp > 0 else solved.inverse()
        order.append(edge)
        unprocessed.remove(face)
        logger.debug(f"[Reduce] {s.name}: face {face.id} eliminates {edge}")

    resolved: dict[str, GroupWord] = {}
    for edge in reversed(order):
        raw = definitions[edge]
        partial = ReductionSystem(s, twisted, (), resolved, ())
        image = partial.reduce_word(raw.letters, raw.sign)
        resolved[edge] = image

    survivors = tuple(e for e in s.edge_ids if e not in resolved)
    if len(survivors) < 2:
        raise ReductionError(
            f"free rank {len(survivors)} < 2: center of the algebra exceeds the rationals"
        )
    return ReductionSystem(
        surface=s,
        twisted=twisted,
        survivors=survivors,
        substitutions=resolved,
        order=tuple(order),
    )


# -- elements ----------------------------------------------------------------


def _fraction(value: Scalar) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def _accumulate(target: dict, key, coeff: Fraction):
    value = target.get(key, 0) + coeff
    if value:
        target[key] = value
    else:
        target.pop(key, None)


def format_fraction(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def format_word(w: Word) -> str:
    if not w:
        return "1"
    return " ".join(f"{edge}^{exp}" for edge, exp in w)


class AlgebraElement:
    """A rational combination of normal-form words over a reduction system."""

    __slots__ = ("system", "terms")

    def __init__(self, system: ReductionSystem, terms: Mapping[Word, Fraction] | None = None):
        self.system = system
        self.terms: dict[Word, Fraction] = dict(terms or {})

    # construction

    @classmethod
    def zero(cls, system: ReductionSystem) -> "AlgebraElement":
        return cls(system)

    @classmethod
    def one(cls, system: ReductionSystem) -> "AlgebraElement":
        return cls(system, {(): Fraction(1)})

    @classmethod
    def constant(cls, system: ReductionSystem, value: Scalar) -> "AlgebraElement":
        value = _fraction(value)
        return cls(system, {(): value} if value else {})

    @classmethod
    def generator(cls, system: ReductionSystem, edge: str, exp: int = 1) -> "AlgebraElement":
        return cls.from_raw(system, [(1, ((edge, exp),))])

    @classmethod
    def from_word(cls, system: ReductionSystem, letters: Iterable[Letter], coeff: Scalar = 1):
        return cls.from_raw(system, [(coeff, tuple(letters))])

    @classmethod
    def from_signed_edges(cls, system: ReductionSystem, signed, coeff: Scalar = 1):
        """Element of a path given as signed edges in composition order."""
        gw = system.signed_edges(signed)
        return cls.from_raw(system, [(gw.sign * _fraction(coeff), gw.letters)])

    @classmethod
    def from_raw(cls, system: ReductionSystem, raw: Iterable[tuple[Scalar, Word]]):
        terms: dict[Word, Fraction] = {}
        for coeff, letters in raw:
            gw = system.reduce_word(letters)
            _accumulate(terms, gw.letters, gw.sign * _fraction(coeff))
        return cls(system, terms)

    # structure

    def _check(self, other: "AlgebraElement"):
        if not self.system.compatible(other.system):
            raise AlgebraMismatchError("elements over different surfaces or twist modes")

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not w for w in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def letters(self) -> set[str]:
        return {edge for w in self.terms for edge, _ in w}

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    # arithmetic

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            other = AlgebraElement.constant(self.system, other)
        self._check(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            _accumulate(terms, w, c)
        return AlgebraElement(self.system, terms)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement(self.system, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, k: Scalar) -> "AlgebraElement":
        k = _fraction(k)
        if not k:
            return AlgebraElement(self.system)
        return AlgebraElement(self.system, {w: k * c for w, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, AlgebraElement):
            return self.scale(other)
        self._check(other)
        terms: dict[Word, Fraction] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                _accumulate(terms, concat(w1, w2), c1 * c2)
        return AlgebraElement(self.system, terms)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            if isinstance(other, (int, Fraction)):
                return self.terms == AlgebraElement.constant(self.system, other).terms
            return NotImplemented
        self._check(other)
        return self.terms == other.terms

    __hash__ = None

    def serialize(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(
            f"{format_fraction(self.terms[w])} * {format_word(w)}"
            for w in sorted(self.terms)
        )

    def __repr__(self):
        return f"AlgebraElement({self.serialize()})"


def multiply(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    return x * y


def add(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    return x + y


def negate(x: AlgebraElement) -> AlgebraElement:
    return -x


def scalar_multiply(k: Scalar, x: AlgebraElement) -> AlgebraElement:
    return x.scale(k)


def reduce(x, system: ReductionSystem) -> AlgebraElement:
    """Normal form of a raw word, GroupWord, raw combination or element."""
    if isinstance(x, AlgebraElement):
        return AlgebraElement.from_raw(system, [(c, w) for w, c in x.terms.items()])
    if isinstance(x, GroupWord):
        return AlgebraElement.from_raw(system, [(x.sign, x.letters)])
    items = list(x)
    if items and isinstance(items[0][0], str):
        return AlgebraElement.from_raw(system, [(1, tuple(items))])
    return AlgebraElement.from_raw(system, items)


# -- tensors -----------------------------------------------------------------


class Tensor:
    """Element of a tensor power of the algebra; values of (double, triple) brackets."""

    __slots__ = ("system", "terms")
    arity = 0

    def __init__(self, system: ReductionSystem, terms: Mapping[tuple[Word, ...], Fraction] | None = None):
        self.system = system
        self.terms: dict[tuple[Word, ...], Fraction] = dict(terms or {})

    @classmethod
    def zero(cls, system: ReductionSystem):
        return cls(system)

    @classmethod
    def pure(cls, *factors: AlgebraElement) -> "Tensor":
        """x₁ ⊗ … ⊗ x_k expanded over terms"""
        kind = {2: Tensor2, 3: Tensor3}.get(len(factors), cls)
        system = factors[0].system
        terms: dict[tuple[Word, ...], Fraction] = {(): Fraction(1)}
        for f in factors:
            nxt: dict[tuple[Word, ...], Fraction] = {}
            for key, c in terms.items():
                for w, d in f.terms.items():
                    _accumulate(nxt, key + (w,), c * d)
            terms = nxt
        return kind(system, terms)

    @classmethod
    def from_words(cls, system: ReductionSystem, words: tuple[Word, ...], coeff: Scalar = 1):
        return cls.pure(*(AlgebraElement.from_word(system, w) for w in words)).scale(coeff)

    def _new(self, terms):
        return type(self)(self.system, terms)

    def _check(self, other: "Tensor"):
        if not self.system.compatible(other.system):
            raise AlgebraMismatchError("tensors over different surfaces or twist modes")
        if type(self).arity != type(other).arity:
            raise AlgebraMismatchError("tensors of different arity")

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Tensor"):
        self._check(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _accumulate(terms, key, c)
        return self._new(terms)

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k: Scalar):
        k = _fraction(k)
        if not k:
            return self._new({})
        return self._new({key: k * c for key, c in self.terms.items()})

    def __rmul__(self, k):
        return self.scale(k)

    def __mul__(self, other):
        """Slot-wise product (x₁⊗x₂)(y₁⊗y₂) = x₁y₁⊗x₂y₂."""
        if not isinstance(other, Tensor):
            return self.scale(other)
        self._check(other)
        terms: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = tuple(concat(a, b) for a, b in zip(k1, k2))
                _accumulate(terms, key, c1 * c2)
        return self._new(terms)

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        self._check(other)
        return self.terms == other.terms

    __hash__ = None

    def slot(self, key: tuple[Word, ...], index: int) -> AlgebraElement:
        return AlgebraElement(self.system, {key[index]: Fraction(1)})

    def serialize(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(
            f"{format_fraction(self.terms[key])} * "
            + " (x) ".join(f"({format_word(w)})" for w in key)
            for key in sorted(self.terms)
        )

    def __repr__(self):
        return f"{type(self).__name__}({self.serialize()})"


class Tensor2(Tensor):
    __slots__ = ()
    arity = 2


class Tensor3(Tensor):
    __slots__ = ()
    arity = 3


def tensor(*factors: AlgebraElement) -> Tensor:
    return Tensor.pure(*factors)


def tau(t: Tensor) -> Tensor:
    """Cyclic slot rotation x₁⊗…⊗xₙ ↦ x₂⊗…⊗xₙ⊗x₁."""
    return t._new({key[1:] + key[:1]: c for key, c in t.terms.items()})


def mu(t: Tensor2) -> AlgebraElement:
    terms: dict[Word, Fraction] = {}
    for (a, b), c in t.terms.items():
        _accumulate(terms, concat(a, b), c)
    return AlgebraElement(t.system, terms)


# -- cyclic space ------------------------------------------------------------


def cyclic_reduce(w: Word) -> Word:
    w = free_reduce(w)
    i, j = 0, len(w) - 1
    while i < j and w[i][0] == w[j][0] and w[i][1] == -w[j][1]:
        i += 1
        j -= 1
    return w[i : j + 1]


def minimal_rotation(w: Word) -> Word:
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def cyclic_class(w: Word) -> Word:
    return minimal_rotation(cyclic_reduce(w))


class CyclicElement:
    """A rational combination of cyclic classes of words."""

    __slots__ = ("system", "terms")

    def __init__(self, system: ReductionSystem, terms: Mapping[Word, Fraction] | None = None):
        self.system = system
        self.terms: dict[Word, Fraction] = dict(terms or {})

    def _check(self, other: "CyclicElement"):
        if not self.system.compatible(other.system):
            raise AlgebraMismatchError("classes over different surfaces or twist modes")

    def __add__(self, other: "CyclicElement"):
        self._check(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            _accumulate(terms, w, c)
        return CyclicElement(self.system, terms)

    def __neg__(self):
        return CyclicElement(self.system, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k: Scalar):
        k = _fraction(k)
        return CyclicElement(self.system, {w: k * c for w, c in self.terms.items()} if k else {})

    def is_zero(self) -> bool:
        return not self.terms

    def representative(self) -> AlgebraElement:
        return AlgebraElement(self.system, self.terms)

    def __eq__(self, other):
        if not isinstance(other, CyclicElement):
            return NotImplemented
        self._check(other)
        return self.terms == other.terms

    __hash__ = None

    def serialize(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(
            f"{format_fraction(self.terms[w])} * [{format_word(w)}]"
            for w in sorted(self.terms)
        )

    def __repr__(self):
        return f"CyclicElement({self.serialize()})"


def abelianize(x: AlgebraElement) -> CyclicElement:
    terms: dict[Word, Fraction] = {}
    for w, c in x.terms.items():
        _accumulate(terms, cyclic_class(w), c)
    return CyclicElement(x.system, terms)


def equals(x, y) -> bool:
    return x == y


# -- relabeling --------------------------------------------------------------


def apply_letter_map(
    x: AlgebraElement, edges: Mapping[str, tuple[str, int]], system: ReductionSystem
) -> AlgebraElement:
    """Relabel letters by a signed edge map; a reversed image contributes δ·e⁻¹."""
    raw = []
    for w, c in x.terms.items():
        sign = 1
        letters = []
        for edge, exp in w:
            if edge not in edges:
                letters.append((edge, exp))
                continue
            image, s = edges[edge]
            if s < 0:
                sign *= system.delta
            letters.append((image, exp * s))
        raw.append((sign * c, tuple(letters)))
    return AlgebraElement.from_raw(system, raw)


# -- literal syntax ----------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<tensor>\(x\))|(?P<number>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>[-+*/^()\[\]]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ElementSyntaxError(f"unexpected character at {pos}: '{text[pos:pos + 8]}'")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


class _Parser:
    """Recursive descent over the canonical serialization grammar."""

    def __init__(self, text: str, system: ReductionSystem):
        self.tokens = _tokenize(text)
        self.i = 0
        self.system = system
        self.allowed = system.letters()

    def peek(self, offset: int = 0):
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else (None, None)

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value) or (
            kind is not None and tok[0] != kind
        ):
            expected = value or kind or "token"
            raise ElementSyntaxError(f"expected {expected}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def coefficient(self) -> Fraction:
        value = Fraction(int(self.take(kind="number")))
        if self.peek()[1] == "/":
            self.take("/")
            den = int(self.take(kind="number"))
            if den == 0:
                raise ElementSyntaxError("zero denominator")
            value /= den
        return value

    def letter(self) -> list[Letter]:
        name = self.take(kind="ident")
        if name not in self.allowed:
            raise ElementSyntaxError(f"unknown letter '{name}'")
        exp = 1
        if self.peek()[1] == "^":
            self.take("^")
            sign = 1
            if self.peek()[1] == "-":
                self.take("-")
                sign = -1
            exp = sign * int(self.take(kind="number"))
        if exp == 0:
            return []
        return [(name, 1 if exp > 0 else -1)] * abs(exp)

    def word(self) -> Word:
        if self.peek() == ("number", "1"):
            self.take()
            return ()
        letters: list[Letter] = []
        if self.peek()[0] != "ident":
            raise ElementSyntaxError(f"expected a word, got {self.peek()[1]!r}")
        while self.peek()[0] == "ident":
            letters.extend(self.letter())
        return tuple(letters)

    def signed(self) -> int:
        sign = 1
        while self.peek()[1] in ("+", "-"):
            if self.take() == "-":
                sign = -sign
        return sign

    def term(self) -> tuple[Fraction, Word]:
        sign = self.signed()
        coeff = Fraction(1)
        if self.peek()[0] == "number" and (
            self.peek(1)[1] in ("/", "*") or self.peek()[1] != "1"
        ):
            coeff = self.coefficient()
            if self.peek()[1] != "*":
                return sign * coeff, ()
            self.take("*")
        return sign * coeff, self.word()

    def element(self) -> list[tuple[Fraction, Word]]:
        if self.peek() == ("number", "0") and self.i + 1 == len(self.tokens):
            self.take()
            return []
        terms = [self.term()]
        while not self.done() and self.peek()[1] in ("+", "-"):
            if self.peek()[1] == "+":
                self.take("+")
                terms.append(self.term())
            else:
                terms.append(self.term())
        return terms

    def tensor_term(self, arity: int):
        sign = self.signed()
        coeff = Fraction(1)
        if self.peek()[0] == "number":
            coeff = self.coefficient()
            self.take("*")
        words = []
        for k in range(arity):
            if k:
                self.take(kind="tensor")
            self.take("(")
            words.append(self.word())
            self.take(")")
        return sign * coeff, tuple(words)


def parse_element(text: str, system: ReductionSystem) -> AlgebraElement:
    parser = _Parser(text, system)
    terms = parser.element()
    if not parser.done():
        raise ElementSyntaxError(f"trailing input at token {parser.peek()[1]!r}")
    return AlgebraElement.from_raw(system, [(c, w) for c, w in terms])


def parse_tensor(text: str, system: ReductionSystem, arity: int = 2) -> Tensor:
    parser = _Parser(text, system)
    kind = Tensor2 if arity == 2 else Tensor3 if arity == 3 else Tensor
    result = kind(system)
    if parser.peek() == ("number", "0") and len(parser.tokens) == 1:
        return result
    while True:
        coeff, words = parser.tensor_term(arity)
        result = result + Tensor.from_words(system, words, coeff)
        if parser.done():
            return result
        if parser.peek()[1] == "+":
            parser.take("+")


__all__ = [
    "Letter",
    "Word",
    "ReductionError",
    "AlgebraMismatchError",
    "ElementSyntaxError",
    "free_reduce",
    "concat",
    "invert",
    "GroupWord",
    "ReductionSystem",
    "build_reduction",
    "AlgebraElement",
    "multiply",
    "add",
    "negate",
    "scalar_multiply",
    "reduce",
    "Tensor",
    "Tensor2",
    "Tensor3",
    "tensor",
    "tau",
    "mu",
    "cyclic_reduce",
    "cyclic_class",
    "CyclicElement",
    "abelianize",
    "equals",
    "apply_letter_map",
    "format_fraction",
    "format_word",
    "parse_element",
    "parse_tensor",
]
