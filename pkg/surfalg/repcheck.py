"""
Exact-rational matrix evaluation of surface algebra elements.

Random representations serve as an identity oracle for expressions the
normal form cannot decide; the second half holds the 2×2 block checks over
an involutive matrix algebra.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy import Matrix, Rational, eye, kronecker_product, zeros

from surfalg.algebra import (
    AlgebraElement,
    GroupWord,
    ReductionSystem,
    Tensor,
    Word,
    build_reduction,
)
from surfalg.config import CONFIG
from surfalg.surface import MarkedSurface

logger = logging.getLogger(__name__)


class RepresentationError(ValueError):
    pass


# -- representations ---------------------------------------------------------


@dataclass
class MatrixRep:
    """Invertible N×N rational matrices for every edge letter of a surface."""

    system: ReductionSystem
    N: int
    assignment: dict[str, Matrix]
    seed: object = None
    _inverses: dict[str, Matrix] = field(default_factory=dict, repr=False)
    _words: dict[Word, Matrix] = field(default_factory=dict, repr=False)

    @property
    def twisted(self) -> bool:
        return self.system.twisted

    def letter(self, edge: str, exp: int) -> Matrix:
        try:
            m = self.assignment[edge]
        except KeyError:
            raise RepresentationError(f"no matrix for letter '{edge}'") from None
        if exp > 0:
            return m
        inv = self._inverses.get(edge)
        if inv is None:
            inv = self._inverses[edge] = m.inv()
        return inv

    def word(self, w: Word) -> Matrix:
        cached = self._words.get(w)
        if cached is not None:
            return cached
        result = eye(self.N)
        for edge, exp in w:
            result = result * self.letter(edge, exp)
        if len(self._words) < 50_000:
            self._words[w] = result
        return result

    def with_formal(self, formal: Mapping[str, AlgebraElement]) -> "MatrixRep":
        """Extend by formal inverse letters, each evaluated as the inverse of its element."""
        assignment = dict(self.assignment)
        for name, base in formal.items():
            m = evaluate(self, base)
            if m.det() == 0:
                raise RepresentationError(f"formal inverse {name} has a singular base")
            assignment[name] = m.inv()
        return MatrixRep(self.system, self.N, assignment, self.seed)


def _random_invertible(rng: np.random.Generator, N: int, lo: int, hi: int, retries: int) -> Matrix:
    for _ in range(retries):
        m = Matrix(rng.integers(lo, hi + 1, size=(N, N)).tolist())
        if m.det() != 0:
            return m
    raise RepresentationError(f"no invertible {N}x{N} draw after {retries} tries")


def random_rep(
    s: MarkedSurface | ReductionSystem,
    N: int,
    seed=None,
    twisted: bool = True,
) -> MatrixRep:
    """Random integer matrices on free generators; eliminated edges get their defining words."""
    if N < 1:
        raise RepresentationError(f"dimension must be positive, got {N}")
    system = s if isinstance(s, ReductionSystem) else build_reduction(s, twisted)
    lo = int(CONFIG.get("oracle.entry_min", -9))
    hi = int(CONFIG.get("oracle.entry_max", 9))
    retries = int(CONFIG.get("oracle.max_retries", 100))
    rng = np.random.default_rng(seed)

    assignment = {
        edge: _random_invertible(rng, N, lo, hi, retries) for edge in system.survivors
    }
    rep = MatrixRep(system, N, assignment, seed)
    for edge in system.order:
        rule = system.substitutions[edge]
        assignment[edge] = rule.sign * rep.word(rule.letters)
    return rep


def evaluate(r: MatrixRep, x) -> Matrix:
    """Matrix of an element, a GroupWord or a raw letter sequence."""
    if isinstance(x, GroupWord):
        return x.sign * r.word(x.letters)
    if isinstance(x, AlgebraElement):
        if not r.system.compatible(x.system):
            raise RepresentationError("element is not over the representation's surface")
        total = zeros(r.N, r.N)
        for w, c in x.terms.items():
            total += Rational(c.numerator, c.denominator) * r.word(w)
        return total
    return r.word(tuple(x))


def evaluate_tensor(r: MatrixRep, t: Tensor) -> Matrix:
    """Tensor evaluated as a sum of Kronecker products of its slot matrices."""
    if not r.system.compatible(t.system):
        raise RepresentationError("tensor is not over the representation's surface")
    size = r.N ** t.arity
    total = zeros(size, size)
    for key, c in t.terms.items():
        total += Rational(c.numerator, c.denominator) * kronecker_product(*(r.word(w) for w in key))
    return total


def evaluate_tensor2(r: MatrixRep, t: Tensor) -> Matrix:
    return evaluate_tensor(r, t)


def serialize_matrix(m: Matrix) -> str:
    rows = []
    for i in range(m.rows):
        entries = []
        for j in range(m.cols):
            q = Rational(m[i, j])
            entries.append(f"{q.p}/{q.q}")
        rows.append(" ".join(entries))
    return "; ".join(rows)


# -- identity oracle ---------------------------------------------------------


@dataclass
class Verdict:
    status: str
    detail: str = ""
    sizes: list[int] = field(default_factory=list)
    samples: int = 0
    seed: int | None = None
    checked: int = 0
    probabilistic: bool = False

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        extra = " (probabilistic evidence)" if self.probabilistic else ""
        return f"{self.status}{extra}: {self.detail}" if self.detail else f"{self.status}{extra}"


def sample_seed(seed: int, N: int, k: int, attempt: int = 0) -> list[int]:
    return [seed, N, k, attempt]


def _evaluate_any(r: MatrixRep, x) -> Matrix:
    if isinstance(x, Tensor):
        return evaluate_tensor(r, x)
    return evaluate(r, x)


def identity_oracle(
    lhs,
    rhs,
    sizes: Sequence[int] | None = None,
    samples: int | None = None,
    seed: int | None = None,
    formal: Mapping[str, AlgebraElement] | None = None,
    system: ReductionSystem | None = None,
) -> Verdict:
    """Compare two expressions under random representations, exactly per sample."""
    sizes = list(sizes or CONFIG.get("oracle.sizes", [5, 7]))
    samples = int(samples if samples is not None else CONFIG.get("oracle.samples", 5))
    seed = int(seed if seed is not None else CONFIG.get("oracle.seed", 0))
    retries = int(CONFIG.get("oracle.max_retries", 100))
    system = system or lhs.system
    formal = dict(formal or {})

    checked = 0
    for N in sizes:
        for k in range(samples):
            rep = None
            for attempt in range(retries):
                candidate = random_rep(system, N, sample_seed(seed, N, k, attempt))
                try:
                    rep = candidate.with_formal(formal) if formal else candidate
                    break
                except RepresentationError:
                    continue
            if rep is None:
                raise RepresentationError(f"formal inverse stayed singular at N={N}, sample {k}")
            checked += 1
            if _evaluate_any(rep, lhs) != _evaluate_any(rep, rhs):
                logger.info(f"[Oracle] mismatch at N={N}, sample {k}, seed {seed}")
                return Verdict(
                    "fail",
                    f"sides differ at N={N}, sample {k}",
                    sizes,
                    samples,
                    seed,
                    checked,
                    probabilistic=True,
                )
    return Verdict(
        "pass",
        f"{checked} samples agree at sizes {','.join(map(str, sizes))}",
        sizes,
        samples,
        seed,
        checked,
        probabilistic=True,
    )


# -- holonomy ----------------------------------------------------------------


@dataclass
class DecorationData:
    """Rank-one decoration: a nonzero value s_p for every puncture."""

    sections: dict[str, Rational]

    def __post_init__(self):
        for p, v in self.sections.items():
            if v == 0:
                raise RepresentationError(f"section at {p} vanishes")

    @classmethod
    def constant(cls, punctures: Iterable[str], value=1) -> "DecorationData":
        return cls({p: Rational(value) for p in punctures})


def word_endpoints(surface: MarkedSurface, w: Word) -> tuple[str, str]:
    """(start, finish) of a composable word; the rightmost letter is traversed first"""
    if not w:
        raise RepresentationError("empty word has no endpoints")
    here = None
    start = None
    for edge, exp in reversed(w):
        e = surface.edge(edge)
        begin, finish = (e.tail, e.head) if exp > 0 else (e.head, e.tail)
        if here is not None and begin != here:
            raise RepresentationError(f"word is not composable at letter {edge}")
        if start is None:
            start = begin
        here = finish
    return start, here


def holonomy_function(d: DecorationData, r: MatrixRep, gamma: GroupWord | Word) -> Rational:
    """a_γ = s_q⁻¹ · ρ(γ) · s_p for γ running from p to q, rank one."""
    if r.N != 1:
        raise RepresentationError("holonomy functions need a rank-one representation")
    if not isinstance(gamma, GroupWord):
        gamma = GroupWord(1, tuple(gamma))
    p, q = word_endpoints(r.system.surface, gamma.letters)
    value = evaluate(r, gamma)[0, 0]
    return value * d.sections[p] / d.sections[q]


# -- involutive algebras -----------------------------------------------------

SYMPLECTIC_FORM = Matrix([[0, 1], [-1, 0]])
ORTHOGONAL_FORM = Matrix([[0, 1], [1, 0]])


@dataclass
class InvolutiveContext:
    """k×k rational matrices with σ(a) = J⁻¹aᵀJ (plain transpose when J is None)."""

    k: int
    twist: Matrix | None = None

    def __post_init__(self):
        if self.twist is not None:
            j = self.twist
            if j.shape != (self.k, self.k) or j.det() == 0:
                raise RepresentationError("twist must be an invertible k×k matrix")
            if j.T != j and j.T != -j:
                raise RepresentationError("twist must be symmetric or antisymmetric")
            self._twist_inv = j.inv()

    def sigma(self, a: Matrix) -> Matrix:
        if a.shape != (self.k, self.k):
            raise RepresentationError(f"expected a {self.k}x{self.k} matrix, got {a.shape}")
        if self.twist is None:
            return a.T
        return self._twist_inv * a.T * self.twist

    def blocks(self, g: Matrix) -> list[list[Matrix]]:
        k = self.k
        if g.shape != (2 * k, 2 * k):
            raise RepresentationError(f"expected a {2 * k}x{2 * k} block matrix, got {g.shape}")
        return [[g[i * k : (i + 1) * k, j * k : (j + 1) * k] for j in range(2)] for i in range(2)]

    def block(self, rows: Sequence[Sequence[Matrix]]) -> Matrix:
        return Matrix.vstack(*(Matrix.hstack(*row) for row in rows))

    def sigma_transpose(self, g: Matrix) -> Matrix:
        """σ(g)ᵗ: transpose the blocks, apply σ to each"""
        b = self.blocks(g)
        return self.block([[self.sigma(b[j][i]) for j in range(2)] for i in range(2)])

    def form(self, omega: Matrix) -> Matrix:
        return kronecker_product(omega, eye(self.k))

    def symmetric(self, a: Matrix) -> bool:
        return self.sigma(a) == a

    def antisymmetric(self, a: Matrix) -> bool:
        return self.sigma(a) == -a


@dataclass
class Membership:
    symplectic: bool
    orthogonal: bool
    group: bool = True

    @property
    def label(self) -> str:
        if self.symplectic and self.orthogonal:
            return "both"
        if self.symplectic:
            return "symplectic" if self.group else "sp2"
        if self.orthogonal:
            return "indefinite-orthogonal" if self.group else "o11"
        return "neither"


def group_membership(ctx: InvolutiveContext, g: Matrix) -> Membership:
    """σ(g)ᵗΩg = Ω for the symplectic and the split orthogonal Ω."""
    st = ctx.sigma_transpose(g)
    checks = []
    for omega in (SYMPLECTIC_FORM, ORTHOGONAL_FORM):
        big = ctx.form(omega)
        checks.append(st * big * g == big)
    return Membership(*checks, group=True)


def lie_membership(ctx: InvolutiveContext, xi: Matrix) -> Membership:
    """σ(ξ)ᵗΩ + Ωξ = 0 for both forms."""
    st = ctx.sigma_transpose(xi)
    size = 2 * ctx.k
    checks = []
    for omega in (SYMPLECTIC_FORM, ORTHOGONAL_FORM):
        big = ctx.form(omega)
        checks.append(st * big + big * xi == zeros(size, size))
    return Membership(*checks, group=False)


def is_unitary(ctx: InvolutiveContext, a: Matrix) -> bool:
    return ctx.sigma(a) * a == eye(ctx.k)


@dataclass(frozen=True)
class DualMatrix:
    """a0 + ε·a1 with ε² = 0."""

    a0: Matrix
    a1: Matrix

    def __mul__(self, other: "DualMatrix") -> "DualMatrix":
        return DualMatrix(self.a0 * other.a0, self.a0 * other.a1 + self.a1 * other.a0)

    def __add__(self, other: "DualMatrix") -> "DualMatrix":
        return DualMatrix(self.a0 + other.a0, self.a1 + other.a1)

    def __eq__(self, other):
        if not isinstance(other, DualMatrix):
            return NotImplemented
        return self.a0 == other.a0 and self.a1 == other.a1

    __hash__ = None

    @classmethod
    def constant(cls, a: Matrix) -> "DualMatrix":
        return cls(a, zeros(*a.shape))


def first_order_membership(ctx: InvolutiveContext, xi: Matrix, g: Matrix | None = None) -> Membership:
    """Group test for g·(1 + εξ) over dual numbers; g defaults to the identity."""
    size = 2 * ctx.k
    g = g if g is not None else eye(size)
    h = DualMatrix(g, g * xi)
    st = DualMatrix(ctx.sigma_transpose(h.a0), ctx.sigma_transpose(h.a1))
    checks = []
    for omega in (SYMPLECTIC_FORM, ORTHOGONAL_FORM):
        big = DualMatrix.constant(ctx.form(omega))
        checks.append(st * big * h == big)
    return Membership(*checks, group=False)


@dataclass
class FormRecord:
    isotropic: bool
    pairing: Matrix
    normalized: bool


def pairing(ctx: InvolutiveContext, omega: Matrix, x: Sequence[Matrix], y: Sequence[Matrix]) -> Matrix:
    """ω(x, y) = σ(x)ᵗΩy"""
    if len(x) != 2 or len(y) != 2:
        raise RepresentationError("form vectors have two entries")
    total = zeros(ctx.k, ctx.k)
    for i in range(2):
        for j in range(2):
            if omega[i, j]:
                total += omega[i, j] * ctx.sigma(x[i]) * y[j]
    return total


def form_checks(ctx: InvolutiveContext, x: Sequence[Matrix], y: Sequence[Matrix], omega: Matrix = SYMPLECTIC_FORM) -> FormRecord:
    isotropic = pairing(ctx, omega, x, x) == zeros(ctx.k, ctx.k)
    value = pairing(ctx, omega, x, y)
    return FormRecord(isotropic=isotropic, pairing=value, normalized=isotropic and value == eye(ctx.k))


__all__ = [
    "RepresentationError",
    "MatrixRep",
    "random_rep",
    "evaluate",
    "evaluate_tensor",
    "evaluate_tensor2",
    "serialize_matrix",
    "Verdict",
    "identity_oracle",
    "DecorationData",
    "word_endpoints",
    "holonomy_function",
    "SYMPLECTIC_FORM",
    "ORTHOGONAL_FORM",
    "InvolutiveContext",
    "Membership",
    "group_membership",
    "lie_membership",
    "is_unitary",
    "DualMatrix",
    "first_order_membership",
    "FormRecord",
    "pairing",
    "form_checks",
]
