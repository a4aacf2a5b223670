"""Elements of free braided-commutative algebras.

A free algebra is fixed by a deformation and an ordered list of generators
with torus degrees.  Generators quasi-commute,

    x_i x_j = chi(m_j, m_i) x_j x_i,

so every element has a unique expansion over ordered monomials
x_1^e_1 ... x_N^e_N.  Monomials are plain exponent tuples; the monomial order
is degree-reverse-lexicographic with x_1 > x_2 > ... > x_N.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .errors import (
    AlgebraMismatch,
    DegreeError,
    DimensionMismatch,
    InvalidGenerator,
    ParseError,
    ValidationError,
)
from .phase_ring import (
    Coefficient,
    DeformationData,
    DegreeVector,
    Laurent,
    RationalFunction,
    as_coefficient,
)
from .textform import Token, tokenize

Monomial = tuple[int, ...]

RESERVED_NAMES = frozenset({"q"})


@dataclass(frozen=True)
class Generator:
    """A generator with its torus degree.

    ``invertible`` marks a generator whose inverse is the generator declared
    immediately after it; the presentation must carry the relation
    ``next * this - 1``.
    """

    name: str
    degree: DegreeVector
    invertible: bool = False

    def __post_init__(self):
        object.__setattr__(self, "degree", tuple(int(v) for v in self.degree))


GeneratorSpec = Generator


def add_degrees(*degrees: Sequence[int]) -> DegreeVector:
    return tuple(sum(col) for col in zip(*degrees))


def neg_degree(m: Sequence[int]) -> DegreeVector:
    return tuple(-v for v in m)


def scale_degree(k: int, m: Sequence[int]) -> DegreeVector:
    return tuple(k * v for v in m)


def order_key(mono: Monomial) -> tuple:
    """Sort key realizing degrevlex: larger key means larger monomial."""
    return (sum(mono), tuple(-e for e in reversed(mono)))


def divides(a: Monomial, b: Monomial) -> bool:
    return all(x <= y for x, y in zip(a, b))


def total_degree(mono: Monomial) -> int:
    return sum(mono)


@dataclass(frozen=True, eq=False)
class FreeAlgebra:
    deformation: DeformationData
    generators: tuple[Generator, ...]

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, FreeAlgebra):
            return NotImplemented
        return self.deformation == other.deformation and self.generators == other.generators

    def __hash__(self) -> int:
        return self._hash_value

    @cached_property
    def _hash_value(self) -> int:
        return hash((self.deformation, self.generators))

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        seen = set()
        for g in gens:
            if not g.name.isidentifier() or g.name in RESERVED_NAMES:
                raise InvalidGenerator(f"invalid generator name {g.name!r}")
            if g.name in seen:
                raise InvalidGenerator(f"duplicate generator name {g.name!r}")
            seen.add(g.name)
            self.deformation.check_degree(g.degree)

    @property
    def ngens(self) -> int:
        return len(self.generators)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    @cached_property
    def degrees(self) -> tuple[DegreeVector, ...]:
        return tuple(g.degree for g in self.generators)

    @cached_property
    def index(self) -> dict[str, int]:
        return {g.name: i for i, g in enumerate(self.generators)}

    @cached_property
    def _pairings(self) -> tuple[tuple[int, ...], ...]:
        d = self.deformation
        degs = self.degrees
        return tuple(tuple(d.pairing(degs[j], degs[i]) for i in range(len(degs))) for j in range(len(degs)))

    @cached_property
    def _commutes(self) -> bool:
        return all(v == 0 for row in self._pairings for v in row)

    def generator_index(self, g: int | str) -> int:
        if isinstance(g, str):
            try:
                return self.index[g]
            except KeyError:
                raise InvalidGenerator(f"unknown generator {g!r}") from None
        if not 0 <= g < self.ngens:
            raise InvalidGenerator(f"generator index {g} out of range")
        return g

    def phase_exponent(self, a: Monomial, b: Monomial) -> int:
        """Exponent k with x^a * x^b = q^k * x^(a+b)."""
        if self._commutes:
            return 0
        w = self._pairings
        n = len(a)
        e = 0
        for j in range(n):
            bj = b[j]
            if bj:
                row = w[j]
                s = 0
                for i in range(j + 1, n):
                    if a[i]:
                        s += a[i] * row[i]
                e += bj * s
        return e

    def degree_of(self, mono: Monomial) -> DegreeVector:
        rank = self.deformation.rank
        out = [0] * rank
        for e, g in zip(mono, self.generators):
            if e:
                for k in range(rank):
                    out[k] += e * g.degree[k]
        return tuple(out)

    def unit_monomial(self) -> Monomial:
        return (0,) * self.ngens

    def generator_monomial(self, i: int) -> Monomial:
        return tuple(1 if k == i else 0 for k in range(self.ngens))

    def companion(self, i: int) -> int:
        """Index of the inverse partner of an invertible generator."""
        if not self.generators[i].invertible or i + 1 >= self.ngens:
            raise InvalidGenerator(f"generator {self.generators[i].name!r} is not invertible")
        return i + 1


class _Inhomogeneous:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INHOMOGENEOUS"

    def __bool__(self) -> bool:
        return False


INHOMOGENEOUS = _Inhomogeneous()


class Element:
    """An element of a free algebra: canonical monomial -> nonzero coefficient."""

    __slots__ = ("algebra", "_terms", "_hash")

    def __init__(self, algebra: FreeAlgebra, terms: Mapping[Monomial, object] | None = None):
        self.algebra = algebra
        clean: dict[Monomial, Coefficient] = {}
        n = algebra.ngens
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != n:
                raise DimensionMismatch(f"monomial {mono} has {len(mono)} entries, expected {n}")
            if any(e < 0 for e in mono):
                raise ValidationError(f"negative exponent in {mono}")
            c = as_coefficient(c)
            if c:
                prev = clean.get(mono)
                c = c if prev is None else prev + c
                if c:
                    clean[mono] = c
                else:
                    clean.pop(mono, None)
        self._terms = clean
        self._hash: int | None = None

    @classmethod
    def _raw(cls, algebra: FreeAlgebra, terms: dict[Monomial, Coefficient]) -> "Element":
        obj = cls.__new__(cls)
        obj.algebra = algebra
        obj._terms = terms
        obj._hash = None
        return obj

    # constructors -------------------------------------------------------

    @classmethod
    def zero(cls, algebra: FreeAlgebra) -> "Element":
        return cls._raw(algebra, {})

    @classmethod
    def scalar(cls, algebra: FreeAlgebra, c=1) -> "Element":
        c = as_coefficient(c)
        return cls._raw(algebra, {algebra.unit_monomial(): c} if c else {})

    @classmethod
    def one(cls, algebra: FreeAlgebra) -> "Element":
        return cls.scalar(algebra, 1)

    @classmethod
    def generator(cls, algebra: FreeAlgebra, g: int | str) -> "Element":
        i = algebra.generator_index(g)
        return cls._raw(algebra, {algebra.generator_monomial(i): Laurent.const(1)})

    @classmethod
    def monomial(cls, algebra: FreeAlgebra, mono: Sequence[int], c=1) -> "Element":
        return cls(algebra, {tuple(mono): c})

    # access -------------------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Coefficient]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, mono: Monomial) -> Coefficient:
        return self._terms.get(tuple(mono), Laurent())

    def support(self) -> list[Monomial]:
        return sorted(self._terms, key=order_key, reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_scalar(self) -> bool:
        unit = self.algebra.unit_monomial()
        return all(m == unit for m in self._terms)

    def scalar_value(self) -> Coefficient:
        if not self.is_scalar():
            raise ValidationError(f"{self} is not a scalar")
        return self._terms.get(self.algebra.unit_monomial(), Laurent())

    def leading_monomial(self) -> Monomial:
        if not self._terms:
            raise ValueError("zero element has no leading monomial")
        return max(self._terms, key=order_key)

    def leading_coefficient(self) -> Coefficient:
        return self._terms[self.leading_monomial()]

    def max_total_degree(self) -> int:
        return max((sum(m) for m in self._terms), default=0)

    # arithmetic ---------------------------------------------------------

    def _check(self, other: "Element") -> None:
        if other.algebra != self.algebra:
            raise AlgebraMismatch("elements belong to different algebras")

    def _coerce(self, other) -> "Element":
        if isinstance(other, Element):
            self._check(other)
            return other
        return Element.scalar(self.algebra, other)

    def __add__(self, other) -> "Element":
        other = self._coerce(other)
        if not other._terms:
            return self
        out = dict(self._terms)
        _accumulate(out, other._terms)
        return Element._raw(self.algebra, out)

    __radd__ = __add__

    def __neg__(self) -> "Element":
        return Element._raw(self.algebra, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Element":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Element":
        return (-self) + other

    def scale(self, c) -> "Element":
        c = as_coefficient(c)
        if not c:
            return Element.zero(self.algebra)
        return Element._raw(self.algebra, {m: v * c for m, v in self._terms.items()})

    def __mul__(self, other) -> "Element":
        if isinstance(other, Element):
            return multiply(self, other)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other) -> "Element":
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __pow__(self, n: int) -> "Element":
        if n < 0:
            raise ValueError("negative powers of elements are not defined")
        result = Element.one(self.algebra)
        for _ in range(n):
            result = multiply(result, self)
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Element):
            return self.algebra == other.algebra and self._terms == other._terms
        if isinstance(other, (int, Fraction, Laurent, RationalFunction)):
            return self._terms == Element.scalar(self.algebra, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self) -> str:
        return format_element(self)

    def __repr__(self) -> str:
        return f"Element({format_element(self)!r})"


def _accumulate(out: dict, terms: Mapping) -> None:
    for m, c in terms.items():
        prev = out.get(m)
        if prev is None:
            out[m] = c
        else:
            s = prev + c
            if s:
                out[m] = s
            else:
                del out[m]


def multiply(a: Element, b: Element) -> Element:
    if a.algebra != b.algebra:
        raise AlgebraMismatch("cannot multiply elements of different algebras")
    alg = a.algebra
    out: dict[Monomial, Coefficient] = {}
    for ma, ca in a._terms.items():
        for mb, cb in b._terms.items():
            mono = tuple(x + y for x, y in zip(ma, mb))
            c = (ca * cb).shift(alg.phase_exponent(ma, mb))
            prev = out.get(mono)
            if prev is None:
                out[mono] = c
            else:
                s = prev + c
                if s:
                    out[mono] = s
                else:
                    del out[mono]
    return Element._raw(alg, out)


def normalize_word(algebra: FreeAlgebra, word: Sequence[int | str], c=1) -> Element:
    """Canonical form of the ordered product of generators in ``word`` times ``c``.

    Counts the phase of every inverted pair: an x_i standing left of x_j with
    i > j contributes chi(m_j, m_i).
    """
    idx = [algebra.generator_index(g) for g in word]
    w = algebra._pairings
    e = 0
    for p in range(len(idx)):
        for r in range(p + 1, len(idx)):
            if idx[p] > idx[r]:
                e += w[idx[r]][idx[p]]
    mono = [0] * algebra.ngens
    for i in idx:
        mono[i] += 1
    c = as_coefficient(c)
    if not c:
        return Element.zero(algebra)
    return Element._raw(algebra, {tuple(mono): c.shift(e)})


def monomial_word(mono: Monomial) -> list[int]:
    """The ordered word x_1^e_1 ... x_N^e_N as a list of generator indices."""
    return [i for i, e in enumerate(mono) for _ in range(e)]


def h_degree(a: Element):
    """Torus degree of ``a``; ``INHOMOGENEOUS`` for mixed degrees; zero vector for 0."""
    alg = a.algebra
    deg = None
    for mono in a._terms:
        d = alg.degree_of(mono)
        if deg is None:
            deg = d
        elif d != deg:
            return INHOMOGENEOUS
    return deg if deg is not None else alg.deformation.zero()


def homogeneous_degree(a: Element) -> DegreeVector:
    d = h_degree(a)
    if d is INHOMOGENEOUS:
        raise DegreeError(f"{a} is not homogeneous")
    return d


def is_homogeneous(a: Element) -> bool:
    return h_degree(a) is not INHOMOGENEOUS


def graded_decompose(a: Element) -> dict[DegreeVector, Element]:
    parts: dict[DegreeVector, dict] = {}
    for mono, c in a._terms.items():
        parts.setdefault(a.algebra.degree_of(mono), {})[mono] = c
    return {d: Element._raw(a.algebra, t) for d, t in sorted(parts.items())}


def coinvariant_part(a: Element) -> Element:
    zero = a.algebra.deformation.zero()
    return graded_decompose(a).get(zero, Element.zero(a.algebra))


def specialize_q1(a: Element) -> Element:
    """Image under q -> 1, landing in the commutative free algebra on the same generators."""
    d = a.algebra.deformation
    target = FreeAlgebra(DeformationData.commutative(d.rank), a.algebra.generators)
    return Element(target, {m: c.at_one() for m, c in a._terms.items()})


def embed(a: Element, target: FreeAlgebra, offset: int) -> Element:
    """Copy ``a`` into ``target`` with its generators starting at position ``offset``.

    Used for coproduct factors, whose generators occupy a contiguous block, so
    ordered monomials stay ordered and no phases arise.
    """
    n = a.algebra.ngens
    if offset < 0 or offset + n > target.ngens:
        raise DimensionMismatch("block does not fit in the target algebra")
    pre = (0,) * offset
    post = (0,) * (target.ngens - offset - n)
    return Element._raw(target, {pre + m + post: c for m, c in a._terms.items()})


# text form ------------------------------------------------------------------


def format_monomial(algebra: FreeAlgebra, mono: Monomial) -> str:
    parts = []
    for name, e in zip(algebra.names, mono):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def _format_term(c: Coefficient, mon: str) -> str:
    if isinstance(c, Laurent) and c.is_unit():
        (e, r), = c.items()
        sign = "-" if r < 0 else ""
        r = abs(r)
        parts = []
        if r != 1 or (not mon and e == 0):
            parts.append(str(r))
        if e:
            parts.append("q" if e == 1 else f"q^{e}")
        if mon:
            parts.append(mon)
        return sign + "*".join(parts)
    ctext = f"({c})" if isinstance(c, Laurent) else str(c)
    return ctext + ("*" + mon if mon else "")


def format_element(a: Element) -> str:
    if not a._terms:
        return "0"
    out = ""
    for mono in a.support():
        t = _format_term(a._terms[mono], format_monomial(a.algebra, mono))
        if not out:
            out = t
        elif t.startswith("-"):
            out += " - " + t[1:]
        else:
            out += " + " + t
    return out


class ExpressionParser:
    """Recursive-descent evaluator for the element text form.

    expr  := ['+'|'-'] term (('+'|'-') term)*
    term  := power (('*'|'/') power)*
    power := atom ['^' ['-'] INT]
    atom  := INT | 'q' | NAME | '(' expr ')'
    """

    def __init__(self, tokens: list[Token], algebra: FreeAlgebra, pos: int = 0):
        self.tokens = tokens
        self.algebra = algebra
        self.i = pos

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        err = ParseError(msg)
        err.pos = tok.pos
        return err

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind not in ("punct",):
            raise self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.take()

    def parse_expr(self) -> Element:
        sign = 1
        if self.peek().text in ("+", "-") and self.peek().kind == "punct":
            sign = -1 if self.take().text == "-" else 1
        acc = self.parse_term()
        if sign < 0:
            acc = -acc
        while self.peek().kind == "punct" and self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.parse_term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def parse_term(self) -> Element:
        acc = self.parse_power()
        while self.peek().kind == "punct" and self.peek().text in ("*", "/"):
            op = self.take()
            rhs = self.parse_power()
            if op.text == "*":
                acc = multiply(acc, rhs)
            else:
                if not rhs.is_scalar() or rhs.is_zero():
                    raise self.error("division is only allowed by a nonzero scalar", op)
                acc = acc.scale(Laurent.const(1) / rhs.scalar_value())
        return acc

    def parse_power(self) -> Element:
        start = self.peek()
        base, gen_index = self.parse_atom()
        if not (self.peek().kind == "punct" and self.peek().text == "^"):
            return base
        self.take()
        neg = False
        if self.peek().kind == "punct" and self.peek().text == "-":
            self.take()
            neg = True
        tok = self.take()
        if tok.kind != "int":
            raise self.error("expected an integer exponent", tok)
        n = int(tok.text)
        if not neg:
            return base**n
        if gen_index is not None:
            try:
                partner = self.algebra.companion(gen_index)
            except InvalidGenerator:
                raise self.error(f"generator {start.text!r} is not invertible", start) from None
            return Element.generator(self.algebra, partner) ** n
        if base.is_scalar() and not base.is_zero():
            return Element.scalar(self.algebra, base.scalar_value() ** (-n))
        raise self.error("negative exponent on a non-invertible expression", start)

    def parse_atom(self) -> tuple[Element, int | None]:
        tok = self.take()
        if tok.kind == "int":
            return Element.scalar(self.algebra, int(tok.text)), None
        if tok.kind == "name":
            if tok.text == "q":
                return Element.scalar(self.algebra, Laurent.q(1)), None
            i = self.algebra.index.get(tok.text)
            if i is None:
                raise self.error(f"unknown generator {tok.text!r}", tok)
            return Element.generator(self.algebra, i), i
        if tok.kind == "punct" and tok.text == "(":
            inner = self.parse_expr()
            self.expect(")")
            return inner, None
        raise self.error(f"unexpected {tok.text or 'end of input'!r}", tok)


def parse_element(text: str, algebra: FreeAlgebra) -> Element:
    tokens = tokenize(text)
    p = ExpressionParser(tokens, algebra)
    try:
        value = p.parse_expr()
        if p.peek().kind != "end":
            raise p.error(f"unexpected {p.peek().text!r}")
    except ParseError as err:
        pos = getattr(err, "pos", None)
        if pos is not None and err.line is None:
            raise ParseError(f"{err.args[0]} (in {text!r} at offset {pos})") from None
        raise
    return value

