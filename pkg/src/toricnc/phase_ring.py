"""Exact coefficients in Q[q, q^-1] and Q(q), the torus bicharacter, and an
exact linear solver over Q(q).

Coefficients are immutable.  ``Laurent`` is the ring of Laurent polynomials;
``RationalFunction`` only ever holds a genuine fraction (a denominator that is
not a unit of the Laurent ring), so every element of Q(q) has exactly one
representation across the two classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import DimensionMismatch, Inconsistent, ValidationError

Rational = Union[int, Fraction]


class Laurent:
    """Element of Q[q, q^-1], stored as exponent -> nonzero rational."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, Rational] | None = None):
        items = []
        if terms:
            for e in sorted(terms):
                c = Fraction(terms[e])
                if c:
                    items.append((int(e), c))
        self._terms: tuple[tuple[int, Fraction], ...] = tuple(items)
        self._hash: int | None = None

    @classmethod
    def _from_items(cls, items: tuple[tuple[int, Fraction], ...]) -> "Laurent":
        obj = cls.__new__(cls)
        obj._terms = items
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c: Rational) -> "Laurent":
        c = Fraction(c)
        return cls._from_items(((0, c),) if c else ())

    @classmethod
    def monomial(cls, c: Rational, e: int) -> "Laurent":
        c = Fraction(c)
        return cls._from_items(((int(e), c),) if c else ())

    @classmethod
    def q(cls, e: int = 1) -> "Laurent":
        return cls._from_items(((int(e), Fraction(1)),))

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def items(self) -> tuple[tuple[int, Fraction], ...]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_one(self) -> bool:
        return self._terms == ((0, Fraction(1)),)

    def is_unit(self) -> bool:
        return len(self._terms) == 1

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and self._terms[0][0] == 0)

    def constant_value(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        if not self.is_constant():
            raise ValueError(f"{self} is not a rational constant")
        return self._terms[0][1]

    @property
    def min_exp(self) -> int:
        return self._terms[0][0]

    @property
    def max_exp(self) -> int:
        return self._terms[-1][0]

    def shift(self, k: int) -> "Laurent":
        if not k:
            return self
        return Laurent._from_items(tuple((e + k, c) for e, c in self._terms))

    def scale(self, c: Rational) -> "Laurent":
        c = Fraction(c)
        if not c:
            return Laurent()
        return Laurent._from_items(tuple((e, v * c) for e, v in self._terms))

    def unit_inverse(self) -> "Laurent":
        if len(self._terms) != 1:
            raise ZeroDivisionError(f"{self} is not a unit of the Laurent ring")
        e, c = self._terms[0]
        return Laurent._from_items(((-e, 1 / c),))

    def evaluate(self, x: Rational) -> Fraction:
        x = Fraction(x)
        return sum((c * x**e for e, c in self._terms), Fraction(0))

    def at_one(self) -> Fraction:
        return sum((c for _, c in self._terms), Fraction(0))

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, RationalFunction):
            return other.__radd__(self)
        other = _as_laurent(other)
        if other is NotImplemented:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        for e, c in other._terms:
            v = acc.get(e)
            if v is None:
                acc[e] = c
            else:
                v += c
                if v:
                    acc[e] = v
                else:
                    del acc[e]
        return Laurent._from_items(tuple(sorted(acc.items())))

    __radd__ = __add__

    def __neg__(self) -> "Laurent":
        return Laurent._from_items(tuple((e, -c) for e, c in self._terms))

    def __sub__(self, other):
        if isinstance(other, RationalFunction):
            return (-other).__radd__(self)
        other = _as_laurent(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            return other.__rmul__(self)
        other = _as_laurent(other)
        if other is NotImplemented:
            return NotImplemented
        if not self._terms or not other._terms:
            return Laurent()
        if len(other._terms) == 1:
            e2, c2 = other._terms[0]
            return Laurent._from_items(tuple((e + e2, c * c2) for e, c in self._terms))
        if len(self._terms) == 1:
            e1, c1 = self._terms[0]
            return Laurent._from_items(tuple((e + e1, c * c1) for e, c in other._terms))
        acc: dict[int, Fraction] = {}
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                e = e1 + e2
                acc[e] = acc.get(e, 0) + c1 * c2
        return Laurent(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RationalFunction):
            return RationalFunction.make(self * other.denominator, other.numerator)
        other = _as_laurent(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction.make(self, other)

    def __rtruediv__(self, other):
        other = _as_laurent(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction.make(other, self)

    def __pow__(self, n: int):
        if n < 0:
            return (Laurent.const(1) / self) ** (-n)
        result: Laurent = Laurent.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Laurent):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Laurent.const(other)._terms
        if isinstance(other, RationalFunction):
            return False
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            if self.is_constant():
                self._hash = hash(self.constant_value())
            else:
                self._hash = hash(self._terms)
        return self._hash

    def __repr__(self) -> str:
        return f"Laurent({self})"

    def __str__(self) -> str:
        return format_laurent(self)


def _as_laurent(x) -> Laurent:
    if isinstance(x, Laurent):
        return x
    if isinstance(x, (int, Fraction)):
        return Laurent.const(x)
    return NotImplemented


def format_laurent(a: Laurent) -> str:
    if not a._terms:
        return "0"
    parts = []
    for e, c in a._terms:
        parts.append(_format_term(c, e))
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def _format_term(c: Fraction, e: int) -> str:
    qpart = "" if e == 0 else ("q" if e == 1 else f"q^{e}")
    if not qpart:
        return str(c)
    if c == 1:
        return qpart
    if c == -1:
        return "-" + qpart
    return f"{c}*{qpart}"


# univariate polynomial helpers over Q, coefficient lists in ascending order ---

def _to_poly(a: Laurent) -> tuple[int, list[Fraction]]:
    lo = a.min_exp
    coeffs = [Fraction(0)] * (a.max_exp - lo + 1)
    for e, c in a._terms:
        coeffs[e - lo] = c
    return lo, coeffs


def _from_poly(coeffs: Sequence[Fraction], shift: int) -> Laurent:
    return Laurent._from_items(tuple((i + shift, c) for i, c in enumerate(coeffs) if c))


def _trim(p: list[Fraction]) -> list[Fraction]:
    while p and not p[-1]:
        p.pop()
    return p


def _pdivmod(a: list[Fraction], b: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    a = list(a)
    if len(a) < len(b):
        return [], _trim(a)
    quot = [Fraction(0)] * (len(a) - len(b) + 1)
    lead = b[-1]
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] / lead
        quot[i] = c
        if c:
            for j, bj in enumerate(b):
                a[i + j] -= c * bj
    return _trim(quot), _trim(a[: len(b) - 1])


def _pgcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    lead = a[-1]
    return [c / lead for c in a]


class RationalFunction:
    """Element of Q(q) whose reduced denominator is not a Laurent unit.

    Build through ``RationalFunction.make`` (or Laurent division), which
    demotes to ``Laurent`` whenever the denominator cancels.
    """

    __slots__ = ("numerator", "denominator", "_hash")

    def __init__(self, numerator: Laurent, denominator: Laurent):
        self.numerator = numerator
        self.denominator = denominator
        self._hash: int | None = None

    @staticmethod
    def make(num, den) -> "Laurent | RationalFunction":
        num = as_coefficient(num)
        den = as_coefficient(den)
        if isinstance(num, RationalFunction) or isinstance(den, RationalFunction):
            return num / den
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return Laurent()
        if den.is_unit():
            return num * den.unit_inverse()
        sn, p = _to_poly(num)
        sd, d = _to_poly(den)
        g = _pgcd(p, d)
        if len(g) > 1:
            p, _ = _pdivmod(p, g)
            d, _ = _pdivmod(d, g)
        lead = d[-1]
        p = [c / lead for c in p]
        d = [c / lead for c in d]
        n_l = _from_poly(p, sn - sd)
        if len(d) == 1:
            return n_l
        # d[0] != 0 because gcd removal keeps the constant term of a shifted polynomial
        return RationalFunction(n_l, _from_poly(d, 0))

    def _pair(self):
        return self.numerator, self.denominator

    def is_zero(self) -> bool:
        return False

    def __bool__(self) -> bool:
        return True

    def is_one(self) -> bool:
        return False

    def is_unit(self) -> bool:
        return False

    def is_constant(self) -> bool:
        return False

    def shift(self, k: int) -> "RationalFunction":
        if not k:
            return self
        return RationalFunction(self.numerator.shift(k), self.denominator)

    def scale(self, c: Rational) -> "Laurent | RationalFunction":
        if not c:
            return Laurent()
        return RationalFunction(self.numerator.scale(c), self.denominator)

    def at_one(self) -> Fraction:
        d = self.denominator.at_one()
        if not d:
            raise ZeroDivisionError(f"{self} has a pole at q = 1")
        return self.numerator.at_one() / d

    def evaluate(self, x: Rational) -> Fraction:
        return self.numerator.evaluate(x) / self.denominator.evaluate(x)

    def __add__(self, other):
        other = as_coefficient(other)
        n2, d2 = _pair_of(other)
        return RationalFunction.make(
            self.numerator * d2 + n2 * self.denominator, self.denominator * d2
        )

    __radd__ = __add__

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-as_coefficient(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = as_coefficient(other)
        n2, d2 = _pair_of(other)
        return RationalFunction.make(self.numerator * n2, self.denominator * d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_coefficient(other)
        n2, d2 = _pair_of(other)
        return RationalFunction.make(self.numerator * d2, self.denominator * n2)

    def __rtruediv__(self, other):
        other = as_coefficient(other)
        n2, d2 = _pair_of(other)
        return RationalFunction.make(n2 * self.denominator, d2 * self.numerator)

    def __pow__(self, n: int):
        if n < 0:
            return RationalFunction.make(self.denominator**-n, self.numerator**-n)
        return RationalFunction.make(self.numerator**n, self.denominator**n)

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalFunction):
            return self._pair() == other._pair()
        if isinstance(other, (Laurent, int, Fraction)):
            return False
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._pair())
        return self._hash

    def __repr__(self) -> str:
        return f"RationalFunction({self})"

    def __str__(self) -> str:
        return f"({self.numerator})/({self.denominator})"


Coefficient = Union[Laurent, RationalFunction]

_ONE = Laurent.const(1)


def _pair_of(x: Coefficient) -> tuple[Laurent, Laurent]:
    if isinstance(x, RationalFunction):
        return x.numerator, x.denominator
    return x, _ONE


def as_coefficient(x) -> Coefficient:
    if isinstance(x, (Laurent, RationalFunction)):
        return x
    if isinstance(x, (int, Fraction)):
        return Laurent.const(x)
    raise TypeError(f"cannot use {x!r} as a coefficient")


def is_zero(x) -> bool:
    if isinstance(x, (Laurent, RationalFunction)):
        return x.is_zero()
    return not x


def specialize_at_one(x) -> Fraction:
    return as_coefficient(x).at_one()


def format_coefficient(x: Coefficient) -> str:
    return str(x)


# deformation data -------------------------------------------------------------

DegreeVector = tuple[int, ...]


@dataclass(frozen=True)
class DeformationData:
    rank: int
    theta: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        theta = tuple(tuple(int(v) for v in row) for row in self.theta)
        object.__setattr__(self, "theta", theta)
        if self.rank < 1:
            raise ValidationError("torus rank must be positive")
        if len(theta) != self.rank or any(len(row) != self.rank for row in theta):
            raise DimensionMismatch(f"theta must be {self.rank}x{self.rank}")
        for i in range(self.rank):
            for j in range(self.rank):
                if theta[i][j] != -theta[j][i]:
                    raise ValidationError(f"theta is not antisymmetric at ({i},{j})")

    @classmethod
    def from_matrix(cls, theta: Sequence[Sequence[int]]) -> "DeformationData":
        return cls(len(theta), tuple(tuple(r) for r in theta))

    @classmethod
    def commutative(cls, rank: int) -> "DeformationData":
        return cls(rank, tuple((0,) * rank for _ in range(rank)))

    def zero(self) -> DegreeVector:
        return (0,) * self.rank

    def check_degree(self, m: Sequence[int]) -> DegreeVector:
        if len(m) != self.rank:
            raise DimensionMismatch(f"degree {tuple(m)} has length {len(m)}, expected {self.rank}")
        return tuple(int(v) for v in m)

    def pairing(self, m: Sequence[int], m2: Sequence[int]) -> int:
        """The integer exponent m^T theta m2."""
        self.check_degree(m)
        self.check_degree(m2)
        th = self.theta
        return sum(m[j] * th[j][k] * m2[k] for j in range(self.rank) if m[j] for k in range(self.rank))


def chi(d: DeformationData, m: Sequence[int], m2: Sequence[int]) -> Laurent:
    return Laurent.q(d.pairing(m, m2))


def coeff_add(a, b) -> Coefficient:
    return as_coefficient(a) + as_coefficient(b)


def coeff_mul(a, b) -> Coefficient:
    return as_coefficient(a) * as_coefficient(b)


def coeff_neg(a) -> Coefficient:
    return -as_coefficient(a)


# linear algebra over Q(q) ------------------------------------------------------

@dataclass(frozen=True)
class LinearSolution:
    particular: tuple[Coefficient, ...]
    kernel: tuple[tuple[Coefficient, ...], ...]


def _all_rational(rows: Sequence[Sequence[Coefficient]]) -> bool:
    return all(isinstance(c, Laurent) and c.is_constant() for row in rows for c in row)


def _rref(rows: list[list], ncols: int, zero, one) -> list[int]:
    """In-place reduced row echelon form over the first ``ncols`` columns.

    Pivot rule: columns left to right, first row at or below the current one
    with a nonzero entry.
    """
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if not is_zero(rows[i][c]):
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        prow = rows[r]
        inv = one / prow[c]
        if prow[c] != one:
            rows[r] = prow = [x * inv if not is_zero(x) else x for x in prow]
        for i in range(nrows):
            if i != r:
                f = rows[i][c]
                if not is_zero(f):
                    row = rows[i]
                    rows[i] = [x - f * p if not is_zero(p) else x for x, p in zip(row, prow)]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return pivots


def linsolve(
    rows: Sequence[Sequence],
    rhs: Sequence | None = None,
    ncols: int | None = None,
) -> LinearSolution:
    """Solve ``rows @ x = rhs`` exactly.

    Returns a particular solution (free variables set to zero) and a kernel
    basis whose vectors have first nonzero entry 1.  Raises ``Inconsistent``
    when no solution exists.
    """
    nrows = len(rows)
    if ncols is None:
        if not nrows:
            raise ValueError("ncols is required for an empty matrix")
        ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise DimensionMismatch("matrix rows have inconsistent lengths")
    if rhs is None:
        rhs = [0] * nrows
    if len(rhs) != nrows:
        raise DimensionMismatch("right-hand side length does not match the row count")
    aug = [[as_coefficient(x) for x in row] + [as_coefficient(b)] for row, b in zip(rows, rhs)]

    if _all_rational(aug):
        work = [[x.constant_value() for x in row] for row in aug]
        zero, one = Fraction(0), Fraction(1)
        lift = Laurent.const
    else:
        work = aug
        zero, one = Laurent(), Laurent.const(1)
        lift = as_coefficient

    pivots = _rref(work, ncols, zero, one)
    for row in work[len(pivots):]:
        if not is_zero(row[ncols]):
            raise Inconsistent(f"right-hand side is outside the column space (residue {lift(row[ncols])})")

    particular = [zero] * ncols
    for r, c in enumerate(pivots):
        particular[c] = work[r][ncols]

    pivot_set = set(pivots)
    kernel = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        vec = [zero] * ncols
        vec[f] = one
        for r, c in enumerate(pivots):
            vec[c] = -work[r][f]
        lead = next(x for x in vec if not is_zero(x))
        if lead != one:
            inv = one / lead
            vec = [x * inv for x in vec]
        kernel.append(tuple(lift(x) for x in vec))
    return LinearSolution(tuple(lift(x) for x in particular), tuple(kernel))


def matrix_rank(rows: Sequence[Sequence], ncols: int | None = None) -> int:
    if not rows:
        return 0
    if ncols is None:
        ncols = len(rows[0])
    work = [[as_coefficient(x) for x in row] for row in rows]
    if _all_rational(work):
        work = [[x.constant_value() for x in row] for row in work]
        return len(_rref(work, ncols, Fraction(0), Fraction(1)))
    return len(_rref(work, ncols, Laurent(), Laurent.const(1)))


def mat_vec(rows: Sequence[Sequence], vec: Sequence) -> list[Coefficient]:
    out = []
    for row in rows:
        acc: Coefficient = Laurent()
        for a, x in zip(row, vec):
            a, x = as_coefficient(a), as_coefficient(x)
            if a and x:
                acc = acc + a * x
        out.append(acc)
    return out


def all_coefficients(values: Iterable) -> list[Coefficient]:
    return [as_coefficient(v) for v in values]
