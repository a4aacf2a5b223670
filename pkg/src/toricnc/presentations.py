"""Finitely presented algebras, ideal reduction, and categorical constructions.

Relations are torus-homogeneous, so each relation quasi-commutes past every
monomial and the two-sided ideal it generates equals the left ideal.  Reduction
therefore uses left Gröbner bases: Buchberger's procedure with every monomial
product routed through the phase rule of the free algebra.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

from .comodule_algebra import (
    INHOMOGENEOUS,
    Element,
    FreeAlgebra,
    Generator,
    Monomial,
    divides,
    embed,
    format_element,
    h_degree,
    neg_degree,
    order_key,
    parse_element,
)
from .errors import (
    AlgebraMismatch,
    DeformationMismatch,
    DegreeMismatch,
    InhomogeneousRelation,
    MissingInverseRelation,
    MorphismSourceMismatch,
    NotCoinvariant,
    ValidationError,
    ZeroElement,
)
from .phase_ring import Coefficient, DeformationData, DegreeVector, Laurent


@dataclass(frozen=True, eq=False)
class AlgebraPresentation:
    """F_{m_1..m_N} / (f_1, ..., f_K).

    ``name`` is a display label only and does not take part in equality.
    """

    free: FreeAlgebra
    relations: tuple[Element, ...] = ()
    name: str = ""
    declared_degrees: tuple[DegreeVector, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        rels = tuple(self.relations)
        for k, r in enumerate(rels):
            if not isinstance(r, Element) or r.algebra != self.free:
                raise AlgebraMismatch(f"relation {k} does not live in the free algebra of the presentation")
        object.__setattr__(self, "relations", rels)
        if self.declared_degrees is not None:
            object.__setattr__(self, "declared_degrees", tuple(tuple(d) for d in self.declared_degrees))

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, AlgebraPresentation):
            return NotImplemented
        return self.free == other.free and self.relations == other.relations

    def __hash__(self) -> int:
        return self._hash_value

    @cached_property
    def _hash_value(self) -> int:
        return hash((self.free, self.relations))

    @property
    def deformation(self) -> DeformationData:
        return self.free.deformation

    @property
    def generators(self) -> tuple[Generator, ...]:
        return self.free.generators

    @property
    def ngens(self) -> int:
        return self.free.ngens

    @property
    def relation_degrees(self) -> tuple:
        if self.declared_degrees is not None:
            return self.declared_degrees
        return tuple(h_degree(r) for r in self.relations)

    def element(self, text: str) -> Element:
        return parse_element(text, self.free)

    def gen(self, g: int | str) -> Element:
        return Element.generator(self.free, g)

    def one(self) -> Element:
        return Element.one(self.free)

    def zero(self) -> Element:
        return Element.zero(self.free)

    def scalar(self, c) -> Element:
        return Element.scalar(self.free, c)

    def reduce(self, a: Element) -> Element:
        return reduce(a, groebner(self))

    def with_name(self, name: str) -> "AlgebraPresentation":
        return AlgebraPresentation(self.free, self.relations, name, self.declared_degrees)

    def __str__(self) -> str:
        gens = ", ".join(f"{g.name}:{g.degree}" for g in self.generators)
        rels = ", ".join(format_element(r) for r in self.relations)
        return f"free({gens}) / {{{rels}}}"


def make_presentation(
    deformation: DeformationData,
    generators: Sequence[Generator | tuple],
    relations: Iterable[Element | str] = (),
    name: str = "",
) -> AlgebraPresentation:
    gens = tuple(g if isinstance(g, Generator) else Generator(*g) for g in generators)
    free = FreeAlgebra(deformation, gens)
    rels = tuple(r if isinstance(r, Element) else parse_element(r, free) for r in relations)
    return AlgebraPresentation(free, rels, name)


def trivial_algebra(deformation: DeformationData) -> AlgebraPresentation:
    """The ground field K: no generators, no relations."""
    return AlgebraPresentation(FreeAlgebra(deformation, ()), (), "K")


def validate_presentation(p: AlgebraPresentation) -> bool:
    degrees = []
    for k, r in enumerate(p.relations):
        d = h_degree(r)
        if d is INHOMOGENEOUS:
            raise InhomogeneousRelation(k, f"relation {k} ({format_element(r)}) is not homogeneous")
        degrees.append(d)
    if p.declared_degrees is not None:
        if len(p.declared_degrees) != len(p.relations):
            raise DegreeMismatch("number of declared relation degrees differs from the number of relations")
        for k, (d, r) in enumerate(zip(p.declared_degrees, p.relations)):
            p.deformation.check_degree(d)
            if r and tuple(d) != degrees[k]:
                raise DegreeMismatch(f"relation {k} has degree {degrees[k]}, declared {tuple(d)}")
    for i, g in enumerate(p.generators):
        if not g.invertible:
            continue
        if i + 1 >= p.ngens:
            raise MissingInverseRelation(f"invertible generator {g.name!r} has no inverse partner")
        partner = p.generators[i + 1]
        if partner.degree != neg_degree(g.degree):
            raise DegreeMismatch(f"inverse partner {partner.name!r} of {g.name!r} must have degree {neg_degree(g.degree)}")
        check = p.gen(i + 1) * p.gen(i) - 1
        if p.reduce(check):
            raise MissingInverseRelation(f"relation {partner.name}*{g.name} - 1 is not in the ideal")
    return True


# Gröbner bases ------------------------------------------------------------------


@dataclass(frozen=True)
class GroebnerBasis:
    free: FreeAlgebra
    basis: tuple[Element, ...]
    order: str = "degrevlex"
    complete: bool = True

    @cached_property
    def leading_monomials(self) -> tuple[Monomial, ...]:
        return tuple(g.leading_monomial() for g in self.basis)

    @cached_property
    def _rules(self) -> tuple[tuple[Monomial, tuple], ...]:
        rules = []
        for g, lm in zip(self.basis, self.leading_monomials):
            tail = tuple((m, c) for m, c in g.items() if m != lm)
            rules.append((lm, tail))
        return tuple(rules)


def _heap_key(mono: Monomial) -> tuple:
    # min-heap key whose order is the reverse of degrevlex
    return (-sum(mono), tuple(reversed(mono)))


def _reduce_terms(free: FreeAlgebra, terms: dict, rules) -> dict:
    work = dict(terms)
    heap = [(_heap_key(m), m) for m in work]
    heapq.heapify(heap)
    out: dict[Monomial, Coefficient] = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = work.pop(m, None)
        if c is None:
            continue
        for lm, tail in rules:
            if divides(lm, m):
                u = tuple(x - y for x, y in zip(m, lm))
                factor = c.shift(-free.phase_exponent(u, lm))
                for t, gc in tail:
                    nm = tuple(x + y for x, y in zip(u, t))
                    delta = -(factor * gc).shift(free.phase_exponent(u, t))
                    prev = work.get(nm)
                    if prev is None:
                        work[nm] = delta
                        heapq.heappush(heap, (_heap_key(nm), nm))
                    else:
                        s = prev + delta
                        if s:
                            work[nm] = s
                        else:
                            del work[nm]
                break
        else:
            out[m] = c
    return out


def _rules_of(elements: Sequence[Element]):
    rules = []
    for g in elements:
        lm = g.leading_monomial()
        tail = tuple((m, c) for m, c in g.items() if m != lm)
        rules.append((lm, tail))
    return rules


def _monic(f: Element) -> Element:
    lc = f.leading_coefficient()
    if lc.is_one():
        return f
    return f.scale(Laurent.const(1) / lc)


def _times_monomial(u: Monomial, f: Element) -> Element:
    free = f.algebra
    return Element._raw(
        free,
        {tuple(x + y for x, y in zip(u, m)): c.shift(free.phase_exponent(u, m)) for m, c in f.items()},
    )


def _spoly(f: Element, g: Element) -> Element:
    free = f.algebra
    lf, lg = f.leading_monomial(), g.leading_monomial()
    lcm = tuple(max(a, b) for a, b in zip(lf, lg))
    u = tuple(a - b for a, b in zip(lcm, lf))
    v = tuple(a - b for a, b in zip(lcm, lg))
    left = _times_monomial(u, f).scale(Laurent.q(-free.phase_exponent(u, lf)))
    right = _times_monomial(v, g).scale(Laurent.q(-free.phase_exponent(v, lg)))
    return left - right


def _reduce_by(f: Element, elements: Sequence[Element]) -> Element:
    if not elements:
        return f
    return Element._raw(f.algebra, _reduce_terms(f.algebra, f._terms, _rules_of(elements)))


def _buchberger(free: FreeAlgebra, relations: tuple[Element, ...]) -> tuple[Element, ...]:
    basis: list[Element] = []
    for f in relations:
        r = _reduce_by(f, basis)
        if r:
            basis.append(_monic(r))
    pairs = [(i, j) for j in range(len(basis)) for i in range(j)]
    head = 0
    while head < len(pairs):
        i, j = pairs[head]
        head += 1
        r = _reduce_by(_spoly(basis[i], basis[j]), basis)
        if r:
            basis.append(_monic(r))
            n = len(basis) - 1
            pairs.extend((k, n) for k in range(n))
    # drop elements whose leading monomial is divisible by an earlier-kept one
    lms = [g.leading_monomial() for g in basis]
    keep = []
    for idx, g in enumerate(basis):
        redundant = False
        for jdx, h in enumerate(basis):
            if jdx == idx:
                continue
            if divides(lms[jdx], lms[idx]) and (lms[jdx] != lms[idx] or jdx < idx):
                redundant = True
                break
        if not redundant:
            keep.append(g)
    reduced = []
    for idx, g in enumerate(keep):
        others = keep[:idx] + keep[idx + 1:]
        reduced.append(_monic(_reduce_by(g, others)))
    reduced.sort(key=lambda g: order_key(g.leading_monomial()))
    return tuple(reduced)


@lru_cache(maxsize=256)
def _groebner_cached(free: FreeAlgebra, relations: tuple[Element, ...]) -> GroebnerBasis:
    return GroebnerBasis(free, _buchberger(free, relations))


def groebner(p: AlgebraPresentation) -> GroebnerBasis:
    return _groebner_cached(p.free, p.relations)


def reduce(a: Element, g: GroebnerBasis | AlgebraPresentation) -> Element:
    """Normal form of ``a`` modulo the ideal behind ``g``."""
    if isinstance(g, AlgebraPresentation):
        g = groebner(g)
    if a.algebra != g.free:
        raise AlgebraMismatch("element does not belong to the ambient free algebra of the basis")
    if not g.basis or not a:
        return a
    return Element._raw(a.algebra, _reduce_terms(a.algebra, a._terms, g._rules))


def _monomials_up_to(n: int, cap: int, blocked: Sequence[Monomial]) -> list[Monomial]:
    out: list[Monomial] = []
    current = [0] * n

    def rec(i: int, budget: int) -> None:
        if i == n:
            out.append(tuple(current))
            return
        for e in range(budget + 1):
            current[i] = e
            if e and any(divides(b, current) for b in blocked if _prefix_only(b, i)):
                break
            rec(i + 1, budget - e)
        current[i] = 0

    rec(0, cap)
    return out


def _prefix_only(b: Monomial, i: int) -> bool:
    # blocked monomial b can be tested once positions after i are still zero
    return not any(b[i + 1:])


@lru_cache(maxsize=256)
def _standard_by_degree(p: AlgebraPresentation, cap: int) -> dict[DegreeVector, tuple[Monomial, ...]]:
    lms = groebner(p).leading_monomials
    by_degree: dict[DegreeVector, list[Monomial]] = {}
    for mono in _monomials_up_to(p.ngens, cap, lms):
        by_degree.setdefault(p.free.degree_of(mono), []).append(mono)
    return {d: tuple(sorted(ms, key=order_key)) for d, ms in sorted(by_degree.items())}


def standard_monomials(p: AlgebraPresentation, hdeg: Sequence[int], total_cap: int) -> list[Monomial]:
    """Monomials of degree ``hdeg`` and total degree at most ``total_cap`` that
    no leading monomial divides, smallest first."""
    hdeg = p.deformation.check_degree(hdeg)
    if total_cap < 0:
        return []
    return list(_standard_by_degree(p, total_cap).get(hdeg, ()))


def standard_basis(p: AlgebraPresentation, total_cap: int) -> dict[DegreeVector, tuple[Monomial, ...]]:
    """All standard monomials up to ``total_cap``, grouped by degree."""
    if total_cap < 0:
        return {}
    return dict(_standard_by_degree(p, total_cap))


# constructions ------------------------------------------------------------------


def fresh_name(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    k = 2
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


@lru_cache(maxsize=256)
def _coproduct_cached(a: AlgebraPresentation, b: AlgebraPresentation):
    from .morphisms import AlgebraMorphism

    if a.deformation != b.deformation:
        raise DeformationMismatch("coproduct factors use different deformations")
    taken = set(a.free.names)
    gens = list(a.generators)
    for g in b.generators:
        name = fresh_name(g.name, taken)
        taken.add(name)
        gens.append(Generator(name, g.degree, g.invertible))
    free = FreeAlgebra(a.deformation, tuple(gens))
    rels = tuple(embed(r, free, 0) for r in a.relations) + tuple(embed(r, free, a.ngens) for r in b.relations)
    label = f"({a.name or 'A'} + {b.name or 'B'})"
    p = AlgebraPresentation(free, rels, label)
    iota1 = AlgebraMorphism(a, p, tuple(Element.generator(free, i) for i in range(a.ngens)))
    iota2 = AlgebraMorphism(b, p, tuple(Element.generator(free, a.ngens + i) for i in range(b.ngens)))
    return p, iota1, iota2


def coproduct(a: AlgebraPresentation, b: AlgebraPresentation):
    """A ⊔ B with its two inclusions.  Clashing names in ``b`` get a numeric suffix."""
    return _coproduct_cached(a, b)


def pushout(c: AlgebraPresentation, a: AlgebraPresentation, b: AlgebraPresentation, kappa, zeta):
    """A ⊔_C B: the coproduct modulo kappa(x) ⊗ 1 - 1 ⊗ zeta(x) for generators x of C."""
    from .morphisms import AlgebraMorphism

    if kappa.source != c or zeta.source != c:
        raise MorphismSourceMismatch("both morphisms must start at the shared algebra")
    if kappa.target != a or zeta.target != b:
        raise MorphismSourceMismatch("morphism targets do not match the pushout factors")
    cp, iota1, iota2 = coproduct(a, b)
    extra = []
    for ka, zb in zip(kappa.images, zeta.images):
        rel = embed(ka, cp.free, 0) - embed(zb, cp.free, a.ngens)
        if rel:
            extra.append(rel)
    p = AlgebraPresentation(cp.free, cp.relations + tuple(extra), f"pushout({a.name}, {b.name})")
    leg_a = AlgebraMorphism(a, p, iota1.images)
    leg_b = AlgebraMorphism(b, p, iota2.images)
    return p, leg_a, leg_b


def localize(a: AlgebraPresentation, s: Element, name: str = "y"):
    """A[s^-1] = A ⊔ F_0 / (s y - 1) with the canonical map A -> A[s^-1]."""
    from .morphisms import AlgebraMorphism

    if s.algebra != a.free:
        raise AlgebraMismatch("element does not belong to the algebra being localized")
    d = h_degree(s)
    if d is INHOMOGENEOUS or (s and d != a.deformation.zero()):
        raise NotCoinvariant(f"{format_element(s)} is not coinvariant")
    if not a.reduce(s):
        raise ZeroElement(f"{format_element(s)} reduces to zero")
    gname = fresh_name(name, set(a.free.names))
    free = FreeAlgebra(a.deformation, a.generators + (Generator(gname, a.deformation.zero()),))
    y = Element.generator(free, a.ngens)
    rels = tuple(embed(r, free, 0) for r in a.relations) + (embed(s, free, 0) * y - 1,)
    p = AlgebraPresentation(free, rels, f"{a.name or 'A'}[s^-1]")
    ell = AlgebraMorphism(a, p, tuple(Element.generator(free, i) for i in range(a.ngens)))
    return p, ell


def localize_many(a: AlgebraPresentation, elements: Sequence[Element], name: str = "y"):
    """Iterated localization in the given order; returns the final algebra and the composite map."""
    from .morphisms import compose, identity_morphism

    current, total = a, identity_morphism(a)
    for s in elements:
        moved = total.apply(s)
        current, ell = localize(current, moved, name)
        total = compose(ell, total)
    return current, total


# serialization ------------------------------------------------------------------


def presentation_to_json(p: AlgebraPresentation) -> dict:
    return {
        "rank": p.deformation.rank,
        "theta": [list(row) for row in p.deformation.theta],
        "generators": [
            {"name": g.name, "degree": list(g.degree), "invertible": g.invertible} for g in p.generators
        ],
        "relations": [format_element(r) for r in p.relations],
    }


def presentation_from_json(doc: dict, name: str = "") -> AlgebraPresentation:
    try:
        d = DeformationData(int(doc["rank"]), tuple(tuple(r) for r in doc["theta"]))
        gens = tuple(Generator(g["name"], tuple(g["degree"]), bool(g.get("invertible", False))) for g in doc["generators"])
        relations = doc.get("relations", [])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed presentation document: {exc}") from None
    return make_presentation(d, gens, relations, name)
