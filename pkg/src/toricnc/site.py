"""Zariski covering families and cap-bounded sheaf-condition checks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .comodule_algebra import INHOMOGENEOUS, Element, format_element, graded_decompose, h_degree, parse_element
from .errors import (
    AlgebraMismatch,
    AmbiguousAtCap,
    IndexOutOfRange,
    Inconsistent,
    NoSolutionAtCap,
    NotCoinvariant,
    NotMatching,
    PartitionOfUnityFails,
    ValidationError,
)
from .morphisms import AlgebraMorphism, apply, validate_morphism
from .phase_ring import linsolve, matrix_rank
from .presentations import AlgebraPresentation, localize, reduce, standard_monomials


@dataclass(frozen=True, eq=False)
class ZariskiCover:
    base: AlgebraPresentation
    elements: tuple[Element, ...]
    witnesses: tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "witnesses", tuple(self.witnesses))
        for e in self.elements + self.witnesses:
            if e.algebra != self.base.free:
                raise AlgebraMismatch("cover data must live in the base algebra")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZariskiCover):
            return NotImplemented
        return (
            self.base == other.base
            and tuple(map(self.base.reduce, self.elements)) == tuple(map(other.base.reduce, other.elements))
            and tuple(map(self.base.reduce, self.witnesses)) == tuple(map(other.base.reduce, other.witnesses))
        )

    def __hash__(self) -> int:
        return hash((self.base, len(self.elements)))

    def __len__(self) -> int:
        return len(self.elements)

    @cached_property
    def localizations(self) -> tuple[tuple[AlgebraPresentation, AlgebraMorphism], ...]:
        return tuple(localize(self.base, s) for s in self.elements)

    @cached_property
    def _intersections(self) -> dict:
        return {}


def make_cover(base: AlgebraPresentation, elements: Sequence[Element | str], witnesses: Sequence[Element | str]) -> ZariskiCover:
    def el(x):
        return x if isinstance(x, Element) else parse_element(x, base.free)

    return ZariskiCover(base, tuple(map(el, elements)), tuple(map(el, witnesses)))


def validate_cover(c: ZariskiCover) -> bool:
    if not c.elements:
        raise ValidationError("a covering family must be nonempty")
    if len(c.witnesses) != len(c.elements):
        raise ValidationError("one witness is required per covering element")
    zero = c.base.deformation.zero()
    for i, s in enumerate(c.elements):
        d = h_degree(s)
        if d is INHOMOGENEOUS or (s and d != zero):
            raise NotCoinvariant(f"covering element {i} ({format_element(s)}) is not coinvariant", index=i)
    total = Element.zero(c.base.free)
    for a, s in zip(c.witnesses, c.elements):
        total = total + a * s
    residue = c.base.reduce(total - 1)
    if residue:
        raise PartitionOfUnityFails(format_element(residue))
    return True


def _check_index(c: ZariskiCover, i: int) -> None:
    if not 0 <= i < len(c.elements):
        raise IndexOutOfRange(f"cover index {i} outside 0..{len(c.elements) - 1}")


def intersection(c: ZariskiCover, i: int, j: int):
    """A[s_i^-1, s_j^-1] with the restrictions from A[s_i^-1] and A[s_j^-1].

    Returns ``(presentation, f_from_i, f_from_j)``.
    """
    _check_index(c, i)
    _check_index(c, j)
    cache = c._intersections
    if (i, j) in cache:
        return cache[(i, j)]
    ai, ell_i = c.localizations[i]
    aj, ell_j = c.localizations[j]
    aij, ell_ij = localize(ai, apply(ell_i, c.elements[j]))
    from_i = ell_ij
    # A[s_j^-1] -> A_ij: base generators to themselves, the inverse of s_j to the last generator
    n = c.base.ngens
    imgs = tuple(aij.gen(k) for k in range(n)) + (aij.gen(aij.ngens - 1),)
    from_j = AlgebraMorphism(aj, aij, imgs)
    cache[(i, j)] = (aij, from_i, from_j)
    return cache[(i, j)]


def restrict(c: ZariskiCover, b: Element) -> list[Element]:
    """Images of a base element in every chart."""
    return [apply(ell, b) for _, ell in c.localizations]


def pullback_cover(c: ZariskiCover, g: AlgebraMorphism) -> ZariskiCover:
    if g.source != c.base:
        raise AlgebraMismatch("morphism does not start at the cover's base")
    validate_morphism(g)
    new = ZariskiCover(g.target, tuple(apply(g, s) for s in c.elements), tuple(apply(g, a) for a in c.witnesses))
    validate_cover(new)
    return new


def check_matching_family(c: ZariskiCover, parts: Sequence[Element]) -> bool:
    if len(parts) != len(c.elements):
        raise ValidationError("one part is required per chart")
    for i, (p, (ai, _)) in enumerate(zip(parts, c.localizations)):
        if p.algebra != ai.free:
            raise AlgebraMismatch(f"part {i} does not live in chart {i}")
    n = len(parts)
    for i in range(n):
        for j in range(n):
            _, from_i, from_j = intersection(c, i, j)
            if apply(from_i, parts[i]) != apply(from_j, parts[j]):
                return False
    return True


def _restriction_columns(c: ZariskiCover, monos) -> list[list[dict]]:
    cols = []
    for mono in monos:
        b = Element.monomial(c.base.free, mono)
        cols.append([img._terms for img in restrict(c, b)])
    return cols


def restriction_matrix(c: ZariskiCover, hdeg, total_cap: int):
    """Stacked restriction map on the degree-``hdeg`` standard span, as (rows, row labels, columns)."""
    monos = standard_monomials(c.base, hdeg, total_cap)
    cols = _restriction_columns(c, monos)
    labels = sorted({(k, m) for col in cols for k, t in enumerate(col) for m in t})
    rows = [[col[k].get(m, 0) for col in cols] for k, m in labels]
    return rows, labels, monos


def separation_defect(c: ZariskiCover, total_cap: int) -> dict:
    """Per degree, the kernel dimension of the stacked restriction map (all zero means injective)."""
    from .presentations import standard_basis

    out = {}
    for hdeg, monos in standard_basis(c.base, total_cap).items():
        rows, _, monos = restriction_matrix(c, hdeg, total_cap)
        out[hdeg] = len(monos) - (matrix_rank(rows, len(monos)) if rows else 0)
    return out


def glue(c: ZariskiCover, parts: Sequence[Element], total_cap: int) -> Element:
    """The base element restricting to ``parts``, searched within the cap."""
    if not check_matching_family(c, parts):
        raise NotMatching("parts do not agree on overlaps")
    pieces = [graded_decompose(reduce(p, ai)) for p, (ai, _) in zip(parts, c.localizations)]
    degrees = sorted({d for piece in pieces for d in piece})
    result = Element.zero(c.base.free)
    for hdeg in degrees:
        rows, labels, monos = restriction_matrix(c, hdeg, total_cap)
        targets = {}
        for k, piece in enumerate(pieces):
            if hdeg in piece:
                for m, coef in piece[hdeg].items():
                    targets[(k, m)] = coef
        extra = sorted(set(targets) - set(labels))
        if extra:
            raise NoSolutionAtCap(f"degree {hdeg}: parts use monomials outside the span of the cap {total_cap}")
        rhs = [targets.get(lab, 0) for lab in labels]
        try:
            sol = linsolve(rows, rhs, ncols=len(monos))
        except Inconsistent:
            raise NoSolutionAtCap(f"degree {hdeg}: no base element up to total degree {total_cap} restricts to the parts") from None
        if sol.kernel:
            raise AmbiguousAtCap(f"degree {hdeg}: restriction has a {len(sol.kernel)}-dimensional kernel")
        for mono, v in zip(monos, sol.particular):
            if v:
                result = result + Element.monomial(c.base.free, mono, v)
    return result


def cover_to_json(c: ZariskiCover, base_ref=None) -> dict:
    from .presentations import presentation_to_json

    return {
        "base": base_ref if base_ref is not None else presentation_to_json(c.base),
        "elements": [format_element(s) for s in c.elements],
        "witnesses": [format_element(a) for a in c.witnesses],
    }


def cover_from_json(doc: dict, resolve=None) -> ZariskiCover:
    from .presentations import presentation_from_json

    ref = doc["base"]
    base = presentation_from_json(ref) if isinstance(ref, dict) else resolve(ref)
    return make_cover(base, doc["elements"], doc["witnesses"])
