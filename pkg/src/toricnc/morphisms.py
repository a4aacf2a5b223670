"""Equivariant algebra morphisms: validation, evaluation, composition, and
cap-bounded parameterizations of Hom-sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .comodule_algebra import (
    INHOMOGENEOUS,
    Element,
    Monomial,
    format_element,
    format_monomial,
    h_degree,
    parse_element,
)
from .errors import (
    AlgebraMismatch,
    CompositionMismatch,
    DegreeViolation,
    RelationViolation,
    ValidationError,
)
from .phase_ring import Laurent
from .presentations import (
    AlgebraPresentation,
    groebner,
    presentation_from_json,
    presentation_to_json,
    reduce,
    standard_monomials,
)


@dataclass(frozen=True, eq=False)
class AlgebraMorphism:
    """Algebra map determined by the images of the source generators.

    Images are stored reduced in the target, so equality of morphisms is
    equality of reduced generator images.
    """

    source: AlgebraPresentation
    target: AlgebraPresentation
    images: tuple[Element, ...]

    def __post_init__(self):
        imgs = tuple(self.images)
        if len(imgs) != self.source.ngens:
            raise ValidationError(f"expected {self.source.ngens} images, got {len(imgs)}")
        for i, im in enumerate(imgs):
            if not isinstance(im, Element) or im.algebra != self.target.free:
                raise AlgebraMismatch(f"image {i} does not live in the target algebra")
        object.__setattr__(self, "images", tuple(reduce(im, groebner(self.target)) for im in imgs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraMorphism):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.images == other.images

    def __hash__(self) -> int:
        return hash((self.source, self.target, self.images))

    @cached_property
    def _power_cache(self) -> dict:
        return {}

    def power_of_image(self, i: int, k: int) -> Element:
        cache = self._power_cache
        key = (i, k)
        if key not in cache:
            if k == 0:
                cache[key] = Element.one(self.target.free)
            else:
                cache[key] = reduce(self.power_of_image(i, k - 1) * self.images[i], groebner(self.target))
        return cache[key]

    def apply(self, a: Element) -> Element:
        return apply(self, a)

    def __call__(self, a: Element) -> Element:
        return apply(self, a)

    def __str__(self) -> str:
        pairs = ", ".join(
            f"{g.name} -> {format_element(im)}" for g, im in zip(self.source.generators, self.images)
        )
        return f"[{pairs}]"


def make_morphism(source: AlgebraPresentation, target: AlgebraPresentation, images: Sequence[Element | str]) -> AlgebraMorphism:
    imgs = tuple(im if isinstance(im, Element) else parse_element(im, target.free) for im in images)
    return AlgebraMorphism(source, target, imgs)


def identity_morphism(p: AlgebraPresentation) -> AlgebraMorphism:
    return AlgebraMorphism(p, p, tuple(p.gen(i) for i in range(p.ngens)))


def apply_monomial(m: AlgebraMorphism, mono: Monomial) -> Element:
    g = groebner(m.target)
    result = None
    for i, e in enumerate(mono):
        if e:
            factor = m.power_of_image(i, e)
            result = factor if result is None else reduce(result * factor, g)
    return result if result is not None else Element.one(m.target.free)


def apply(m: AlgebraMorphism, a: Element) -> Element:
    """Substitute generator images into ``a`` and reduce in the target."""
    if a.algebra != m.source.free:
        raise AlgebraMismatch("element does not belong to the morphism's source")
    acc = Element.zero(m.target.free)
    for mono, c in a.items():
        acc = acc + apply_monomial(m, mono).scale(c)
    return reduce(acc, groebner(m.target))


def validate_morphism(m: AlgebraMorphism) -> bool:
    for i, (g, im) in enumerate(zip(m.source.generators, m.images)):
        if not im:
            continue
        d = h_degree(im)
        if d is INHOMOGENEOUS or d != g.degree:
            raise DegreeViolation(i, f"image of {g.name} has degree {d}, expected {g.degree}")
    for k, r in enumerate(m.source.relations):
        res = apply(m, r)
        if res:
            raise RelationViolation(k, format_element(res))
    return True


def compose(f: AlgebraMorphism, g: AlgebraMorphism) -> AlgebraMorphism:
    """f ∘ g."""
    if g.target != f.source:
        raise CompositionMismatch("target of the inner morphism is not the source of the outer one")
    return AlgebraMorphism(g.source, f.target, tuple(apply(f, im) for im in g.images))


def copairing(p: AlgebraPresentation, f: AlgebraMorphism, g: AlgebraMorphism, target_of: AlgebraPresentation | None = None) -> AlgebraMorphism:
    """The map A ⊔ B -> C restricting to ``f`` on A and ``g`` on B, where ``p`` is A ⊔ B."""
    if f.target != g.target:
        raise CompositionMismatch("copairing needs morphisms with a common target")
    if f.source.ngens + g.source.ngens != p.ngens:
        raise CompositionMismatch("coproduct does not match the two sources")
    return AlgebraMorphism(p, f.target, f.images + g.images)


# Hom constraint systems -----------------------------------------------------

Unknown = tuple[int, Monomial]
Poly = dict  # unknown-exponent tuple -> coefficient


@dataclass(frozen=True)
class HomConstraintSystem:
    """Cap-bounded parameterization of equivariant maps ``source -> target``.

    ``unknowns[u] = (i, mono)`` is the coefficient of ``mono`` in the image of
    source generator ``i``.  ``constraints`` lists, per source relation, a map
    from target standard monomial to a polynomial in the unknowns; the
    polynomial is a dict from exponent tuples (one entry per unknown) to
    coefficients.
    """

    source: AlgebraPresentation
    target: AlgebraPresentation
    cap: int
    unknowns: tuple[Unknown, ...]
    constraints: tuple[dict, ...] = field(default=())

    def images_for(self, values: Sequence) -> tuple[Element, ...]:
        imgs = [Element.zero(self.target.free) for _ in range(self.source.ngens)]
        for (i, mono), v in zip(self.unknowns, values):
            imgs[i] = imgs[i] + Element.monomial(self.target.free, mono, v)
        return tuple(imgs)

    def evaluate(self, values: Sequence) -> list[dict]:
        """Residues of every constraint after substituting ``values``."""
        vals = [Laurent.const(v) if isinstance(v, int) else v for v in values]
        out = []
        for cons in self.constraints:
            res = {}
            for mono, poly in cons.items():
                acc = Laurent()
                for exps, c in poly.items():
                    term = c
                    for v, e in zip(vals, exps):
                        if e:
                            term = term * v**e
                    acc = acc + term
                if acc:
                    res[mono] = acc
            out.append(res)
        return out

    def is_satisfied_by(self, values: Sequence) -> bool:
        return all(not r for r in self.evaluate(values))

    def describe(self) -> list[str]:
        names = self.target.free
        lines = []
        for u, (i, mono) in enumerate(self.unknowns):
            lines.append(f"c{u}: coefficient of {format_monomial(names, mono) or '1'} in image of {self.source.generators[i].name}")
        for k, cons in enumerate(self.constraints):
            for mono, poly in sorted(cons.items()):
                lines.append(f"relation {k}, monomial {format_monomial(names, mono) or '1'}: {format_poly(poly)} = 0")
        return lines


def format_poly(poly: dict) -> str:
    parts = []
    for exps in sorted(poly, reverse=True):
        c = poly[exps]
        mon = "*".join(f"c{u}" if e == 1 else f"c{u}^{e}" for u, e in enumerate(exps) if e)
        ctext = str(c) if (isinstance(c, Laurent) and c.is_unit()) else f"({c})"
        parts.append(f"{ctext}*{mon}" if mon else ctext)
    return " + ".join(parts) if parts else "0"


def hom_constraints(b: AlgebraPresentation, target: AlgebraPresentation, total_cap: int) -> HomConstraintSystem:
    unknowns: list[Unknown] = []
    for i, g in enumerate(b.generators):
        for mono in standard_monomials(target, g.degree, total_cap):
            unknowns.append((i, mono))
    nu = len(unknowns)
    free = target.free
    gb = groebner(target)

    # symbolic image of each generator: {(target monomial, unknown exponents): coeff}
    def unit(u: int) -> tuple[int, ...]:
        return tuple(1 if k == u else 0 for k in range(nu))

    images = [dict() for _ in b.generators]
    for u, (i, mono) in enumerate(unknowns):
        images[i][(mono, unit(u))] = Laurent.const(1)

    def reduce_symbolic(sym: dict) -> dict:
        groups: dict[tuple, dict] = {}
        for (mono, ex), c in sym.items():
            groups.setdefault(ex, {})[mono] = c
        out = {}
        for ex, terms in groups.items():
            red = reduce(Element(free, terms), gb)
            for mono, c in red.items():
                out[(mono, ex)] = c
        return out

    def mul(x: dict, y: dict) -> dict:
        out: dict = {}
        for (m1, e1), c1 in x.items():
            for (m2, e2), c2 in y.items():
                key = (tuple(a + b for a, b in zip(m1, m2)), tuple(a + b for a, b in zip(e1, e2)))
                val = (c1 * c2).shift(free.phase_exponent(m1, m2))
                s = out.get(key)
                s = val if s is None else s + val
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return reduce_symbolic(out)

    one = {(free.unit_monomial(), (0,) * nu): Laurent.const(1)}
    constraints = []
    for rel in b.relations:
        total: dict = {}
        for mono, c in rel.items():
            term = one
            for i, e in enumerate(mono):
                for _ in range(e):
                    term = mul(term, images[i])
            for key, v in term.items():
                s = total.get(key)
                s = v * c if s is None else s + v * c
                if s:
                    total[key] = s
                else:
                    total.pop(key, None)
        by_mono: dict = {}
        for (mono, ex), c in reduce_symbolic(total).items():
            by_mono.setdefault(mono, {})[ex] = c
        constraints.append(by_mono)
    return HomConstraintSystem(b, target, total_cap, tuple(unknowns), tuple(constraints))


def graded_points(target: AlgebraPresentation, hdeg: Sequence[int], total_cap: int) -> list[Element]:
    """Standard-monomial basis of the degree-``hdeg`` part of ``target`` up to the cap."""
    return [Element.monomial(target.free, mono) for mono in standard_monomials(target, hdeg, total_cap)]


# serialization --------------------------------------------------------------


def morphism_to_json(m: AlgebraMorphism, source_ref=None, target_ref=None) -> dict:
    return {
        "source": source_ref if source_ref is not None else presentation_to_json(m.source),
        "target": target_ref if target_ref is not None else presentation_to_json(m.target),
        "images": [format_element(im) for im in m.images],
    }


def morphism_from_json(doc: dict, resolve=None) -> AlgebraMorphism:
    def get(ref):
        if isinstance(ref, dict):
            return presentation_from_json(ref)
        if resolve is None:
            raise ValidationError(f"cannot resolve algebra reference {ref!r}")
        return resolve(ref)

    source, target = get(doc["source"]), get(doc["target"])
    return make_morphism(source, target, doc["images"])
