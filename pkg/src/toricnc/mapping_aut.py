"""Stage-wise self-maps of a space, their monoid structure, and the tangent
space at the identity of the automorphism group.

A stage-B point of the mapping space of A is an algebra map A -> B ⊔ A.  The
generators of B ⊔ A are B's generators followed by A's, so an element of
B ⊔ A splits into a B-part and an A-part of each exponent vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .comodule_algebra import (
    INHOMOGENEOUS,
    Element,
    FreeAlgebra,
    Generator,
    embed,
    format_element,
    h_degree,
    multiply,
    parse_element,
)
from .errors import (
    AlgebraMismatch,
    LeibnizViolation,
    NotCoinvariant,
    NotPointed,
    StageMismatch,
    ValidationError,
)
from .morphisms import AlgebraMorphism, compose, validate_morphism
from .phase_ring import DeformationData, Laurent, linsolve
from .presentations import (
    AlgebraPresentation,
    coproduct,
    groebner,
    reduce,
    standard_monomials,
)


_ONE = Laurent.const(1)


@lru_cache(maxsize=32)
def dual_stage(deformation: DeformationData) -> AlgebraPresentation:
    """D = F_0 / (eps^2)."""
    free = FreeAlgebra(deformation, (Generator("eps", deformation.zero()),))
    eps = Element.generator(free, 0)
    return AlgebraPresentation(free, (eps * eps,), "D")


def stage_target(a: AlgebraPresentation, b: AlgebraPresentation) -> AlgebraPresentation:
    """B ⊔ A."""
    return coproduct(b, a)[0]


@dataclass(frozen=True, eq=False)
class MappingStageElement:
    space: AlgebraPresentation
    stage: AlgebraPresentation
    inner: AlgebraMorphism

    def __post_init__(self):
        if self.inner.source != self.space or self.inner.target != stage_target(self.space, self.stage):
            raise StageMismatch("inner morphism must map the space into stage ⊔ space")

    def __eq__(self, other) -> bool:
        if not isinstance(other, MappingStageElement):
            return NotImplemented
        return self.space == other.space and self.stage == other.stage and self.inner == other.inner

    def __hash__(self) -> int:
        return hash(self.inner)

    @property
    def images(self) -> tuple[Element, ...]:
        return self.inner.images


def stage_element(space: AlgebraPresentation, stage: AlgebraPresentation, images: Sequence[Element | str]) -> MappingStageElement:
    target = stage_target(space, stage)
    imgs = tuple(im if isinstance(im, Element) else parse_element(im, target.free) for im in images)
    g = MappingStageElement(space, stage, AlgebraMorphism(space, target, imgs))
    validate_morphism(g.inner)
    return g


def identity_stage(a: AlgebraPresentation, b: AlgebraPresentation) -> MappingStageElement:
    _, _, iota2 = coproduct(b, a)
    return MappingStageElement(a, b, iota2)


def _check_same(g: MappingStageElement, h: MappingStageElement) -> None:
    if g.space != h.space or g.stage != h.stage:
        raise StageMismatch("stage elements differ in space or stage")


def monoid_compose(g: MappingStageElement, h: MappingStageElement) -> MappingStageElement:
    """(g • h)* = (mult_B ⊗ id) ∘ (id_B ⊗ h*) ∘ g*.

    The first two factors together form the map B ⊔ A -> B ⊔ A that fixes B
    and sends each generator of A to its h-image.
    """
    _check_same(g, h)
    target, iota1, _ = coproduct(g.stage, g.space)
    through_h = AlgebraMorphism(target, target, iota1.images + h.inner.images)
    return MappingStageElement(g.space, g.stage, compose(through_h, g.inner))


def verify_inverse(g: MappingStageElement, gi: MappingStageElement) -> bool:
    _check_same(g, gi)
    e = identity_stage(g.space, g.stage)
    return monoid_compose(g, gi) == e and monoid_compose(gi, g) == e


# H-derivations ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HDerivation:
    """An equivariant derivation A -> B ⊔ A, stored by generator images."""

    space: AlgebraPresentation
    stage: AlgebraPresentation
    images: tuple[Element, ...]
    cap: int | None = None

    def __post_init__(self):
        target = stage_target(self.space, self.stage)
        imgs = tuple(self.images)
        if len(imgs) != self.space.ngens:
            raise ValidationError(f"expected {self.space.ngens} images, got {len(imgs)}")
        for im in imgs:
            if im.algebra != target.free:
                raise AlgebraMismatch("derivation images must live in stage ⊔ space")
        object.__setattr__(self, "images", tuple(reduce(im, groebner(target)) for im in imgs))

    @property
    def target(self) -> AlgebraPresentation:
        return stage_target(self.space, self.stage)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HDerivation):
            return NotImplemented
        return self.space == other.space and self.stage == other.stage and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def __add__(self, other: "HDerivation") -> "HDerivation":
        _check_same_der(self, other)
        return HDerivation(self.space, self.stage, tuple(a + b for a, b in zip(self.images, other.images)), self.cap)

    def __sub__(self, other: "HDerivation") -> "HDerivation":
        _check_same_der(self, other)
        return HDerivation(self.space, self.stage, tuple(a - b for a, b in zip(self.images, other.images)), self.cap)

    def scale(self, c) -> "HDerivation":
        return HDerivation(self.space, self.stage, tuple(a.scale(c) for a in self.images), self.cap)

    def is_zero(self) -> bool:
        return all(not im for im in self.images)

    def __call__(self, a: Element) -> Element:
        return leibniz_apply(self, a)

    def __str__(self) -> str:
        return "[" + ", ".join(
            f"{g.name} -> {format_element(im)}" for g, im in zip(self.space.generators, self.images)
        ) + "]"


def _check_same_der(v: HDerivation, w: HDerivation) -> None:
    if v.space != w.space or v.stage != w.stage:
        raise StageMismatch("derivations differ in space or stage")


def make_hderivation(space: AlgebraPresentation, stage: AlgebraPresentation, images: Sequence[Element | str], cap: int | None = None) -> HDerivation:
    target = stage_target(space, stage)
    imgs = tuple(im if isinstance(im, Element) else parse_element(im, target.free) for im in images)
    return HDerivation(space, stage, imgs, cap)


def _leibniz_unreduced(space: AlgebraPresentation, target_free: FreeAlgebra, images: Sequence[Element], a: Element) -> Element:
    """Leibniz extension on the free level:
    v(w_1 ... w_k) = sum_p (1 ⊗ w_1..w_{p-1}) v(w_p) (1 ⊗ w_{p+1}..w_k)."""
    n = space.ngens
    offset = target_free.ngens - n
    pad = (0,) * offset
    acc = Element.zero(target_free)
    for mono, c in a.items():
        for i, e in enumerate(mono):
            if not e or not images[i]:
                continue
            for p in range(e):
                prefix = mono[:i] + (p,) + (0,) * (n - i - 1)
                suffix = (0,) * i + (e - p - 1,) + mono[i + 1:]
                left = Element._raw(target_free, {pad + prefix: c})
                right = Element._raw(target_free, {pad + suffix: _ONE})
                acc = acc + multiply(multiply(left, images[i]), right)
    return acc


def leibniz_apply(v: HDerivation, a: Element) -> Element:
    """Evaluate the derivation on an arbitrary element of A, reduced in B ⊔ A."""
    if a.algebra != v.space.free:
        raise AlgebraMismatch("element does not belong to the derivation's space")
    target = v.target
    return reduce(_leibniz_unreduced(v.space, target.free, v.images, a), groebner(target))


def validate_hderivation(v: HDerivation) -> bool:
    for i, (g, im) in enumerate(zip(v.space.generators, v.images)):
        if im:
            d = h_degree(im)
            if d is INHOMOGENEOUS or d != g.degree:
                raise ValidationError(f"image of {g.name} has degree {d}, expected {g.degree}")
    for k, r in enumerate(v.space.relations):
        res = leibniz_apply(v, r)
        if res:
            raise LeibnizViolation(k, format_element(res))
    return True


def zero_hderivation(space: AlgebraPresentation, stage: AlgebraPresentation) -> HDerivation:
    target = stage_target(space, stage)
    return HDerivation(space, stage, tuple(Element.zero(target.free) for _ in space.generators))


# tangent space ------------------------------------------------------------------


def tangent_stage(stage: AlgebraPresentation) -> AlgebraPresentation:
    """D ⊔ B."""
    return coproduct(dual_stage(stage.deformation), stage)[0]


def tangent_split(g: MappingStageElement, stage: AlgebraPresentation):
    """Split g(a) = 1 ⊗ g0(a) + eps ⊗ g1(a) for a stage element over D ⊔ B.

    Returns ``(g0, g1)``; raises ``NotPointed`` unless g0 is the identity stage.
    """
    if g.stage != tangent_stage(stage):
        raise StageMismatch("stage element is not over D ⊔ B")
    space = g.space
    small = stage_target(space, stage)
    parts0, parts1 = [], []
    for im in g.images:
        t0, t1 = {}, {}
        for mono, c in im.items():
            e, rest = mono[0], mono[1:]
            if e == 0:
                t0[rest] = c
            elif e == 1:
                t1[rest] = c
            else:
                raise ValidationError("image is not reduced modulo eps^2")
        parts0.append(Element._raw(small.free, t0))
        parts1.append(Element._raw(small.free, t1))
    g0 = AlgebraMorphism(space, small, tuple(parts0))
    if g0 != identity_stage(space, stage).inner:
        raise NotPointed("the eps-free part of the stage element is not the identity")
    g1 = HDerivation(space, stage, tuple(parts1))
    validate_hderivation(g1)
    return g0, g1


def _lift_images(d: HDerivation, sign: int) -> tuple[Element, ...]:
    big = stage_target(d.space, tangent_stage(d.stage))
    n = d.space.ngens
    pad = (0,) * (big.ngens - n)
    out = []
    for i, im in enumerate(d.images):
        terms = {pad + tuple(1 if k == i else 0 for k in range(n)): _ONE}
        for mono, c in im.items():
            terms[(1,) + mono] = c if sign > 0 else -c
        out.append(Element(big.free, terms))
    return tuple(out)


def tangent_lift(d: HDerivation):
    """g(a) = 1 ⊗ a + eps ⊗ d(a) and its inverse built from -d."""
    validate_hderivation(d)
    stage = tangent_stage(d.stage)
    g = MappingStageElement(d.space, stage, AlgebraMorphism(d.space, stage_target(d.space, stage), _lift_images(d, 1)))
    gi = MappingStageElement(d.space, stage, AlgebraMorphism(d.space, stage_target(d.space, stage), _lift_images(d, -1)))
    validate_morphism(g.inner)
    validate_morphism(gi.inner)
    if not verify_inverse(g, gi):
        raise ValidationError("tangent lift and its candidate inverse do not compose to the identity")
    return g, gi


def _unknown_space(a: AlgebraPresentation, b: AlgebraPresentation, total_cap: int):
    target = stage_target(a, b)
    unknowns = []
    for i, g in enumerate(a.generators):
        for mono in standard_monomials(target, g.degree, total_cap):
            unknowns.append((i, mono))
    return target, unknowns


def te_aut_basis(a: AlgebraPresentation, b: AlgebraPresentation, total_cap: int) -> list[HDerivation]:
    """Basis of equivariant derivations A -> B ⊔ A with images up to the cap."""
    target, unknowns = _unknown_space(a, b, total_cap)
    gb = groebner(target)
    columns = []
    for i, mono in unknowns:
        imgs = [Element.zero(target.free) for _ in a.generators]
        imgs[i] = Element.monomial(target.free, mono)
        col = {}
        for k, r in enumerate(a.relations):
            res = reduce(_leibniz_unreduced(a, target.free, imgs, r), gb)
            for m, c in res.items():
                col[(k, m)] = c
        columns.append(col)
    labels = sorted({lab for col in columns for lab in col})
    rows = [[col.get(lab, 0) for col in columns] for lab in labels]
    sol = linsolve(rows, None, ncols=len(unknowns))
    basis = []
    for vec in sol.kernel:
        imgs = [Element.zero(target.free) for _ in a.generators]
        for (i, mono), c in zip(unknowns, vec):
            if c:
                imgs[i] = imgs[i] + Element.monomial(target.free, mono, c)
        basis.append(HDerivation(a, b, tuple(imgs), total_cap))
    return basis


def hderivation_coordinates(v: HDerivation, total_cap: int) -> list | None:
    """Coordinates in the unknown space used by ``te_aut_basis``; None if outside the cap."""
    _, unknowns = _unknown_space(v.space, v.stage, total_cap)
    index = {u: k for k, u in enumerate(unknowns)}
    coords = [0] * len(unknowns)
    for i, im in enumerate(v.images):
        for mono, c in im.items():
            k = index.get((i, mono))
            if k is None:
                return None
            coords[k] = c
    return coords


def _apply_through(v: HDerivation, w_image: Element) -> Element:
    """(mult_B ⊗ id) ∘ (id_B ⊗ v) on one element of B ⊔ A."""
    target = v.target
    nb = v.stage.ngens
    acc = Element.zero(target.free)
    for mono, c in w_image.items():
        b_part = Element._raw(target.free, {mono[:nb] + (0,) * (len(mono) - nb): c})
        a_elem = Element._raw(v.space.free, {mono[nb:]: _ONE})
        acc = acc + multiply(b_part, _leibniz_unreduced(v.space, target.free, v.images, a_elem))
    return acc


def hder_bracket(v: HDerivation, w: HDerivation) -> HDerivation:
    _check_same_der(v, w)
    gb = groebner(v.target)
    imgs = []
    for vi, wi in zip(v.images, w.images):
        imgs.append(reduce(_apply_through(v, wi) - _apply_through(w, vi), gb))
    return HDerivation(v.space, v.stage, tuple(imgs), v.cap)


def hder_scalar_action(b: Element, v: HDerivation) -> HDerivation:
    if b.algebra != v.stage.free:
        raise AlgebraMismatch("scalar must live in the stage algebra")
    d = h_degree(b)
    if d is INHOMOGENEOUS or (b and d != v.stage.deformation.zero()):
        raise NotCoinvariant(f"{format_element(b)} is not coinvariant")
    bb = embed(b, v.target.free, 0)
    return HDerivation(v.space, v.stage, tuple(multiply(bb, im) for im in v.images), v.cap)


def hderivation_to_json(v: HDerivation, space_ref=None, stage_ref=None) -> dict:
    from .presentations import presentation_to_json

    return {
        "space": space_ref if space_ref is not None else presentation_to_json(v.space),
        "stage": stage_ref if stage_ref is not None else presentation_to_json(v.stage),
        "images": [format_element(im) for im in v.images],
        "cap": v.cap,
    }


def hderivation_from_json(doc: dict, resolve=None) -> HDerivation:
    from .presentations import presentation_from_json

    def get(ref):
        return presentation_from_json(ref) if isinstance(ref, dict) else resolve(ref)

    return make_hderivation(get(doc["space"]), get(doc["stage"]), doc["images"], doc.get("cap"))

