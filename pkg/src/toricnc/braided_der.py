"""Braided derivations L = sum_j L_j ∂_j, their bracket, and the comparison
map into equivariant derivations of stage ⊔ space.

A derivation whose coefficient L_j has degree d + m_j for every j has
derivation degree d.  All phases in the bracket use these shifted degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .comodule_algebra import (
    INHOMOGENEOUS,
    Element,
    add_degrees,
    embed,
    format_element,
    graded_decompose,
    h_degree,
    multiply,
    neg_degree,
    parse_element,
)
from .errors import AlgebraMismatch, DegreeError, InvalidGenerator, NotCoinvariant, ValidationError
from .mapping_aut import (
    HDerivation,
    hder_bracket,
    hderivation_coordinates,
    stage_target,
    te_aut_basis,
    validate_hderivation,
)
from .phase_ring import DegreeVector, Laurent, chi, linsolve, matrix_rank
from .presentations import AlgebraPresentation, groebner, reduce, standard_basis

_ONE = Laurent.const(1)


def _sub_degrees(a, b) -> DegreeVector:
    return tuple(x - y for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class BraidedDerivation:
    algebra: AlgebraPresentation
    coeffs: tuple[Element, ...]
    cap: int | None = field(default=None)

    def __post_init__(self):
        cs = tuple(self.coeffs)
        if len(cs) != self.algebra.ngens:
            raise ValidationError(f"expected {self.algebra.ngens} coefficients, got {len(cs)}")
        for c in cs:
            if c.algebra != self.algebra.free:
                raise AlgebraMismatch("coefficients must live in the algebra")
        object.__setattr__(self, "coeffs", tuple(reduce(c, groebner(self.algebra)) for c in cs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BraidedDerivation):
            return NotImplemented
        return self.algebra == other.algebra and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "BraidedDerivation") -> "BraidedDerivation":
        return BraidedDerivation(self.algebra, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.cap)

    def __sub__(self, other: "BraidedDerivation") -> "BraidedDerivation":
        return BraidedDerivation(self.algebra, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.cap)

    def scale(self, c) -> "BraidedDerivation":
        return BraidedDerivation(self.algebra, tuple(a.scale(c) for a in self.coeffs), self.cap)

    def is_zero(self) -> bool:
        return all(not c for c in self.coeffs)

    def components(self) -> dict[DegreeVector, "BraidedDerivation"]:
        """Split into homogeneous pieces keyed by derivation degree."""
        free = self.algebra.free
        parts: dict[DegreeVector, list[Element]] = {}
        for j, c in enumerate(self.coeffs):
            for d, piece in graded_decompose(c).items():
                key = _sub_degrees(d, free.degrees[j])
                slot = parts.setdefault(key, [Element.zero(free) for _ in range(free.ngens)])
                slot[j] = piece
        return {d: BraidedDerivation(self.algebra, tuple(cs), self.cap) for d, cs in sorted(parts.items())}

    def degree(self):
        """Derivation degree; ``INHOMOGENEOUS`` when mixed; None for zero."""
        comps = self.components()
        if not comps:
            return None
        if len(comps) > 1:
            return INHOMOGENEOUS
        return next(iter(comps))

    def __call__(self, a: Element) -> Element:
        return ev(self, a)

    def __str__(self) -> str:
        terms = []
        for g, c in zip(self.algebra.generators, self.coeffs):
            if c:
                terms.append(f"({format_element(c)})*d_{g.name}")
        return " + ".join(terms) if terms else "0"


def make_braided_derivation(a: AlgebraPresentation, coeffs: Sequence[Element | str], cap: int | None = None) -> BraidedDerivation:
    cs = tuple(c if isinstance(c, Element) else parse_element(c, a.free) for c in coeffs)
    return BraidedDerivation(a, cs, cap)


def partial(j: int, a: Element, p: AlgebraPresentation | None = None) -> Element:
    """∂_j on the free algebra; reduced modulo ``p`` when given.

    On an ordered monomial every x_j sits after the block x_1..x_{j-1}, so
    each occurrence carries the same phase chi(deg of that block, -m_j).
    """
    free = a.algebra
    if not 0 <= j < free.ngens:
        raise InvalidGenerator(f"generator index {j} out of range")
    d = free.deformation
    mj = free.degrees[j]
    neg_mj = neg_degree(mj)
    out: dict = {}
    for mono, c in a.items():
        e = mono[j]
        if not e:
            continue
        before = free.degree_of(mono[:j] + (0,) * (len(mono) - j))
        coef = c.scale(e).shift(d.pairing(before, neg_mj))
        nm = mono[:j] + (e - 1,) + mono[j + 1:]
        prev = out.get(nm)
        s = coef if prev is None else prev + coef
        if s:
            out[nm] = s
        else:
            out.pop(nm, None)
    result = Element._raw(free, out)
    if p is not None:
        result = reduce(result, groebner(p))
    return result


def _ev_free(coeffs: Sequence[Element], a: Element) -> Element:
    acc = Element.zero(a.algebra)
    for j, c in enumerate(coeffs):
        if c:
            dj = partial(j, a)
            if dj:
                acc = acc + multiply(c, dj)
    return acc


def ev(L: BraidedDerivation, a: Element) -> Element:
    """sum_j L_j ∂_j(a), reduced in the algebra of ``L``."""
    if a.algebra != L.algebra.free:
        raise AlgebraMismatch("element does not belong to the derivation's algebra")
    return reduce(_ev_free(L.coeffs, a), groebner(L.algebra))


def membership_residues(L: BraidedDerivation) -> list[Element]:
    return [ev(L, f) for f in L.algebra.relations]


def is_derivation(L: BraidedDerivation) -> bool:
    return all(not r for r in membership_residues(L))


@lru_cache(maxsize=64)
def _der_basis_by_degree(a: AlgebraPresentation, total_cap: int) -> dict[DegreeVector, tuple[BraidedDerivation, ...]]:
    free = a.free
    gb = groebner(a)
    std = standard_basis(a, total_cap)
    candidates = sorted({_sub_degrees(hd, m) for hd in std for m in free.degrees})
    partials = [[partial(j, f) for j in range(free.ngens)] for f in a.relations]
    out = {}
    for d in candidates:
        unknowns = [
            (j, mono)
            for j in range(free.ngens)
            for mono in std.get(add_degrees(d, free.degrees[j]), ())
        ]
        if not unknowns:
            continue
        columns = []
        for j, mono in unknowns:
            mu = Element.monomial(free, mono)
            col = {}
            for k in range(len(a.relations)):
                dj = partials[k][j]
                if dj:
                    for m, c in reduce(multiply(mu, dj), gb).items():
                        col[(k, m)] = c
            columns.append(col)
        labels = sorted({lab for col in columns for lab in col})
        rows = [[col.get(lab, 0) for col in columns] for lab in labels]
        sol = linsolve(rows, None, ncols=len(unknowns))
        ders = []
        for vec in sol.kernel:
            cs = [Element.zero(free) for _ in range(free.ngens)]
            for (j, mono), c in zip(unknowns, vec):
                if c:
                    cs[j] = cs[j] + Element.monomial(free, mono, c)
            ders.append(BraidedDerivation(a, tuple(cs), total_cap))
        if ders:
            out[d] = tuple(ders)
    return out


def der_basis(a: AlgebraPresentation, total_cap: int) -> list[BraidedDerivation]:
    """Homogeneous basis of braided derivations with coefficients up to the cap,
    grouped by derivation degree in sorted order."""
    if total_cap < 0:
        return []
    return [L for ders in _der_basis_by_degree(a, total_cap).values() for L in ders]


def der_basis_of_degree(a: AlgebraPresentation, total_cap: int, degree: Sequence[int]) -> list[BraidedDerivation]:
    if total_cap < 0:
        return []
    return list(_der_basis_by_degree(a, total_cap).get(tuple(degree), ()))


def der_bracket(L: BraidedDerivation, Lp: BraidedDerivation) -> BraidedDerivation:
    """[L, L']_k = sum_j L_j ∂_j(L'_k) - chi(deg L', deg L) L'_j ∂_j(L_k), per homogeneous pieces."""
    if L.algebra != Lp.algebra:
        raise AlgebraMismatch("derivations belong to different algebras")
    a = L.algebra
    free = a.free
    d = free.deformation
    n = free.ngens
    acc = [Element.zero(free) for _ in range(n)]
    comps = L.components()
    comps_p = Lp.components()
    for k in range(n):
        acc[k] = acc[k] + _ev_free(L.coeffs, Lp.coeffs[k])
    for dl, Lc in comps.items():
        for dlp, Lpc in comps_p.items():
            phase = chi(d, dlp, dl)
            for k in range(n):
                term = _ev_free(Lpc.coeffs, Lc.coeffs[k])
                if term:
                    acc[k] = acc[k] - term.scale(phase)
    return BraidedDerivation(a, tuple(acc), L.cap)


# comparison with equivariant derivations ------------------------------------------


@dataclass(frozen=True)
class JStageVector:
    """A finite sum of pairs b ⊗ L with b in the stage and deg b + deg L = 0."""

    space: AlgebraPresentation
    stage: AlgebraPresentation
    terms: tuple[tuple[Element, BraidedDerivation], ...]

    def check(self) -> None:
        zero = self.space.deformation.zero()
        for idx, (b, L) in enumerate(self.terms):
            if b.algebra != self.stage.free or L.algebra != self.space:
                raise AlgebraMismatch(f"pair {idx} does not belong to the stage and space")
            if not b or L.is_zero():
                continue
            db, dl = h_degree(b), L.degree()
            if db is INHOMOGENEOUS or dl is INHOMOGENEOUS:
                raise NotCoinvariant(f"pair {idx} is not homogeneous", index=idx)
            if add_degrees(db, dl) != zero:
                raise NotCoinvariant(f"pair {idx} has total degree {add_degrees(db, dl)}", index=idx)

    def scale_stage(self, b: Element) -> "JStageVector":
        """Left multiplication of every stage factor by ``b``."""
        gb = groebner(self.stage)
        return JStageVector(self.space, self.stage, tuple((reduce(multiply(b, x), gb), L) for x, L in self.terms))

    def __str__(self) -> str:
        return " + ".join(f"({format_element(b)}) ⊗ ({L})" for b, L in self.terms) or "0"


def xi(stage: AlgebraPresentation, t: JStageVector) -> HDerivation:
    """ξ(b ⊗ L): generator x_i goes to b ⊗ L_i."""
    if t.stage != stage:
        raise AlgebraMismatch("vector is over a different stage")
    t.check()
    space = t.space
    target = stage_target(space, stage)
    nb = stage.ngens
    imgs = [Element.zero(target.free) for _ in range(space.ngens)]
    for b, L in t.terms:
        bb = embed(b, target.free, 0)
        for i, c in enumerate(L.coeffs):
            if c:
                imgs[i] = imgs[i] + multiply(bb, embed(c, target.free, nb))
    return HDerivation(space, stage, tuple(imgs))


def j_stage_basis(a: AlgebraPresentation, b: AlgebraPresentation, total_cap: int) -> list[JStageVector]:
    """Pairs (stage monomial of degree n, basis derivation of degree -n) whose
    combined total degree stays within the cap."""
    out = []
    for n, monos in standard_basis(b, total_cap).items():
        for mono in monos:
            rest = total_cap - sum(mono)
            for L in der_basis_of_degree(a, rest, neg_degree(n)):
                out.append(JStageVector(a, b, ((Element.monomial(b.free, mono), L),)))
    return out


PsiTerm = tuple[Element, BraidedDerivation, BraidedDerivation]


def psi(stage: AlgebraPresentation, t1: JStageVector, t2: JStageVector) -> tuple[PsiTerm, ...]:
    """(b ⊗ v) ⊗ (b' ⊗ w) -> chi(deg b', deg v) (b b') ⊗ v ⊗ w."""
    d = stage.deformation
    gb = groebner(stage)
    out = []
    for b, v in t1.terms:
        dv = v.degree()
        for bp, w in t2.terms:
            dbp = h_degree(bp)
            if dv is INHOMOGENEOUS or dbp is INHOMOGENEOUS:
                raise DegreeError("psi needs homogeneous pairs")
            if dv is None or not bp or w.is_zero() or not b:
                continue
            merged = reduce(multiply(b, bp), gb).scale(chi(d, dbp, dv))
            if merged:
                out.append((merged, v, w))
    return tuple(out)


def bracket_after_psi(stage: AlgebraPresentation, terms: Sequence[PsiTerm], space: AlgebraPresentation) -> HDerivation:
    """ξ applied to b ⊗ [v, w] summed over psi terms."""
    pairs = tuple((b, der_bracket(v, w)) for b, v, w in terms)
    return xi(stage, JStageVector(space, stage, pairs))


@dataclass(frozen=True)
class XiIsoReport:
    cap: int
    dim_j: int
    dim_te: int
    rank: int
    outside_cap: int
    bracket_checked: int
    bracket_failures: tuple[tuple[int, int], ...]

    @property
    def injective(self) -> bool:
        return self.rank == self.dim_j and not self.outside_cap

    @property
    def surjective(self) -> bool:
        return self.rank == self.dim_te and not self.outside_cap

    @property
    def bijective(self) -> bool:
        return self.injective and self.surjective

    @property
    def ok(self) -> bool:
        return self.bijective and not self.bracket_failures

    def lines(self) -> list[str]:
        return [
            f"cap: {self.cap}",
            f"dim j-stage: {self.dim_j}",
            f"dim te-aut: {self.dim_te}",
            f"rank xi: {self.rank}",
            f"bijective: {'yes' if self.bijective else 'no'}",
            f"bracket pairs checked: {self.bracket_checked}, failures: {len(self.bracket_failures)}",
        ]


def verify_xi_iso(a: AlgebraPresentation, b: AlgebraPresentation, total_cap: int) -> XiIsoReport:
    jb = j_stage_basis(a, b, total_cap)
    te = te_aut_basis(a, b, total_cap)
    images = [xi(b, t) for t in jb]
    rows = []
    outside = 0
    for v in images:
        validate_hderivation(v)
        coords = hderivation_coordinates(v, total_cap)
        if coords is None:
            outside += 1
        else:
            rows.append(coords)
    rank = matrix_rank(rows) if rows else 0
    failures = []
    checked = 0
    for i, t1 in enumerate(jb):
        for k, t2 in enumerate(jb):
            checked += 1
            upper = bracket_after_psi(b, psi(b, t1, t2), a)
            lower = hder_bracket(images[i], images[k])
            if upper != lower:
                failures.append((i, k))
    return XiIsoReport(total_cap, len(jb), len(te), rank, outside, checked, tuple(failures))


def braided_derivation_to_json(L: BraidedDerivation, algebra_ref=None) -> dict:
    from .presentations import presentation_to_json

    return {
        "algebra": algebra_ref if algebra_ref is not None else presentation_to_json(L.algebra),
        "coeffs": [format_element(c) for c in L.coeffs],
        "cap": L.cap,
    }


def braided_derivation_from_json(doc: dict, resolve=None) -> BraidedDerivation:
    from .presentations import presentation_from_json

    ref = doc["algebra"]
    a = presentation_from_json(ref) if isinstance(ref, dict) else resolve(ref)
    return make_braided_derivation(a, doc["coeffs"], doc.get("cap"))
