"""Acceptance criteria 1-14.  Each test records one PASS/FAIL line, shown in
the terminal summary (and printed directly when run as a script)."""

from __future__ import annotations

import functools
import itertools
import random
from fractions import Fraction

import pytest
import sympy

from conftest import ACCEPTANCE_RESULTS
from oracles import naive_circle_der_dimension, naive_partial, pairing, sort_word, sympy_symbols, sympy_te_aut_dimension, to_sympy
from toricnc.braided_der import (
    BraidedDerivation,
    der_basis,
    der_bracket,
    ev,
    make_braided_derivation,
    partial,
    verify_xi_iso,
)
from toricnc.comodule_algebra import Element, h_degree, multiply, normalize_word
from toricnc.mapping_aut import (
    hder_bracket,
    te_aut_basis,
    tangent_lift,
    tangent_split,
    tangent_stage,
    verify_inverse,
)
from toricnc.morphisms import AlgebraMorphism, graded_points, validate_morphism
from toricnc.phase_ring import DeformationData, Laurent, chi
from toricnc.presentations import make_presentation, standard_basis, standard_monomials
from toricnc.site import glue, pullback_cover, restrict, separation_defect, validate_cover


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                ACCEPTANCE_RESULTS[number] = (False, title)
                print(f"criterion {number:2d}: FAIL  {title}")
                raise
            ACCEPTANCE_RESULTS[number] = (True, title)
            print(f"criterion {number:2d}: PASS  {title}")

        return run

    return wrap


def random_theta(rng: random.Random, n: int) -> list[list[int]]:
    theta = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = rng.randint(-5, 5)
            theta[i][j], theta[j][i] = v, -v
    return theta


def random_free(rng: random.Random, rank: int, ngens: int, bound: int = 2):
    d = DeformationData.from_matrix(random_theta(rng, rank))
    gens = [(f"x{i + 1}", tuple(rng.randint(-bound, bound) for _ in range(rank))) for i in range(ngens)]
    return make_presentation(d, gens, [], "F")


def random_element(rng: random.Random, free, nterms: int = 3, max_total: int = 3) -> Element:
    acc = Element.zero(free)
    for _ in range(nterms):
        mono = [0] * free.ngens
        for _ in range(rng.randint(0, max_total)):
            mono[rng.randrange(free.ngens)] += 1
        c = Laurent({rng.randint(-2, 2): rng.randint(-3, 3) or 1})
        acc = acc + Element.monomial(free, mono, c)
    return acc


def random_monomial_element(rng, free, max_total=3) -> Element:
    mono = [0] * free.ngens
    for _ in range(rng.randint(0, max_total)):
        mono[rng.randrange(free.ngens)] += 1
    return Element.monomial(free, mono, Laurent({rng.randint(-2, 2): rng.randint(1, 3)}))


def random_homogeneous(rng, free, max_total=3) -> Element:
    """Sum of a few monomials sharing one degree (the first one's)."""
    base = random_monomial_element(rng, free, max_total)
    acc = base
    deg = h_degree(base)
    for _ in range(3):
        extra = random_monomial_element(rng, free, max_total)
        if h_degree(extra) == deg:
            acc = acc + extra
    return acc


# 1 -------------------------------------------------------------------------------


@criterion(1, "bicharacter laws on 200 random (theta, m, m', k)")
def test_criterion_01_bicharacter():
    rng = random.Random(101)
    for _ in range(200):
        n = rng.randint(1, 4)
        d = DeformationData.from_matrix(random_theta(rng, n))
        m, m2, k = ([rng.randint(-5, 5) for _ in range(n)] for _ in range(3))
        msum = [a + b for a, b in zip(m, m2)]
        assert chi(d, msum, k) == chi(d, m, k) * chi(d, m2, k)
        assert chi(d, k, msum) == chi(d, k, m2) * chi(d, k, m)
        assert chi(d, m, k) * chi(d, k, m) == Laurent.const(1)
        assert chi(d, m, k) == Laurent.q(pairing(d.theta, m, k))


# 2 -------------------------------------------------------------------------------


@criterion(2, "normalization confluence and associativity on 200 random cases")
def test_criterion_02_confluence_associativity():
    rng = random.Random(202)
    for case in range(200):
        p = random_free(rng, rng.randint(1, 3), rng.randint(1, 4))
        free = p.free
        word = [rng.randrange(free.ngens) for _ in range(rng.randint(0, 7))]
        got = normalize_word(free, word)
        # two different random swap schedules must agree with each other and the package
        e1, ph1 = sort_word(free.deformation.theta, free.degrees, word, random.Random(case))
        e2, ph2 = sort_word(free.deformation.theta, free.degrees, word, random.Random(case + 10_000))
        assert (e1, ph1) == (e2, ph2)
        assert got == Element.monomial(free, e1, Laurent.q(ph1))
        a, b, c = (random_element(rng, free) for _ in range(3))
        assert (a * b) * c == a * (b * c)


# 3 -------------------------------------------------------------------------------


@criterion(3, "braided commutativity on 100 homogeneous pairs")
def test_criterion_03_braided_commutativity(ws):
    rng = random.Random(303)
    quotients = [ws.algebra("T2"), ws.algebra("S3"), ws.algebra("S4")]
    for case in range(100):
        if case % 2:
            p = random_free(rng, rng.randint(1, 3), rng.randint(1, 4))
        else:
            p = quotients[case % 3]
        free = p.free
        a, b = random_homogeneous(rng, free), random_homogeneous(rng, free)
        phase = chi(free.deformation, h_degree(b), h_degree(a))
        lhs = p.reduce(a * b)
        rhs = p.reduce((b * a).scale(phase))
        assert lhs == rhs


# 4 -------------------------------------------------------------------------------


@criterion(4, "torus reductions x*xs -> 1 and xs*x*xs -> xs")
def test_criterion_04_torus(ws):
    t = ws.algebra("T")
    assert t.reduce(t.element("x*xs")) == t.one()
    assert t.reduce(t.element("xs*x*xs")) == t.element("xs")


# 5 -------------------------------------------------------------------------------


@criterion(5, "sphere relations reduce to 1; S4 cover validates with witnesses 1, 1")
def test_criterion_05_spheres(ws):
    s3, s4 = ws.algebra("S3"), ws.algebra("S4")
    assert s3.reduce(s3.element("x1s*x1 + x2s*x2")) == s3.one()
    assert s4.reduce(s4.element("x1s*x1 + x2s*x2 + z^2")) == s4.one()
    cover = ws.cover("cover4")
    assert all(w == s4.one() for w in cover.witnesses)
    assert validate_cover(cover)


# 6 -------------------------------------------------------------------------------


@criterion(6, "S4 cover: separation injective up to cap 4; glue after restrict is the identity on 50 elements")
def test_criterion_06_sheaf(ws):
    cover = ws.cover("cover4")
    defect = separation_defect(cover, 4)
    assert defect and all(k == 0 for k in defect.values())
    s4 = cover.base
    span = [(deg, m) for deg, monos in standard_basis(s4, 4).items() for m in monos]
    rng = random.Random(606)
    for _ in range(50):
        b = Element.zero(s4.free)
        for deg in {rng.choice(span)[0] for _ in range(rng.randint(1, 2))}:
            monos = standard_monomials(s4, deg, 4)
            for m in rng.sample(monos, min(len(monos), rng.randint(1, 3))):
                b = b + Element.monomial(s4.free, m, Fraction(rng.randint(-4, 4) or 1, rng.randint(1, 3)))
        assert glue(cover, restrict(cover, b), 4) == b


# 7 -------------------------------------------------------------------------------


@criterion(7, "pullback of the sphere cover along the north-chart localization re-validates")
def test_criterion_07_pullback(ws):
    cover = ws.cover("cover4")
    ell = ws.morphisms["ell1"]
    pulled = pullback_cover(cover, ell)
    assert validate_cover(pulled)
    assert pulled.base == ws.algebra("S4N")
    assert [str(w) for w in pulled.witnesses] == ["1", "1"]


# 8 -------------------------------------------------------------------------------


@criterion(8, "derivation calculus: ∂_j(x_i) = δ_ij, braided Leibniz on 100 pairs, [x∂, ∂] = -∂")
def test_criterion_08_derivations(ws):
    rng = random.Random(808)
    for _ in range(20):
        p = random_free(rng, rng.randint(1, 3), rng.randint(1, 4))
        free = p.free
        for i in range(free.ngens):
            for j in range(free.ngens):
                expected = Element.one(free) if i == j else Element.zero(free)
                assert partial(j, Element.generator(free, i)) == expected
    for _ in range(100):
        p = random_free(rng, rng.randint(1, 3), rng.randint(1, 4))
        free = p.free
        a, b = random_homogeneous(rng, free), random_homogeneous(rng, free)
        j = rng.randrange(free.ngens)
        coeffs = [Element.zero(free)] * free.ngens
        coeffs[j] = random_homogeneous(rng, free, 2)
        L = BraidedDerivation(p, tuple(coeffs))
        dl = L.degree()
        lhs = ev(L, a * b)
        rhs = ev(L, a) * b + (a * ev(L, b)).scale(chi(free.deformation, h_degree(a), dl))
        assert lhs == rhs
    fm = ws.algebra("Fm")
    xd, d = make_braided_derivation(fm, ["x"]), make_braided_derivation(fm, ["1"])
    assert der_bracket(xd, d) == d.scale(-1)


# 9 -------------------------------------------------------------------------------


def _ev_antisymmetry_and_jacobi(p, cap):
    d = p.deformation
    basis = der_basis(p, cap)
    points = [Element.monomial(p.free, m) for monos in standard_basis(p, cap).values() for m in monos]
    br = {}
    for i, j in itertools.product(range(len(basis)), repeat=2):
        br[i, j] = der_bracket(basis[i], basis[j])
    for i, j in itertools.product(range(len(basis)), repeat=2):
        L, M = basis[i], basis[j]
        phase = chi(d, M.degree(), L.degree())
        for a in points:
            assert ev(br[i, j], a) + ev(br[j, i], a).scale(phase) == Element.zero(p.free)
    for i, j, k in itertools.product(range(len(basis)), repeat=3):
        A, B, C = basis[i], basis[j], basis[k]
        da, db, dc = A.degree(), B.degree(), C.degree()
        total = (
            der_bracket(A, br[j, k]).scale(chi(d, da, dc))
            + der_bracket(B, br[k, i]).scale(chi(d, db, da))
            + der_bracket(C, br[i, j]).scale(chi(d, dc, db))
        )
        for a in points:
            assert ev(total, a) == Element.zero(p.free)
    return len(basis)


def _hder_antisymmetry_and_jacobi(a, b, cap):
    basis = te_aut_basis(a, b, cap)
    br = {(i, j): hder_bracket(basis[i], basis[j]) for i in range(len(basis)) for j in range(len(basis))}
    for i, j in br:
        assert (br[i, j] + br[j, i]).is_zero()
    for i, j, k in itertools.product(range(len(basis)), repeat=3):
        total = hder_bracket(basis[i], br[j, k]) + hder_bracket(basis[j], br[k, i]) + hder_bracket(basis[k], br[i, j])
        assert total.is_zero()
    return len(basis)


@criterion(9, "braided antisymmetry and Jacobi on der_basis (Fm, torus, cap 3) and te_aut_basis (cap 3)")
def test_criterion_09_lie_structure(ws):
    assert _ev_antisymmetry_and_jacobi(ws.algebra("Fm"), 3) == 4
    assert _ev_antisymmetry_and_jacobi(ws.algebra("T"), 3) > 0
    assert _ev_antisymmetry_and_jacobi(ws.algebra("T2"), 3) > 0
    assert _hder_antisymmetry_and_jacobi(ws.algebra("Fm"), ws.algebra("Fm"), 3) > 0
    assert _hder_antisymmetry_and_jacobi(ws.algebra("T2"), ws.algebra("K"), 3) > 0
    assert _hder_antisymmetry_and_jacobi(ws.algebra("T"), ws.algebra("T2"), 3) > 0


# 10 ------------------------------------------------------------------------------


@criterion(10, "tangent lift/split round trip with verified inverses on te_aut_basis(Fm, torus, cap 2)")
def test_criterion_10_tangent(ws):
    fm, t = ws.algebra("Fm"), ws.algebra("T")
    basis = te_aut_basis(fm, t, 2)
    assert basis
    for v in basis:
        g, gi = tangent_lift(v)
        assert g.stage == tangent_stage(t)
        assert validate_morphism(g.inner) and validate_morphism(gi.inner)
        assert verify_inverse(g, gi)
        _, back = tangent_split(g, t)
        assert back == v


# 11 ------------------------------------------------------------------------------

# frozen from the two oracles below (test_torus_dimension_oracle)
TORUS_K_CAP2_DIMENSION = 1


def torus_oracle_dimension() -> int:
    return sympy_te_aut_dimension(["x", "xs"], [(1, 0), (-1, 0)], ["xs*x - 1"], [], [], [], 2)


def test_torus_dimension_oracle():
    # stage-derivation side by sympy, braided-derivation side by word-level Leibniz
    assert torus_oracle_dimension() == TORUS_K_CAP2_DIMENSION
    assert naive_circle_der_dimension(2) == TORUS_K_CAP2_DIMENSION


@criterion(11, "xi is a bijection with equal dimensions for (Fm,K,1), (Fm,Fm,2), (torus,K,2)")
def test_criterion_11_xi_iso(ws):
    cases = [("Fm", "K", 1, 1), ("Fm", "Fm", 2, 2), ("T", "K", 2, TORUS_K_CAP2_DIMENSION)]
    for a, b, cap, dim in cases:
        r = verify_xi_iso(ws.algebra(a), ws.algebra(b), cap)
        assert r.dim_j == r.dim_te == r.rank == dim, (a, b, cap, r)
        assert r.bijective


# 12 ------------------------------------------------------------------------------


@criterion(12, "bracket diagram commutes on all j-stage pairs for (Fm, Fm, cap 2)")
def test_criterion_12_bracket_diagram(ws):
    r = verify_xi_iso(ws.algebra("Fm"), ws.algebra("Fm"), 2)
    assert r.bracket_checked == r.dim_j**2 == 4
    assert r.bracket_failures == ()


# 13 ------------------------------------------------------------------------------


def _commutative_cases(ws):
    """(presentation, sympy relation list) pairs with theta = 0 or q specialized to 1."""
    d0 = DeformationData.commutative(2)
    s4 = make_presentation(
        d0,
        [("x1", (1, 0)), ("x2", (0, 1)), ("x1s", (-1, 0)), ("x2s", (0, -1)), ("z", (0, 0))],
        ["x1s*x1 + x2s*x2 + z^2 - 1"],
    )
    t2 = ws.with_q_at_one().algebra("T2")
    free = make_presentation(d0, [("a", (1, 0)), ("b", (0, 1)), ("c", (1, 1))], [])
    return [s4, t2, free]


@criterion(13, "commutative degeneration matches a sympy oracle on 100 cases (total degree <= 5)")
def test_criterion_13_commutative(ws):
    rng = random.Random(1313)
    cases = _commutative_cases(ws)
    for case in range(100):
        p = cases[case % len(cases)]
        free = p.free
        syms = sympy_symbols(list(free.names))
        rels = [to_sympy(r, syms) for r in p.relations]
        G = sympy.groebner(rels, *syms, order="grevlex").exprs if rels else []
        a = random_element(rng, free, nterms=3, max_total=2)
        b = random_element(rng, free, nterms=3, max_total=3)
        a = Element(free, {m: Laurent.const(c.at_one()) for m, c in a.items()})
        b = Element(free, {m: Laurent.const(c.at_one()) for m, c in b.items()})
        prod = multiply(a, b)
        assert to_sympy(prod, syms) == sympy.expand(to_sympy(a, syms) * to_sympy(b, syms))
        red = p.reduce(prod)
        expected = sympy.reduced(to_sympy(prod, syms), G, *syms, order="grevlex")[1] if G else to_sympy(prod, syms)
        assert sympy.expand(to_sympy(red, syms) - expected) == 0
        j = rng.randrange(free.ngens)
        assert to_sympy(partial(j, prod), syms) == sympy.expand(sympy.diff(to_sympy(prod, syms), syms[j]))


# 14 ------------------------------------------------------------------------------


@criterion(14, "graded points of AT ⊔ Fm at degree m, cap 2J-1: y^(j-1)*x^j for j = 1..J (plus y^-1)")
def test_criterion_14_polynomial_maps(ws):
    target = ws.algebra("ATFm")
    fm = ws.algebra("Fm")
    y, ys, x = (target.gen(i) for i in range(3))
    for J in range(1, 5):
        pts = graded_points(target, (1, 0), 2 * J - 1)
        expected = {y ** (j - 1) * x**j for j in range(1, J + 1)}
        pattern = [p for p in pts if p != ys]
        assert len(pattern) == J
        assert set(pattern) == expected
        assert set(pts) == expected | {ys}
        for p in pts:
            assert validate_morphism(AlgebraMorphism(fm, target, (p,)))


def test_naive_partial_oracle_agrees_on_a_fixed_word():
    theta = [[0, 1], [-1, 0]]
    degrees = [(1, 0), (0, 1)]
    d = DeformationData.from_matrix(theta)
    p = make_presentation(d, [("a", (1, 0)), ("b", (0, 1))], [])
    word = [1, 0, 1, 0]
    expected = naive_partial(theta, degrees, 0, word)
    got = partial(0, normalize_word(p.free, word))
    as_dict = {m: {e: v for e, v in c.items()} for m, c in got.items()}
    assert as_dict == expected


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
