import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import element_as_dict, naive_partial
from toricnc.braided_der import (
    JStageVector,
    bracket_after_psi,
    braided_derivation_from_json,
    braided_derivation_to_json,
    der_basis,
    der_bracket,
    ev,
    is_derivation,
    j_stage_basis,
    make_braided_derivation,
    membership_residues,
    partial,
    psi,
    verify_xi_iso,
    xi,
)
from toricnc.comodule_algebra import FreeAlgebra, Generator, h_degree, normalize_word
from toricnc.errors import InvalidGenerator, NotCoinvariant
from toricnc.mapping_aut import hder_bracket, hder_scalar_action, make_hderivation, validate_hderivation
from toricnc.phase_ring import DeformationData, Laurent, chi
from toricnc.presentations import make_presentation, trivial_algebra

THETA = DeformationData.from_matrix([[0, 1], [-1, 0]])
Q = Laurent.q()
K = trivial_algebra(THETA)
F2 = make_presentation(THETA, [("x1", (1, 0)), ("x2", (0, 1))], [], "F2")
F0 = make_presentation(THETA, [("t", (0, 0))], [], "F0")


class TestPartial:
    def test_generators(self):
        for i, j in itertools.product(range(2), repeat=2):
            expected = F2.one() if i == j else F2.zero()
            assert partial(j, F2.gen(i)) == expected

    def test_product(self):
        assert partial(0, F2.element("x1*x2")) == F2.gen(1)
        assert partial(1, F2.element("x1*x2")) == F2.gen(0).scale(chi(THETA, (1, 0), (0, -1)))

    def test_bad_index(self):
        with pytest.raises(InvalidGenerator):
            partial(2, F2.gen(0))

    @given(
        st.integers(1, 3).flatmap(lambda n: st.tuples(
            st.just(n),
            st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=n, max_size=n),
            st.lists(st.integers(0, n - 1), max_size=7),
            st.integers(0, n - 1),
        )),
        st.integers(-3, 3),
    )
    @settings(max_examples=150)
    def test_against_naive_leibniz(self, data, twist):
        n, degrees, word, j = data
        theta = DeformationData.from_matrix([[0, twist], [-twist, 0]])
        free = FreeAlgebra(theta, tuple(Generator(f"g{i}", d) for i, d in enumerate(degrees)))
        got = element_as_dict(partial(j, normalize_word(free, word)))
        expected = naive_partial(theta.theta, free.degrees, j, word)
        assert got == expected


class TestEv:
    def test_basic(self):
        d1 = make_braided_derivation(F2, ["1", "0"])
        assert ev(d1, F2.gen(0)) == F2.one()
        assert ev(d1, F2.gen(1)) == F2.zero()

    @pytest.mark.parametrize("k", range(6))
    def test_euler_on_powers(self, ws, k):
        fm = ws.algebra("Fm")
        xd = ws.derivations["xd"]
        assert ev(xd, fm.gen(0) ** k) == (fm.gen(0) ** k).scale(k)

    def test_relations_vanish(self, ws):
        for name in ("T", "T2", "S3"):
            p = ws.algebra(name)
            for L in der_basis(p, 2):
                for r in p.relations:
                    assert not ev(L, r)

    @given(st.data())
    @settings(max_examples=40)
    def test_braided_leibniz(self, ws, data):
        p = ws.algebra(data.draw(st.sampled_from(["T2", "S3"])))
        comps = [c for L in der_basis(p, 2) for c in L.components().values()]
        L = data.draw(st.sampled_from(comps))

        def mono():
            word = data.draw(st.lists(st.integers(0, p.ngens - 1), max_size=3))
            return p.reduce(normalize_word(p.free, word))

        a, b = mono(), mono()
        if not a or not b:
            return
        lhs = ev(L, a * b)
        rhs = p.reduce(ev(L, a) * b + (a * ev(L, b)).scale(chi(THETA, h_degree(a), L.degree())))
        assert lhs == rhs


class TestBasis:
    @pytest.mark.parametrize("cap", [0, 1, 3, 5])
    def test_free_line(self, ws, cap):
        fm = ws.algebra("Fm")
        basis = der_basis(fm, cap)
        assert len(basis) == cap + 1
        assert {str(L) for L in basis} == {f"({(fm.gen(0) ** k)})*d_x" for k in range(cap + 1)}

    def test_torus_cap_one(self, ws):
        t = ws.algebra("T")
        (L,) = der_basis(t, 1)
        lead = L.coeffs[0].coefficient((1, 0))
        assert L == make_braided_derivation(t, ["x", "-xs"]).scale(lead)

    def test_invalid_candidate(self, ws):
        t = ws.algebra("T")
        L = make_braided_derivation(t, ["1", "0"])
        assert not is_derivation(L)
        assert any(membership_residues(L))

    def test_degrees_carry_shift(self, ws):
        fm = ws.algebra("Fm")
        assert ws.derivations["d"].degree() == (-1, 0)
        assert ws.derivations["xd"].degree() == (0, 0)
        assert make_braided_derivation(fm, ["0"]).degree() is None


class TestBracket:
    def test_line_examples(self, ws):
        d, xd = ws.derivations["d"], ws.derivations["xd"]
        assert der_bracket(d, d).is_zero()
        assert der_bracket(xd, d) == d.scale(-1)

    @pytest.mark.parametrize("name,cap", [("T2", 2), ("S3", 2), ("Fm", 3)])
    def test_closure_and_ev_identity(self, ws, name, cap):
        p = ws.algebra(name)
        comps = [c for L in der_basis(p, cap) for c in L.components().values()]
        probes = [p.reduce(normalize_word(p.free, w)) for k in range(3) for w in itertools.product(range(p.ngens), repeat=k)]
        rng = random.Random(name)
        for L, Lp in rng.sample(list(itertools.product(comps, repeat=2)), min(12, len(comps) ** 2)):
            br = der_bracket(L, Lp)
            assert is_derivation(br)
            phase = chi(THETA, Lp.degree(), L.degree())
            for a in probes:
                assert ev(br, a) == ev(L, ev(Lp, a)) - ev(Lp, ev(L, a)).scale(phase)


class TestStageComparison:
    def test_xi_example(self, ws):
        fm = ws.algebra("Fm")
        t = JStageVector(fm, F0, ((F0.one(), ws.derivations["xd"]),))
        assert xi(F0, t) == make_hderivation(fm, F0, ["x"])

    def test_xi_zero(self, ws):
        fm = ws.algebra("Fm")
        assert xi(F0, JStageVector(fm, F0, ())).is_zero()

    def test_xi_not_coinvariant(self, ws):
        fm = ws.algebra("Fm")
        with pytest.raises(NotCoinvariant):
            xi(F0, JStageVector(fm, F0, ((F0.gen(0), ws.derivations["d"]),)))

    def test_xi_is_stage_linear(self, ws):
        fm = ws.algebra("Fm")
        t = JStageVector(fm, F0, ((F0.element("t + 2"), ws.derivations["xd"]),))
        for b in (F0.element("t^2 - 1"), F0.one(), F0.zero()):
            assert xi(F0, t.scale_stage(b)) == hder_scalar_action(b, xi(F0, t))

    def test_j_stage_example(self, ws):
        fm = ws.algebra("Fm")
        basis = j_stage_basis(fm, fm, 2)
        assert {(str(b), str(L)) for t in basis for b, L in t.terms} == {("1", "(x)*d_x"), ("x", "(1)*d_x")}

    def test_j_stage_ground_field(self, ws):
        fm = ws.algebra("Fm")
        basis = j_stage_basis(fm, K, 3)
        assert [str(L) for t in basis for _, L in t.terms] == ["(x)*d_x"]

    def test_j_stage_empty(self, ws):
        # at cap 0 the only derivation of the line has degree -m
        assert j_stage_basis(ws.algebra("Fm"), K, 0) == []
        stage = make_presentation(THETA, [("e", (0, 1))], [])
        assert len(j_stage_basis(ws.algebra("Fm"), stage, 2)) == 1

    def test_xi_lands_in_hder(self, ws):
        for space, stage in (("T2", "K"), ("Fm", "Fm"), ("T", "T2")):
            a, b = ws.algebra(space), ws.algebra(stage)
            for t in j_stage_basis(a, b, 2):
                assert validate_hderivation(xi(b, t))

    def test_psi_phase(self):
        stage = make_presentation(THETA, [("c", (-1, 1)), ("e", (0, 1))], [])
        v = make_braided_derivation(F2, ["0", "x1"])
        w = make_braided_derivation(F2, ["0", "1"])
        t1 = JStageVector(F2, stage, ((stage.gen("c"), v),))
        t2 = JStageVector(F2, stage, ((stage.gen("e"), w),))
        ((merged, pv, pw),) = psi(stage, t1, t2)
        assert merged == stage.element("c*e").scale(Q**-1)
        assert (pv, pw) == (v, w)
        assert bracket_after_psi(stage, psi(stage, t1, t2), F2) == hder_bracket(xi(stage, t1), xi(stage, t2))

    def test_psi_unit_stage_factor(self, ws):
        fm = ws.algebra("Fm")
        t1 = JStageVector(fm, F0, ((F0.gen(0), ws.derivations["xd"]),))
        t2 = JStageVector(fm, F0, ((F0.one(), ws.derivations["xd"]),))
        ((merged, _, _),) = psi(F0, t1, t2)
        assert merged == F0.gen(0)

    @pytest.mark.parametrize(
        "space,stage,cap,dim",
        [("Fm", "K", 1, 1), ("Fm", "Fm", 2, 2), ("T", "K", 2, 1), ("T2", "K", 2, None), ("S3", "K", 2, None)],
    )
    def test_xi_iso(self, ws, space, stage, cap, dim):
        report = verify_xi_iso(ws.algebra(space), ws.algebra(stage), cap)
        assert report.ok and report.bijective
        assert report.dim_j == report.dim_te
        if dim is not None:
            assert report.dim_j == dim


def test_json_round_trip(ws):
    L = make_braided_derivation(ws.algebra("T2"), ["q*x1", "0", "x2s*x1*x2", "0"], cap=3)
    doc = braided_derivation_to_json(L)
    assert set(doc) == {"algebra", "coeffs", "cap"}
    assert braided_derivation_from_json(doc) == L
