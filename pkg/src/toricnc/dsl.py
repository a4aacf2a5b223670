"""Workspace language: declarations of a deformation, algebras, morphisms,
covers and derivations, plus stored command lines.

    workspace := stmt*
    stmt      := 'theta' matrix ';'
               | 'algebra' NAME '=' algexpr ';'
               | 'morphism' NAME ':' NAME '->' NAME '=' list ';'
               | 'cover' NAME 'on' NAME '=' '{' elem '|' elem (',' elem '|' elem)* '}' ';'
               | 'derivation' NAME 'on' NAME '=' list ';'
               | 'hderivation' NAME 'on' NAME 'over' NAME '=' list ';'
               | 'stage' NAME 'on' NAME 'over' NAME '=' list ';'
               | 'note' STRING ';'
               | 'run' <command line> ';'
    algexpr   := 'free' '(' [gen (',' gen)*] ')' ['/' '{' [elem (',' elem)*] '}']
               | 'coproduct' '(' NAME ',' NAME ')'
               | 'localize' '(' NAME ',' elem ')'
    gen       := NAME ':' '(' INT (',' INT)* ')' ['^' '-' '1' 'as' NAME]
    list      := '[' [elem (',' elem)*] ']'

The name ``K`` always refers to the ground field.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field
from typing import Any

from .braided_der import BraidedDerivation, braided_derivation_from_json, membership_residues
from .comodule_algebra import Element, ExpressionParser, FreeAlgebra, Generator, format_element
from .errors import ParseError, ToricError, ValidationError
from .mapping_aut import HDerivation, MappingStageElement, make_hderivation, stage_element, stage_target, validate_hderivation
from .morphisms import AlgebraMorphism, make_morphism, validate_morphism
from .phase_ring import DeformationData
from .presentations import (
    AlgebraPresentation,
    coproduct,
    localize,
    presentation_from_json,
    presentation_to_json,
    trivial_algebra,
    validate_presentation,
)
from .site import ZariskiCover, make_cover, validate_cover
from .textform import Token, line_col, tokenize

GROUND = "K"
KEYWORDS = frozenset({"theta", "algebra", "morphism", "cover", "derivation", "hderivation", "stage", "note", "run"})


@dataclass(eq=False)
class Workspace:
    deformation: DeformationData | None = None
    algebras: dict[str, AlgebraPresentation] = field(default_factory=dict)
    morphisms: dict[str, AlgebraMorphism] = field(default_factory=dict)
    covers: dict[str, tuple[str, ZariskiCover]] = field(default_factory=dict)
    derivations: dict[str, BraidedDerivation] = field(default_factory=dict)
    hderivations: dict[str, HDerivation] = field(default_factory=dict)
    stages: dict[str, MappingStageElement] = field(default_factory=dict)
    commands: list[list[str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    q_at_one: bool = False

    def __eq__(self, other) -> bool:
        if not isinstance(other, Workspace):
            return NotImplemented
        return (
            self.deformation == other.deformation
            and self.algebras == other.algebras
            and self.covers == other.covers
            and self.morphisms == other.morphisms
            and self.derivations == other.derivations
            and self.hderivations == other.hderivations
            and self.stages == other.stages
            and self.commands == other.commands
            and self.notes == other.notes
        )

    def require_deformation(self) -> DeformationData:
        if self.deformation is None:
            raise ValidationError("workspace declares no theta; the torus rank is unknown")
        return self.deformation

    def names(self) -> set[str]:
        out = {GROUND}
        for table in (self.algebras, self.morphisms, self.covers, self.derivations, self.hderivations, self.stages):
            out.update(table)
        return out

    def algebra(self, name: str) -> AlgebraPresentation:
        if name == GROUND:
            return trivial_algebra(self.require_deformation())
        try:
            return self.algebras[name]
        except KeyError:
            raise ValidationError(f"unknown algebra {name!r}") from None

    def algebra_name(self, p: AlgebraPresentation) -> str:
        if p.ngens == 0 and not p.relations:
            return GROUND
        for name, a in self.algebras.items():
            if a == p:
                return name
        raise ValidationError("algebra is not registered in the workspace")

    def parse_element(self, algebra: AlgebraPresentation, text: str) -> Element:
        """Element text in ``algebra``, honouring the q = 1 specialization."""
        tokens = tokenize(text)
        p = _ElementParser(tokens, algebra.free, 0, self.q_at_one)
        try:
            value = p.parse_expr()
            if p.peek().kind != "end":
                raise p.error(f"unexpected {p.peek().text!r}")
        except ParseError as err:
            if getattr(err, "pos", None) is not None:
                raise ParseError(f"{err.args[0]} (in {text!r} at offset {err.pos})") from None
            raise
        return value

    def cover(self, name: str) -> ZariskiCover:
        try:
            return self.covers[name][1]
        except KeyError:
            raise ValidationError(f"unknown cover {name!r}") from None

    def lookup(self, name: str, *kinds: str):
        for kind in kinds:
            table = getattr(self, kind)
            if name in table:
                return kind, table[name]
        raise ValidationError(f"unknown object {name!r}")

    def validate(self) -> list[str]:
        """Re-validate every stored object; returns one status line each."""
        self.require_deformation()
        lines = []
        for name, a in self.algebras.items():
            _named(f"algebra {name}", validate_presentation, a)
            lines.append(f"algebra {name}: ok ({a.ngens} generators, {len(a.relations)} relations)")
        for name, m in self.morphisms.items():
            _named(f"morphism {name}", validate_morphism, m)
            lines.append(f"morphism {name}: ok")
        for name, (_, c) in self.covers.items():
            _named(f"cover {name}", validate_cover, c)
            lines.append(f"cover {name}: ok ({len(c)} charts)")
        for name, L in self.derivations.items():
            res = [r for r in membership_residues(L) if r]
            if res:
                raise ValidationError(f"derivation {name}: relation residue {format_element(res[0])}")
            lines.append(f"derivation {name}: ok")
        for name, v in self.hderivations.items():
            _named(f"hderivation {name}", validate_hderivation, v)
            lines.append(f"hderivation {name}: ok")
        for name, g in self.stages.items():
            _named(f"stage {name}", validate_morphism, g.inner)
            lines.append(f"stage {name}: ok")
        return lines

    def with_q_at_one(self) -> "Workspace":
        """Same declarations with theta = 0 and q evaluated at 1."""
        return parse_workspace(serialize(self), q_at_one=True)


def _named(label: str, fn, *args):
    try:
        return fn(*args)
    except ValidationError as err:
        raise ValidationError(f"{label}: {err}") from err


# parsing --------------------------------------------------------------------------


class _ElementParser(ExpressionParser):
    def __init__(self, tokens, algebra, pos, q_at_one: bool):
        super().__init__(tokens, algebra, pos)
        self.q_at_one = q_at_one

    def parse_atom(self):
        tok = self.peek()
        if self.q_at_one and tok.kind == "name" and tok.text == "q":
            self.take()
            return Element.one(self.algebra), None
        return super().parse_atom()


class _WorkspaceParser:
    def __init__(self, text: str, q_at_one: bool = False):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.q_at_one = q_at_one
        self.ws = Workspace(q_at_one=q_at_one)

    # token helpers
    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def take(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        line, col = line_col(self.text, tok.pos)
        return ParseError(msg, line, col)

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("punct", "name") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.peek().text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.take()

    def name(self, what: str = "name") -> Token:
        t = self.peek()
        if t.kind != "name":
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        return self.take()

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.take()
            neg = True
        t = self.peek()
        if t.kind != "int":
            raise self.error(f"expected an integer, found {t.text or 'end of input'!r}")
        self.take()
        return -int(t.text) if neg else int(t.text)

    def int_tuple(self) -> tuple[int, ...]:
        self.expect("(")
        vals = [self.integer()]
        while self.at(","):
            self.take()
            vals.append(self.integer())
        self.expect(")")
        return tuple(vals)

    def element(self, free: FreeAlgebra) -> Element:
        p = _ElementParser(self.tokens, free, self.i, self.q_at_one)
        try:
            value = p.parse_expr()
        except ParseError as err:
            pos = getattr(err, "pos", None)
            if pos is None:
                raise
            line, col = line_col(self.text, pos)
            raise ParseError(err.args[0], line, col) from None
        except ToricError as err:
            raise self.error(str(err)) from None
        self.i = p.i
        return value

    def element_list(self, free: FreeAlgebra, open_: str, close: str) -> list[Element]:
        self.expect(open_)
        out = []
        if not self.at(close):
            out.append(self.element(free))
            while self.at(","):
                self.take()
                out.append(self.element(free))
        self.expect(close)
        return out

    def new_name(self) -> tuple[str, Token]:
        tok = self.name()
        if tok.text in self.ws.names() or tok.text in KEYWORDS or tok.text == "q":
            raise self.error(f"name {tok.text!r} is already in use", tok)
        return tok.text, tok

    def deformation(self, tok: Token) -> DeformationData:
        if self.ws.deformation is None:
            raise self.error("theta must be declared before any other object", tok)
        return self.ws.deformation

    def algebra_ref(self) -> AlgebraPresentation:
        tok = self.name("algebra name")
        try:
            return self.ws.algebra(tok.text)
        except ValidationError as err:
            raise self.error(str(err), tok) from None

    def guarded(self, label: str, tok: Token, fn, *args):
        try:
            return fn(*args)
        except ValidationError as err:
            line, col = line_col(self.text, tok.pos)
            raise ValidationError(f"{label} (line {line}, column {col}): {err}") from err

    # statements
    def parse(self) -> Workspace:
        while self.peek().kind != "end":
            tok = self.peek()
            if tok.kind != "name" or tok.text not in KEYWORDS:
                raise self.error(f"expected a statement, found {tok.text!r}")
            getattr(self, f"stmt_{tok.text}")()
        return self.ws

    def end(self):
        self.expect(";")

    def stmt_theta(self):
        kw = self.take()
        if self.ws.deformation is not None:
            raise self.error("theta is declared twice", kw)
        self.expect("[")
        rows = []
        while True:
            self.expect("[")
            row = [self.integer()]
            while self.at(","):
                self.take()
                row.append(self.integer())
            self.expect("]")
            rows.append(row)
            if not self.at(","):
                break
            self.take()
        self.expect("]")
        self.end()
        if self.q_at_one:
            rows = [[0] * len(r) for r in rows]
        self.ws.deformation = self.guarded("theta", kw, DeformationData.from_matrix, rows)

    def stmt_algebra(self):
        kw = self.take()
        d = self.deformation(kw)
        name, ntok = self.new_name()
        self.expect("=")
        head = self.name("algebra expression")
        if head.text == "free":
            p = self.free_expr(d, name, ntok)
        elif head.text == "coproduct":
            self.expect("(")
            a = self.algebra_ref()
            self.expect(",")
            b = self.algebra_ref()
            self.expect(")")
            p = self.guarded(f"algebra {name}", ntok, lambda: coproduct(a, b)[0])
        elif head.text == "localize":
            self.expect("(")
            a = self.algebra_ref()
            self.expect(",")
            s = self.element(a.free)
            self.expect(")")
            p = self.guarded(f"algebra {name}", ntok, lambda: localize(a, s)[0])
        else:
            raise self.error(f"unknown algebra constructor {head.text!r}", head)
        self.end()
        p = p.with_name(name)
        self.guarded(f"algebra {name}", ntok, validate_presentation, p)
        self.ws.algebras[name] = p

    def free_expr(self, d: DeformationData, name: str, ntok: Token) -> AlgebraPresentation:
        self.expect("(")
        gens: list[Generator] = []
        partners: list[tuple[int, int]] = []
        if not self.at(")"):
            while True:
                gtok = self.name("generator name")
                self.expect(":")
                deg = self.int_tuple()
                if self.at("^"):
                    self.take()
                    self.expect("-")
                    one = self.take()
                    if one.text != "1":
                        raise self.error("only ^-1 may follow a generator degree", one)
                    self.expect("as")
                    ptok = self.name("inverse name")
                    gens.append(Generator(gtok.text, deg, True))
                    gens.append(Generator(ptok.text, tuple(-v for v in deg)))
                    partners.append((len(gens) - 2, len(gens) - 1))
                else:
                    gens.append(Generator(gtok.text, deg))
                if not self.at(","):
                    break
                self.take()
        self.expect(")")
        free = self.guarded(f"algebra {name}", ntok, FreeAlgebra, d, tuple(gens))
        rels: list[Element] = []
        if self.at("/"):
            self.take()
            rels = self.element_list(free, "{", "}")
        auto = []
        for i, j in partners:
            r = Element.generator(free, j) * Element.generator(free, i) - 1
            if r not in rels:
                auto.append(r)
        return AlgebraPresentation(free, tuple(auto) + tuple(rels), name)

    def stmt_morphism(self):
        kw = self.take()
        self.deformation(kw)
        name, ntok = self.new_name()
        self.expect(":")
        src = self.algebra_ref()
        self.expect("->")
        tgt = self.algebra_ref()
        self.expect("=")
        imgs = self.element_list(tgt.free, "[", "]")
        self.end()
        m = self.guarded(f"morphism {name}", ntok, AlgebraMorphism, src, tgt, tuple(imgs))
        self.guarded(f"morphism {name}", ntok, validate_morphism, m)
        self.ws.morphisms[name] = m

    def stmt_cover(self):
        kw = self.take()
        self.deformation(kw)
        name, ntok = self.new_name()
        self.expect("on")
        btok = self.peek()
        base = self.algebra_ref()
        self.expect("=")
        self.expect("{")
        elements, witnesses = [], []
        while True:
            elements.append(self.element(base.free))
            self.expect("|")
            witnesses.append(self.element(base.free))
            if not self.at(","):
                break
            self.take()
        self.expect("}")
        self.end()
        c = ZariskiCover(base, tuple(elements), tuple(witnesses))
        self.guarded(f"cover {name}", ntok, validate_cover, c)
        self.ws.covers[name] = (btok.text, c)

    def stmt_derivation(self):
        kw = self.take()
        self.deformation(kw)
        name, ntok = self.new_name()
        self.expect("on")
        a = self.algebra_ref()
        self.expect("=")
        coeffs = self.element_list(a.free, "[", "]")
        self.end()
        L = self.guarded(f"derivation {name}", ntok, BraidedDerivation, a, tuple(coeffs))
        self.ws.derivations[name] = L

    def _space_stage(self):
        self.expect("on")
        a = self.algebra_ref()
        self.expect("over")
        b = self.algebra_ref()
        self.expect("=")
        return a, b

    def stmt_hderivation(self):
        kw = self.take()
        self.deformation(kw)
        name, ntok = self.new_name()
        a, b = self._space_stage()
        imgs = self.element_list(stage_target(a, b).free, "[", "]")
        self.end()
        v = self.guarded(f"hderivation {name}", ntok, make_hderivation, a, b, imgs)
        self.guarded(f"hderivation {name}", ntok, validate_hderivation, v)
        self.ws.hderivations[name] = v

    def stmt_stage(self):
        kw = self.take()
        self.deformation(kw)
        name, ntok = self.new_name()
        a, b = self._space_stage()
        imgs = self.element_list(stage_target(a, b).free, "[", "]")
        self.end()
        self.ws.stages[name] = self.guarded(f"stage {name}", ntok, stage_element, a, b, imgs)

    def stmt_note(self):
        self.take()
        t = self.peek()
        if t.kind != "string":
            raise self.error("expected a quoted note")
        self.take()
        self.end()
        self.ws.notes.append(t.text[1:-1])

    def stmt_run(self):
        kw = self.take()
        start = self.peek().pos
        while not (self.peek().kind == "punct" and self.peek().text == ";"):
            if self.peek().kind == "end":
                raise self.error("unterminated run statement", kw)
            self.take()
        raw = self.text[start:self.peek().pos]
        self.take()
        try:
            argv = shlex.split(raw)
        except ValueError as err:
            raise self.error(f"cannot split command line: {err}", kw) from None
        if not argv:
            raise self.error("empty run statement", kw)
        self.ws.commands.append(argv)


def parse_workspace(text: str, q_at_one: bool = False) -> Workspace:
    return _WorkspaceParser(text, q_at_one).parse()


# serialization -------------------------------------------------------------------


def _gen_text(p: AlgebraPresentation) -> tuple[str, tuple[Element, ...]]:
    parts = []
    gens = p.generators
    i = 0
    while i < len(gens):
        g = gens[i]
        deg = "(" + ", ".join(map(str, g.degree)) + ")"
        if g.invertible and i + 1 < len(gens):
            parts.append(f"{g.name}:{deg}^-1 as {gens[i + 1].name}")
            i += 2
        else:
            parts.append(f"{g.name}:{deg}")
            i += 1
    return ", ".join(parts), p.relations


def serialize_algebra(name: str, p: AlgebraPresentation) -> str:
    gens, rels = _gen_text(p)
    text = f"algebra {name} = free({gens})"
    if rels:
        text += " / { " + ", ".join(format_element(r) for r in rels) + " }"
    return text + ";"


def _elements(xs) -> str:
    return "[" + ", ".join(format_element(x) for x in xs) + "]"


def serialize(ws: Workspace) -> str:
    lines = []
    if ws.deformation is not None:
        rows = ", ".join("[" + ", ".join(map(str, r)) + "]" for r in ws.deformation.theta)
        lines.append(f"theta [{rows}];")
    for note in ws.notes:
        lines.append(f'note "{note}";')
    for name, p in ws.algebras.items():
        lines.append(serialize_algebra(name, p))
    for name, m in ws.morphisms.items():
        lines.append(f"morphism {name} : {ws.algebra_name(m.source)} -> {ws.algebra_name(m.target)} = {_elements(m.images)};")
    for name, (base, c) in ws.covers.items():
        pairs = ", ".join(f"{format_element(s)} | {format_element(a)}" for s, a in zip(c.elements, c.witnesses))
        lines.append(f"cover {name} on {base} = {{ {pairs} }};")
    for name, L in ws.derivations.items():
        lines.append(f"derivation {name} on {ws.algebra_name(L.algebra)} = {_elements(L.coeffs)};")
    for name, v in ws.hderivations.items():
        lines.append(f"hderivation {name} on {ws.algebra_name(v.space)} over {ws.algebra_name(v.stage)} = {_elements(v.images)};")
    for name, g in ws.stages.items():
        lines.append(f"stage {name} on {ws.algebra_name(g.space)} over {ws.algebra_name(g.stage)} = {_elements(g.images)};")
    for argv in ws.commands:
        lines.append("run " + shlex.join(argv) + ";")
    return "\n".join(lines) + "\n"


# JSON envelope --------------------------------------------------------------------

FORMAT_VERSION = 1


def workspace_to_json(ws: Workspace) -> dict[str, Any]:
    d = ws.require_deformation()
    ref = ws.algebra_name
    return {
        "version": FORMAT_VERSION,
        "rank": d.rank,
        "theta": [list(r) for r in d.theta],
        "notes": list(ws.notes),
        "algebras": {n: presentation_to_json(p) for n, p in ws.algebras.items()},
        "morphisms": {
            n: {"source": ref(m.source), "target": ref(m.target), "images": [format_element(x) for x in m.images]}
            for n, m in ws.morphisms.items()
        },
        "covers": {
            n: {"base": base, "elements": [format_element(s) for s in c.elements], "witnesses": [format_element(a) for a in c.witnesses]}
            for n, (base, c) in ws.covers.items()
        },
        "derivations": {
            n: {"algebra": ref(L.algebra), "coeffs": [format_element(x) for x in L.coeffs], "cap": L.cap}
            for n, L in ws.derivations.items()
        },
        "hderivations": {
            n: {"space": ref(v.space), "stage": ref(v.stage), "images": [format_element(x) for x in v.images], "cap": v.cap}
            for n, v in ws.hderivations.items()
        },
        "stages": {
            n: {"space": ref(g.space), "stage": ref(g.stage), "images": [format_element(x) for x in g.images]}
            for n, g in ws.stages.items()
        },
        "commands": [list(c) for c in ws.commands],
    }


def workspace_from_json(doc: dict[str, Any]) -> Workspace:
    if not isinstance(doc, dict) or doc.get("version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported workspace document (expected version {FORMAT_VERSION})")
    try:
        ws = Workspace(DeformationData(int(doc["rank"]), tuple(tuple(r) for r in doc["theta"])))
        ws.notes = list(doc.get("notes", []))
        for n, pd in doc.get("algebras", {}).items():
            p = presentation_from_json(pd, n)
            _named(f"algebra {n}", validate_presentation, p)
            if p.deformation != ws.deformation:
                raise ValidationError(f"algebra {n}: deformation differs from the workspace theta")
            ws.algebras[n] = p
        get = ws.algebra
        for n, md in doc.get("morphisms", {}).items():
            m = _named(f"morphism {n}", make_morphism, get(md["source"]), get(md["target"]), md["images"])
            _named(f"morphism {n}", validate_morphism, m)
            ws.morphisms[n] = m
        for n, cd in doc.get("covers", {}).items():
            c = _named(f"cover {n}", make_cover, get(cd["base"]), cd["elements"], cd["witnesses"])
            _named(f"cover {n}", validate_cover, c)
            ws.covers[n] = (cd["base"], c)
        for n, dd in doc.get("derivations", {}).items():
            ws.derivations[n] = braided_derivation_from_json(dd, get)
        for n, hd in doc.get("hderivations", {}).items():
            v = _named(f"hderivation {n}", make_hderivation, get(hd["space"]), get(hd["stage"]), hd["images"], hd.get("cap"))
            _named(f"hderivation {n}", validate_hderivation, v)
            ws.hderivations[n] = v
        for n, sd in doc.get("stages", {}).items():
            ws.stages[n] = _named(f"stage {n}", stage_element, get(sd["space"]), get(sd["stage"]), sd["images"])
        ws.commands = [list(map(str, c)) for c in doc.get("commands", [])]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed workspace document: missing or invalid {exc}") from None
    return ws


def load_workspace(text: str, q_at_one: bool = False) -> Workspace:
    """DSL text or a JSON envelope, detected by the first non-blank character."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ParseError(f"invalid JSON: {err.msg}", err.lineno, err.colno) from None
        ws = workspace_from_json(doc)
        return ws.with_q_at_one() if q_at_one else ws
    return parse_workspace(text, q_at_one)
