"""Command-line front end.

Exit codes: 0 ok, 1 validation failure, 2 parse error, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from typing import Callable, Sequence

from . import braided_der as bd
from .comodule_algebra import format_element, format_monomial
from .dsl import Workspace, load_workspace, serialize, workspace_from_json, workspace_to_json
from .errors import InvariantBreach, ParseError, ToricError, UnknownCommand, ValidationError
from .mapping_aut import hder_bracket, monoid_compose, te_aut_basis, verify_inverse
from .morphisms import compose, graded_points, hom_constraints
from .presentations import groebner, standard_basis
from .site import glue, pullback_cover, separation_defect, validate_cover

DEFAULT_CAP = 4
EXIT_OK, EXIT_VALIDATION, EXIT_PARSE, EXIT_INTERNAL = 0, 1, 2, 3


class CommandFailed(ValidationError):
    """A command ran but its check came out negative."""


def standard_workspace_text() -> str:
    return resources.files("toricnc").joinpath("data/standard.tc").read_text(encoding="utf-8")


# commands: each takes (workspace, args) and returns output lines ----------------------


def cmd_check(ws: Workspace, args) -> list[str]:
    lines = ws.validate()
    for argv in ws.commands:
        lines.append(f"> {' '.join(argv)}")
        lines.extend(run_command(ws, argv, default_cap=args.cap))
    return lines


def cmd_normalize(ws: Workspace, args) -> list[str]:
    a = ws.algebra(args.algebra)
    return [format_element(a.reduce(ws.parse_element(a, args.element)))]


def cmd_groebner(ws: Workspace, args) -> list[str]:
    g = groebner(ws.algebra(args.algebra))
    return [format_element(f) for f in g.basis] or ["0"]


def cmd_basis(ws: Workspace, args) -> list[str]:
    a = ws.algebra(args.algebra)
    lines = [f"cap: {args.cap}"]
    for deg, monos in standard_basis(a, args.cap).items():
        if args.degree is not None and deg != args.degree:
            continue
        names = ", ".join(format_monomial(a.free, m) or "1" for m in monos)
        lines.append(f"degree {list(deg)}: dim {len(monos)}: {names}")
    return lines


def cmd_points(ws: Workspace, args) -> list[str]:
    a = ws.algebra(args.algebra)
    pts = graded_points(a, args.degree, args.cap)
    return [f"cap: {args.cap}", f"dim: {len(pts)}"] + [format_element(p) for p in pts]


def cmd_hom_constraints(ws: Workspace, args) -> list[str]:
    sysm = hom_constraints(ws.algebra(args.source), ws.algebra(args.target), args.cap)
    return [f"cap: {args.cap}", f"unknowns: {len(sysm.unknowns)}"] + sysm.describe()


def cmd_cover_check(ws: Workspace, args) -> list[str]:
    c = ws.cover(args.cover)
    base = ws.covers[args.cover][0]
    if args.base != base:
        raise ValidationError(f"cover {args.cover} lives on {base}, not {args.base}")
    validate_cover(c)
    lines = [f"ok: cover {args.cover} on {base} with {len(c)} charts, partition of unity verified"]
    defect = separation_defect(c, args.cap)
    bad = {d: k for d, k in defect.items() if k}
    lines.append(f"separation up to cap {args.cap}: " + ("injective" if not bad else f"kernel in degrees {sorted(bad)}"))
    if bad:
        raise CommandFailed("\n".join(lines))
    return lines


def cmd_glue(ws: Workspace, args) -> list[str]:
    c = ws.cover(args.cover)
    if len(args.parts) != len(c):
        raise ValidationError(f"cover {args.cover} has {len(c)} charts, got {len(args.parts)} parts")
    parts = [ws.parse_element(ai, t) for t, (ai, _) in zip(args.parts, c.localizations)]
    return [f"cap: {args.cap}", format_element(glue(c, parts, args.cap))]


def cmd_pullback_cover(ws: Workspace, args) -> list[str]:
    _, m = ws.lookup(args.morphism, "morphisms")
    c = pullback_cover(ws.cover(args.cover), m)
    lines = [f"ok: pullback of {args.cover} along {args.morphism} is a covering family"]
    for s, a in zip(c.elements, c.witnesses):
        lines.append(f"{format_element(s)} | {format_element(a)}")
    return lines


def cmd_compose(ws: Workspace, args) -> list[str]:
    kind_f, f = ws.lookup(args.first, "morphisms", "stages")
    kind_g, g = ws.lookup(args.second, "morphisms", "stages")
    if kind_f != kind_g:
        raise ValidationError("cannot compose a morphism with a stage element")
    if kind_f == "morphisms":
        return [str(compose(f, g))]
    h = monoid_compose(f, g)
    return ["[" + ", ".join(f"{gen.name} -> {format_element(im)}" for gen, im in zip(h.space.generators, h.images)) + "]"]


def cmd_inverse_check(ws: Workspace, args) -> list[str]:
    _, g = ws.lookup(args.first, "stages")
    _, gi = ws.lookup(args.second, "stages")
    if not verify_inverse(g, gi):
        raise CommandFailed(f"{args.second} is not a two-sided inverse of {args.first}")
    return [f"ok: {args.second} is a two-sided inverse of {args.first}"]


def cmd_te_aut(ws: Workspace, args) -> list[str]:
    basis = te_aut_basis(ws.algebra(args.space), ws.algebra(args.stage), args.cap)
    return [f"cap: {args.cap}", f"dim: {len(basis)}"] + [str(v) for v in basis]


def cmd_der_basis(ws: Workspace, args) -> list[str]:
    basis = bd.der_basis(ws.algebra(args.algebra), args.cap)
    return [f"cap: {args.cap}", f"dim: {len(basis)}"] + [f"degree {list(L.degree())}: {L}" for L in basis]


def cmd_bracket(ws: Workspace, args) -> list[str]:
    kind_a, a = ws.lookup(args.first, "derivations", "hderivations")
    kind_b, b = ws.lookup(args.second, "derivations", "hderivations")
    if kind_a != kind_b:
        raise ValidationError("cannot bracket a braided derivation with a stage derivation")
    return [str(bd.der_bracket(a, b) if kind_a == "derivations" else hder_bracket(a, b))]


def cmd_xi_check(ws: Workspace, args) -> list[str]:
    r = bd.verify_xi_iso(ws.algebra(args.space), ws.algebra(args.stage), args.cap)
    lines = r.lines()
    lines.insert(1, f"dimensions: {r.dim_j} = {r.dim_te}" if r.dim_j == r.dim_te else f"dimensions: {r.dim_j} != {r.dim_te}")
    if not r.ok:
        raise CommandFailed("\n".join(lines))
    return lines


def cmd_export(ws: Workspace, args) -> list[str]:
    text = json.dumps(workspace_to_json(ws), indent=2, sort_keys=False)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        return [f"wrote {args.output}"]
    return [text]


def cmd_import(ws: Workspace, args) -> list[str]:
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err.msg}", err.lineno, err.colno) from None
    imported = workspace_from_json(doc)
    return [serialize(imported).rstrip("\n")]


def _degree(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace("(", "").replace(")", "").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must be comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UnknownCommand(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cap", type=int, default=argparse.SUPPRESS, help=f"total-degree cap (default {DEFAULT_CAP})")
    common.add_argument("--q1", action="store_true", default=argparse.SUPPRESS, help="specialize q to 1 (theta = 0)")

    p = _Parser(prog="toricnc", description="Exact computations with braided-commutative algebras over a torus.", parents=[common])
    p.add_argument("-w", "--workspace", help="workspace file (DSL or JSON); defaults to the bundled examples")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, fn: Callable, help_: str, *positionals: str, **extra):
        sp = sub.add_parser(name, help=help_, parents=[common])
        for pos in positionals:
            if pos.endswith("*"):
                sp.add_argument(pos[:-1], nargs="*")
            else:
                sp.add_argument(pos)
        for flag, kw in extra.items():
            sp.add_argument(f"--{flag}", **kw)
        sp.set_defaults(func=fn)

    add("check", cmd_check, "validate every object and run stored commands")
    add("normalize", cmd_normalize, "reduce an element to normal form", "algebra", "element")
    add("groebner", cmd_groebner, "print the reduced Groebner basis", "algebra")
    add("basis", cmd_basis, "standard monomials by degree", "algebra", degree={"type": _degree, "default": None})
    add("points", cmd_points, "graded points of a given degree", "algebra", "degree")
    add("hom-constraints", cmd_hom_constraints, "cap-bounded Hom constraint system", "source", "target")
    add("cover-check", cmd_cover_check, "validate a cover and its separation", "base", "cover")
    add("glue", cmd_glue, "glue chart elements into a base element", "cover", "parts*")
    add("pullback-cover", cmd_pullback_cover, "pull a cover back along a morphism", "cover", "morphism")
    add("compose", cmd_compose, "compose morphisms or stage elements", "first", "second")
    add("inverse-check", cmd_inverse_check, "check two stage elements are mutually inverse", "first", "second")
    add("te-aut", cmd_te_aut, "tangent space of the automorphism group", "space", "stage")
    add("der-basis", cmd_der_basis, "basis of braided derivations", "algebra")
    add("bracket", cmd_bracket, "bracket of two derivations", "first", "second")
    add("xi-check", cmd_xi_check, "compare braided and stage derivations", "space", "stage")
    add("export", cmd_export, "write the workspace as JSON", output={"default": None})
    add("import", cmd_import, "print a JSON workspace as DSL text", "file")
    return p


def _finish_args(args) -> argparse.Namespace:
    args.cap = getattr(args, "cap", DEFAULT_CAP)
    args.q1 = getattr(args, "q1", False)
    if args.cap < 0:
        raise ValidationError("--cap must be nonnegative")
    if getattr(args, "degree", None) is not None and isinstance(args.degree, str):
        args.degree = _degree(args.degree)
    return args


def run_command(ws: Workspace, argv: Sequence[str], default_cap: int = DEFAULT_CAP) -> list[str]:
    """Run one command line against an already loaded workspace."""
    args = build_parser().parse_args(list(argv))
    if not hasattr(args, "cap"):
        args.cap = default_cap
    args = _finish_args(args)
    if args.q1:
        ws = ws.with_q_at_one()
    return args.func(ws, args)


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _finish_args(build_parser().parse_args(argv))
        if args.workspace:
            with open(args.workspace, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = standard_workspace_text()
        ws = load_workspace(text, q_at_one=args.q1)
        lines = args.func(ws, args)
    except ParseError as e:
        print(f"parse error: {e}", file=err)
        return EXIT_PARSE
    except CommandFailed as e:
        print(str(e), file=out)
        return EXIT_VALIDATION
    except ValidationError as e:
        print(f"validation error: {e}", file=err)
        return EXIT_VALIDATION
    except (InvariantBreach, ToricError) as e:
        print(f"internal error: {e}", file=err)
        return EXIT_INTERNAL
    except OSError as e:
        print(f"validation error: {e}", file=err)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001 - any other failure is a bug
        print(f"internal error: {type(e).__name__}: {e}", file=err)
        return EXIT_INTERNAL
    for line in lines:
        print(line, file=out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
