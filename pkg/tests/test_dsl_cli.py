import io
import json

import pytest

from toricnc import cli
from toricnc.cli import main, run_command, standard_workspace_text
from toricnc.dsl import (
    load_workspace,
    parse_workspace,
    serialize,
    workspace_from_json,
    workspace_to_json,
)
from toricnc.errors import InvariantBreach, ParseError, UnknownCommand, ValidationError

TORUS = "theta [[0,1],[-1,0]]; algebra T = free(x:(1,0), xs:(-1,0)) / { xs*x - 1 };"

EXTRAS = """
theta [[0, 1], [-1, 0]];
note "stage elements over the ground field";
algebra Fm = free(x:(1, 0));
algebra B = free(b:(-1, 0));
algebra T2 = free(x1:(1, 0)^-1 as x1s, x2:(0, 1)^-1 as x2s);
stage g on Fm over K = [3*x];
stage gi on Fm over K = [1/3*x];
hderivation v on Fm over B = [x];
hderivation w on Fm over B = [b*x^2];
derivation e on T2 = [x1, -x1s, 0, 0];
run der-basis Fm --cap 2;
run xi-check Fm K --cap 1;
"""


def run(argv, workspace=None):
    out, err = io.StringIO(), io.StringIO()
    if workspace is not None:
        argv = ["-w", str(workspace)] + list(argv)
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def extras_file(tmp_path):
    path = tmp_path / "extras.tc"
    path.write_text(EXTRAS, encoding="utf-8")
    return path


class TestParse:
    def test_torus(self):
        ws = parse_workspace(TORUS)
        t = ws.algebra("T")
        assert t.free.names == ("x", "xs")
        assert t.free.degrees == ((1, 0), (-1, 0))
        assert [str(r) for r in t.relations] == ["x*xs - 1"]
        assert ws.validate()

    def test_empty_input(self):
        ws = parse_workspace("")
        assert ws.deformation is None and not ws.algebras
        with pytest.raises(ValidationError):
            ws.require_deformation()

    def test_algebra_before_theta(self):
        with pytest.raises(ParseError, match="theta must be declared"):
            parse_workspace("algebra F = free(x:(1,0));")

    def test_mismatched_relation_names_it(self):
        text = "theta [[0,1],[-1,0]]; algebra Bad = free(x1:(1,0), x2:(0,1)) / { x1 + x2 };"
        with pytest.raises(ValidationError, match="Bad"):
            parse_workspace(text)

    @pytest.mark.parametrize(
        "text,line,column",
        [
            ("theta [[0,1],[-1,0]]\nalgebra T = free(x:(1,0));", 2, 1),
            ("theta [[0,1],[-1,0]];\nalgebra T = free(x:(1,0) / {};", 2, 26),
            ("theta [[0,1],[-1,0]];\nfrobnicate;", 2, 1),
        ],
    )
    def test_parse_errors_carry_position(self, text, line, column):
        with pytest.raises(ParseError) as info:
            parse_workspace(text)
        assert (info.value.line, info.value.column) == (line, column)

    def test_duplicate_names(self):
        with pytest.raises(ParseError, match="already in use") as info:
            parse_workspace(TORUS + " algebra T = free(y:(0,0));")
        assert info.value.column == 84

    def test_compact_inverse_adds_relation(self, ws):
        t2 = ws.algebra("T2")
        assert t2.free.names == ("x1", "x1s", "x2", "x2s")
        assert t2.free.generators[0].invertible and t2.free.generators[2].invertible
        assert len(t2.relations) == 2

    def test_extras(self, extras_file):
        ws = parse_workspace(extras_file.read_text())
        assert set(ws.stages) == {"g", "gi"}
        assert set(ws.hderivations) == {"v", "w"}
        assert ws.notes == ["stage elements over the ground field"]
        assert ws.commands == [["der-basis", "Fm", "--cap", "2"], ["xi-check", "Fm", "K", "--cap", "1"]]

    def test_q_at_one(self, ws):
        ws1 = ws.with_q_at_one()
        assert all(v == 0 for row in ws1.deformation.theta for v in row)
        t2 = ws1.algebra("T2")
        assert t2.free.deformation == ws1.deformation


class TestRoundTrip:
    @pytest.mark.parametrize("source", ["standard", "extras", "torus"])
    def test_dsl_and_json(self, source, extras_file):
        text = {"standard": standard_workspace_text(), "extras": extras_file.read_text(), "torus": TORUS}[source]
        ws = parse_workspace(text)
        assert parse_workspace(serialize(ws)) == ws
        doc = workspace_to_json(ws)
        assert doc["version"] == 1
        assert workspace_from_json(json.loads(json.dumps(doc))) == ws
        assert load_workspace(json.dumps(doc)) == ws

    def test_serialize_is_stable(self, ws):
        assert serialize(parse_workspace(serialize(ws))) == serialize(ws)


class TestCommands:
    def test_normalize(self):
        code, out, _ = run(["normalize", "T", "xs*x*xs"])
        assert (code, out) == (0, "xs\n")

    def test_cover_check(self):
        code, out, _ = run(["cover-check", "S2", "cover1"])
        assert code == 0
        assert out.startswith("ok: cover cover1 on S2")
        assert "separation up to cap 4: injective" in out

    def test_cover_check_wrong_base(self):
        code, _, err = run(["cover-check", "S4", "cover1"])
        assert code == 1 and "cover1" in err

    def test_xi_check(self):
        code, out, _ = run(["xi-check", "Fm", "K", "--cap", "1"])
        assert code == 0
        assert "dimensions: 1 = 1" in out
        assert "bijective: yes" in out

    def test_cap_before_subcommand(self):
        assert run(["--cap", "1", "xi-check", "Fm", "K"])[1] == run(["xi-check", "Fm", "K", "--cap", "1"])[1]

    def test_groebner_and_basis(self):
        code, out, _ = run(["groebner", "T"])
        assert (code, out) == (0, "x*xs - 1\n")
        code, out, _ = run(["basis", "T", "--cap", "2", "--degree", "0,0"])
        assert out.splitlines() == ["cap: 2", "degree [0, 0]: dim 1: 1"]

    def test_points(self):
        code, out, _ = run(["points", "ATFm", "1,0", "--cap", "5"])
        assert code == 0
        assert out.splitlines() == ["cap: 5", "dim: 4", "x", "ys", "y*x^2", "y^2*x^3"]

    def test_hom_constraints(self):
        code, out, _ = run(["hom-constraints", "T", "T", "--cap", "1"])
        assert code == 0
        assert "unknowns: 2" in out
        assert "relation 0" in out

    def test_glue_and_pullback(self):
        code, out, _ = run(["glue", "cover1", "z", "z", "--cap", "2"])
        assert (code, out.splitlines()) == (0, ["cap: 2", "z"])
        code, out, _ = run(["pullback-cover", "cover4", "ell1"])
        assert code == 0 and out.startswith("ok: pullback")

    def test_derivation_commands(self):
        code, out, _ = run(["der-basis", "Fm", "--cap", "1"])
        assert out.splitlines() == ["cap: 1", "dim: 2", "degree [-1, 0]: (1)*d_x", "degree [0, 0]: (x)*d_x"]
        code, out, _ = run(["bracket", "xd", "d"])
        assert (code, out) == (0, "(-1)*d_x\n")
        code, out, _ = run(["te-aut", "T", "K", "--cap", "2"])
        assert out.splitlines()[:2] == ["cap: 2", "dim: 1"]

    def test_stage_commands(self, extras_file):
        code, out, _ = run(["compose", "g", "gi"], extras_file)
        assert (code, out) == (0, "[x -> x]\n")
        assert run(["inverse-check", "g", "gi"], extras_file)[0] == 0
        code, out, _ = run(["inverse-check", "g", "g"], extras_file)
        assert code == 1 and "not a two-sided inverse" in out
        code, out, _ = run(["bracket", "v", "w"], extras_file)
        assert (code, out) == (0, "[x -> b*x^2]\n")

    def test_compose_morphisms(self):
        code, out, _ = run(["compose", "ell1", "ell1"])
        assert code == 1

    def test_check_runs_stored_commands(self, extras_file):
        code, out, _ = run(["check"], extras_file)
        assert code == 0
        assert "> der-basis Fm --cap 2" in out
        assert "bijective: yes" in out

    def test_q1(self):
        code, out, _ = run(["normalize", "T2", "x2*x1", "--q1"])
        assert (code, out) == (0, "x1*x2\n")
        code, out, _ = run(["normalize", "T2", "x2*x1"])
        assert out == "q*x1*x2\n"

    def test_run_command_helper(self, ws):
        assert run_command(ws, ["normalize", "T", "x*xs"]) == ["1"]
        with pytest.raises(UnknownCommand):
            run_command(ws, ["frobnicate"])


class TestExitCodes:
    def test_unknown_command(self):
        assert run(["frobnicate"])[0] == 1

    def test_unknown_object(self):
        code, _, err = run(["normalize", "Nope", "x"])
        assert code == 1 and "Nope" in err

    def test_parse_error_in_element(self):
        assert run(["normalize", "T", "x +"])[0] == 2

    def test_parse_error_in_workspace(self, tmp_path):
        bad = tmp_path / "bad.tc"
        bad.write_text("theta [[0,1],[-1,0]]\nalgebra", encoding="utf-8")
        code, _, err = run(["check"], bad)
        assert code == 2 and "line 2" in err

    def test_missing_file(self, tmp_path):
        assert run(["check"], tmp_path / "missing.tc")[0] == 1

    def test_internal_error(self, monkeypatch):
        def boom(ws, args):
            raise InvariantBreach("forced")

        monkeypatch.setattr(cli, "cmd_groebner", boom)
        code, _, err = run(["groebner", "T"])
        assert code == 3 and "forced" in err

    def test_negative_cap(self):
        assert run(["basis", "T", "--cap", "-1"])[0] == 1


class TestExportImport:
    def test_round_trip_through_files(self, tmp_path, extras_file):
        target = tmp_path / "ws.json"
        code, out, _ = run(["export", "--output", str(target)], extras_file)
        assert code == 0 and out == f"wrote {target}\n"
        code, out, _ = run(["import", str(target)])
        assert code == 0
        assert parse_workspace(out) == parse_workspace(extras_file.read_text())
        assert run(["check"], target)[0] == 0

    def test_import_bad_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert run(["import", str(bad)])[0] == 2

    def test_export_is_deterministic(self):
        first, second = run(["export"]), run(["export"])
        assert first == second
        assert json.loads(first[1])["version"] == 1

    @pytest.mark.parametrize("argv", [["check"], ["basis", "S4", "--cap", "3"], ["te-aut", "Fm", "Fm", "--cap", "3"]])
    def test_outputs_are_deterministic(self, argv):
        assert run(argv) == run(argv)
