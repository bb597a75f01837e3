"""CLI surface: grammar errors with positions, round-trips, subcommands,
exit codes, certificate paths, determinism."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from agekit.cli import main
from agekit.errors import ParseError
from agekit.parser import Catalog, parse_input, render_class, render_reduct
from conftest import CATALOG_FILES, catalog_path, catalog_text


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


class TestParsing:
    def test_linord_normalizes_to_four_bounds(self):
        # a redundant extra bound collapses under normalization
        text = catalog_text("linord.cls") + """
class fat
  sig lt/2
  bound size=1: lt(0,0)
  bound size=2: lt(0,1) lt(1,0)
  bound size=2:
  bound size=3: lt(0,1) lt(1,2) lt(2,0)
  bound size=3: lt(0,1) lt(1,0) lt(2,2)
  bound size=2: lt(1,0) lt(0,1)
  assert homogeneous ramsey
end
"""
        cat = parse_input(text)
        assert len(cat.bounded_class("fat").bounds) == 4
        assert cat.bounded_class("fat").bounds == cat.bounded_class("linord").bounds

    def test_undeclared_class_is_semantic_error(self):
        with pytest.raises(ParseError) as err:
            parse_input("reduct r over nowhere\n  rel a/1 := x0=x0\nend\n")
        assert "undeclared class" in str(err.value)

    def test_empty_file_is_empty_catalog(self):
        cat = parse_input("")
        assert not cat.classes and not cat.reducts

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_input("class a\n  sig E/2\n  bond size=1: E(0,0)\nend\n")
        assert err.value.line == 3

    def test_formula_error_carries_position(self):
        bad = ("class a\n  sig E/2\n  assert homogeneous\nend\n"
               "reduct r over a\n  rel q/2 := E(x0,)\nend\n")
        with pytest.raises(ParseError) as err:
            parse_input(bad)
        assert err.value.line == 6

    def test_arity_mismatch_in_bound(self):
        with pytest.raises(ParseError):
            parse_input("class a\n  sig E/2\n  bound size=1: E(0)\nend\n")

    def test_comments_and_blanks_ignored(self):
        cat = parse_input("# nothing\n\n" + catalog_text("point.cls"))
        assert "point" in cat.classes


class TestRoundTrip:
    def test_catalog_files_round_trip_byte_identically(self):
        for name in CATALOG_FILES:
            cat = parse_input(catalog_text(name))
            rendered = "".join(
                render_class(cat.classes[c]) for c in cat.classes
            ) + "".join(render_reduct(cat.reducts[r]) for r in cat.reducts)
            cat2 = parse_input(rendered)
            rendered2 = "".join(
                render_class(cat2.classes[c]) for c in cat2.classes
            ) + "".join(render_reduct(cat2.reducts[r]) for r in cat2.reducts)
            assert rendered == rendered2
            assert cat.classes == cat2.classes
            assert cat.reducts.keys() == cat2.reducts.keys()

    def test_orbit_literal_reducts_round_trip(self, catalog):
        from agekit.core import compute_core
        from agekit.definability import ep_expand
        p = compute_core(catalog.reduct("Rg"))
        expanded = ep_expand(p, 2)
        text = render_class(p.base_out) + render_reduct(expanded)
        cat = parse_input(text)
        again = render_class(cat.sole_class()) + render_reduct(
            cat.reduct(expanded.name))
        assert text == again


class TestSubcommands:
    def test_check_ok(self, capsys):
        code, out = run_cli(["check", catalog_path("linord.cls")], capsys)
        assert code == 0 and "verified up to cap" in out

    def test_check_reports_failure(self, capsys):
        code, out = run_cli(["check", catalog_path("maxdeg1.cls")], capsys)
        assert code == 2 and "FAILS" in out

    def test_orbits(self, capsys):
        code, out = run_cli(
            ["orbits", catalog_path("linord.cls"), "--k", "2"], capsys)
        assert code == 0
        assert "orbit count at level 2: 3" in out

    def test_behaviours(self, capsys):
        code, out = run_cli(
            ["behaviours", catalog_path("linord.cls")], capsys)
        assert code == 0 and "realizable behaviours: 3" in out

    def test_core_golden_files(self, tmp_path, capsys):
        golden = Path(__file__).parent / "golden" / "qleq_core"
        out_dir = tmp_path / "core"
        code, out = run_cli(
            ["core", catalog_path("linord.cls"), "--reduct", "Qleq",
             "--witness-out", str(out_dir)], capsys)
        assert code == 0
        for name in ("core_base.cls", "core_reduct.cls", "core_witness.bhv"):
            assert (out_dir / name).read_bytes() == (golden / name).read_bytes()

    def test_core_report_matches_golden(self, capsys):
        golden = Path(__file__).parent / "golden" / "qleq_core" / "report.txt"
        code, out = run_cli(
            ["core", catalog_path("linord.cls"), "--reduct", "Qleq"], capsys)
        assert code == 0 and out == golden.read_text()

    def test_bidef_yes_then_verify(self, tmp_path, capsys):
        w = tmp_path / "w"
        code, _ = run_cli(
            ["bidef", catalog_path("linord.cls"), catalog_path("linord.cls"),
             "--reducts", "Qlt", "QltRev", "--mode", "fo",
             "--witness-out", str(w)], capsys)
        assert code == 0
        code, out = run_cli(["verify", str(w)], capsys)
        assert code == 0 and "CERTIFICATE-OK" in out

    def test_bidef_no_exit_code(self, capsys):
        code, out = run_cli(
            ["bidef", catalog_path("linord.cls"), catalog_path("linord.cls"),
             "--reducts", "Qleq", "Qlt", "--mode", "fo"], capsys)
        assert code == 1 and "verdict: NO" in out

    def test_biint_precondition_exit_code(self, capsys):
        code, out = run_cli(
            ["biint", catalog_path("maxdeg1.cls"), catalog_path("maxdeg1.cls"),
             "--reducts", "M1", "M1", "--mode", "ep"], capsys)
        assert code == 2 and "PRECONDITION-FAILED" in out

    def test_input_error_exit_code(self, capsys):
        code = main(["orbits", "/nonexistent/file.cls"])
        capsys.readouterr()
        assert code == 3

    def test_definable_query_exit_codes(self, capsys):
        base = ["definable", catalog_path("linord.cls"), "--reduct", "Qlt",
                "--mode", "pp"]
        code, out = run_cli(
            base + ["--query", "!(x0=x1)", "--query-arity", "2"], capsys)
        assert code == 1 and "NOT-DEFINABLE" in out
        code, out = run_cli(
            base + ["--query", "lt(x0,x1)", "--query-arity", "2"], capsys)
        assert code == 0 and "verdict: DEFINABLE" in out

    def test_json_format(self, capsys):
        code, out = run_cli(
            ["orbits", catalog_path("linord.cls"), "--format", "json"], capsys)
        assert code == 0
        data = json.loads(out)
        assert data["count"] == 3 and len(data["orbits"]) == 3

    def test_probe_subcommand(self, capsys):
        code, out = run_cli(
            ["probe", catalog_path("linord.cls"), "--trials", "20",
             "--max-size", "6", "--seed", "5"], capsys)
        assert code == 0 and "verdict: OK" in out


class TestDeterminism:
    def test_reports_byte_identical_across_runs(self, capsys):
        argvs = (
            ["orbits", catalog_path("linord.cls")],
            ["behaviours", catalog_path("graphs.cls")],
            ["core", catalog_path("graphs.cls"), "--reduct", "Rg"],
            ["bidef", catalog_path("linord.cls"), catalog_path("linord.cls"),
             "--reducts", "Qlt", "QltRev"],
            ["probe", catalog_path("linord.cls"), "--trials", "10", "--seed", "3"],
            ["definable", catalog_path("linord.cls"), "--reduct", "Qlt",
             "--mode", "pp"],
        )
        for argv in argvs:
            _, first = run_cli(list(argv), capsys)
            _, second = run_cli(list(argv), capsys)
            assert first == second, argv

    def test_reports_stable_in_fresh_process(self):
        # caches empty vs warm must not change bytes
        argv = [sys.executable, "-m", "agekit.cli", "bidef",
                catalog_path("linord.cls"), catalog_path("linord.cls"),
                "--reducts", "Qlt", "QltRev"]
        a = subprocess.run(argv, capture_output=True, text=True)
        b = subprocess.run(argv, capture_output=True, text=True)
        assert a.returncode == 0 and a.stdout == b.stdout

    def test_timings_go_to_stderr(self):
        argv = [sys.executable, "-m", "agekit.cli", "orbits",
                catalog_path("linord.cls")]
        r = subprocess.run(argv, capture_output=True, text=True)
        assert "elapsed" in r.stderr and "elapsed" not in r.stdout


class TestCertificateFiles:
    def test_emitted_files_reload(self, tmp_path, capsys):
        w = tmp_path / "w"
        run_cli(["core", catalog_path("bipartite.cls"), "--reduct", "Kww",
                 "--witness-out", str(w)], capsys)
        cat = parse_input((w / "core_base.cls").read_text())
        cat = parse_input((w / "core_reduct.cls").read_text(), cat)
        assert cat.reducts
        from agekit.canonical import parse_behaviour
        from agekit.parser import Catalog
        base_cat = parse_input(catalog_text("bipartite.cls"))
        xi = parse_behaviour((w / "core_witness.bhv").read_text(),
                             base_cat.bounded_class("bipartite"),
                             base_cat.bounded_class("bipartite"), 2)
        assert xi.table == (0, 0, 2)
