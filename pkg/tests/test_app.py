"""End-to-end tests of the flowlat command line."""

import json

import pytest

from flowlat.app import EXIT_ERROR, EXIT_FAILS, EXIT_HOLDS, build_parser, config_from_args, main, render_trace
from flowlat.config import Settings, parse_domain, settings_from
from flowlat.errors import ConfigError, InputError
from flowlat.formats import env_from_record, parse_record
from flowlat.lang import parse_program
from flowlat.lattice import diamond
from flowlat.powerset_lattice import PowersetLattice
from flowlat.principal import principal
from flowlat.security_types import TraceStep, spc
from flowlat.transform import translate
from tests.conftest import make_env

OVERWRITE_CHAIN = "l := h ; l := 0 ; h := 0 ; l := h\n"
INCOMPLETE = "if h == 0 then l := h else l := 0 end\n"
BRANCH = "if x then y := z else y := 0 end\n"
JOIN_THEN_LOOP = (
    "if x == 0 then y := y + 1 ; w := z end ;\n"
    "while x > 0 do z := z + w ; x := x - 1 ; z := x end\n"
)


@pytest.fixture
def write(tmp_path, monkeypatch):
    """Write a file under tmp_path and return its path as a string."""
    monkeypatch.chdir(tmp_path)
    # setenv first so teardown also drops anything a .env file loads
    for key in ("FLOWLAT_DOMAIN", "FLOWLAT_FUEL", "FLOWLAT_SEED", "FLOWLAT_TRIALS", "FLOWLAT_WORKERS", "FLOWLAT_LATTICE", "FLOWLAT_FORMAT"):
        monkeypatch.setenv(key, "")
        monkeypatch.delenv(key)

    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write


class TestInferAndCheck:
    def test_check_overwrite_chain_holds(self, write, capsys):
        prog = write("chain.while", OVERWRITE_CHAIN)
        status = main(["check", "--lattice", "two-point", "--env", "l:L,h:H", "--post", "l:L,h:H", prog])
        assert status == EXIT_HOLDS
        assert "verdict: holds" in capsys.readouterr().out

    def test_check_incomplete_fails(self, write, capsys):
        prog = write("inc.while", INCOMPLETE)
        status = main(["check", "--env", "l:L,h:H", "--post", "l:L,h:H", prog])
        assert status == EXIT_FAILS
        assert "verdict: fails" in capsys.readouterr().out

    def test_infer_diamond(self, write, capsys):
        prog = write("branch.while", BRANCH)
        assert main(["infer", "--lattice", "diamond", "--env", "x:M,y:L,z:N", prog]) == EXIT_HOLDS
        assert capsys.readouterr().out == "x : M\ny : H\nz : N\n"

    def test_infer_json(self, write, capsys):
        prog = write("branch.while", BRANCH)
        main(["infer", "--lattice", "diamond", "--env", "x:M,y:L,z:N", "--format", "json", prog])
        record = json.loads(capsys.readouterr().out)
        assert record == {"subcommand": "infer", "environment": {"x": "M", "y": "H", "z": "N"}}

    def test_infer_trace(self, write, capsys):
        prog = write("join_loop.while", JOIN_THEN_LOOP)
        main(["infer", "--lattice", "diamond", "--env", "w:L,x:M,y:N,z:H", "--trace", prog])
        out = capsys.readouterr().out
        assert "if x == 0    [w ↦ H, y ↦ H]" in out
        assert "  z := x    [z ↦ M]" in out

    def test_env_file_and_inline_override(self, write, capsys):
        prog = write("chain.while", OVERWRITE_CHAIN)
        env = write("pre.env", "# initial levels\nl : H\nh : H\n")
        status = main(["infer", "--env-file", env, "--env", "l:L", prog])
        captured = capsys.readouterr()
        assert status == EXIT_HOLDS
        assert "overrides" in captured.err
        assert captured.out == "h : L\nl : L\n"

    def test_missing_binding_is_input_error(self, write, capsys):
        prog = write("chain.while", OVERWRITE_CHAIN)
        assert main(["infer", "--env", "l:L", prog]) == EXIT_ERROR
        assert "does not bind h" in capsys.readouterr().err

    def test_syntax_error_reports_position(self, write, capsys):
        prog = write("bad.while", "x := 1 ;\ny := \n")
        assert main(["infer", "--env", "x:L,y:L", prog]) == EXIT_ERROR
        err = capsys.readouterr().err
        assert err.startswith("❌ ")
        assert "bad.while:2" in err

    def test_unknown_element(self, write, capsys):
        prog = write("chain.while", OVERWRITE_CHAIN)
        assert main(["infer", "--env", "l:L,h:Q", prog]) == EXIT_ERROR
        assert "unknown lattice element" in capsys.readouterr().err

    def test_output_file(self, write, tmp_path, capsys):
        prog = write("branch.while", BRANCH)
        out = tmp_path / "post.env"
        main(["infer", "--lattice", "diamond", "--env", "x:M,y:L,z:N", "--output", str(out), prog])
        assert capsys.readouterr().out == ""
        assert out.read_text(encoding="utf-8") == "x : M\ny : H\nz : N\n"

    def test_long_program(self, write, capsys):
        prog = write("long.while", " ;\n".join(["x := x + 1"] * 2000) + "\n")
        assert main(["infer", "--env", "x:L", prog]) == EXIT_HOLDS
        assert capsys.readouterr().out == "x : L\n"

    def test_deep_nesting_is_reported(self, write, capsys):
        prog = write("deep.while", "if x then " * 1500 + "skip" + " end" * 1500 + "\n")
        assert main(["infer", "--env", "x:L", prog]) == EXIT_ERROR
        err = capsys.readouterr().err
        assert err.startswith("❌ ")
        assert "nested too deeply" in err


class TestPrincipalCommands:
    def test_principal(self, write, capsys):
        prog = write("branch.while", BRANCH)
        assert main(["principal", prog]) == EXIT_HOLDS
        assert capsys.readouterr().out == "x : {x}\ny : {x,z}\nz : {z}\n"

    def test_principal_independence(self, write, capsys):
        prog = write("branch.while", BRANCH)
        main(["principal", "--independence", prog])
        assert capsys.readouterr().out == "# independence\nx : {y,z}\ny : {y}\nz : {x,y}\n"

    def test_principal_universe_includes_env_names(self, write, capsys):
        prog = write("branch.while", BRANCH)
        assert main(["principal", "--env", "x:L,y:L,z:L,v:L", prog]) == EXIT_HOLDS
        out = capsys.readouterr().out
        assert out == "v : {v}\nx : {x}\ny : {x,z}\nz : {z}\n"

    def test_derive(self, write, capsys):
        prog = write("branch.while", BRANCH)
        main(["derive", "--lattice", "two-point", "--env", "x:L,y:L,z:H", prog])
        assert capsys.readouterr().out == "x : L\ny : H\nz : H\n"

    def test_reverse(self, write, capsys):
        prog = write("branch.while", BRANCH)
        main(["reverse", "--post", "x:L,y:H,z:H", prog])
        assert capsys.readouterr().out == "x : L\ny : H\nz : H\n"

    def test_subsume_universal_over_diamond(self, write, capsys):
        args = [
            "subsume",
            "--lattice", "powerset", "--env", "x:{x},y:{y},z:{z}", "--post", "x:{x},y:{x,z},z:{z}",
            "--lattice2", "diamond", "--env2", "x:M,y:L,z:N", "--post2", "x:M,y:H,z:N",
        ]
        assert main(args) == EXIT_HOLDS
        assert "verdict: holds" in capsys.readouterr().out

    def test_subsume_reports_distinguishing_program(self, capsys, write):
        args = ["subsume", "--env", "l:L,h:L", "--post", "l:L,h:H", "--env2", "l:L,h:H", "--post2", "l:L,h:H"]
        assert main(args) == EXIT_FAILS
        out = capsys.readouterr().out
        assert "violated pair: h -> l" in out
        assert "distinguishing program: l := h ; h := 0" in out

    def test_dual_round_trip(self, write, capsys):
        deps = write("deps.env", "x : {x}\ny : {x,z}\nz : {z}\n")
        main(["dual", deps])
        nabla = capsys.readouterr().out
        assert nabla == "# independence\nx : {y,z}\ny : {y}\nz : {x,y}\n"
        back = write("nabla.env", nabla)
        main(["dual", back])
        assert capsys.readouterr().out == "x : {x}\ny : {x,z}\nz : {z}\n"

    def test_check_independence(self, write, capsys):
        prog = write("branch.while", BRANCH)
        args = [
            "check", "--lattice", "powerset", "--independence",
            "--env", "x:{y,z},y:{x,z},z:{x,y}", "--post", "x:{y,z},y:{y},z:{x,y}", prog,
        ]
        assert main(args) == EXIT_HOLDS
        capsys.readouterr()
        args[-2] = "x:{y,z},y:{x,y},z:{x,y}"
        assert main(args) == EXIT_FAILS


class TestTransformCommands:
    def test_transform_overwrite_chain(self, write, capsys, tmp_path):
        prog = write("chain.while", OVERWRITE_CHAIN)
        emitted = tmp_path / "post.env"
        assert main(["transform", "--env", "l:L,h:H", "--emit-env", str(emitted), prog]) == EXIT_HOLDS
        assert capsys.readouterr().out == "l@H := h@H ; l@L := 0 ; h@L := 0 ; l@L := h@L\n"
        assert emitted.read_text(encoding="utf-8") == "h : L\nl : L\n"

    def test_transform_join_then_loop(self, write, capsys):
        prog = write("join_loop.while", JOIN_THEN_LOOP)
        main(["transform", "--lattice", "diamond", "--env", "w:L,x:M,y:N,z:H", "--format", "json", prog])
        record = json.loads(capsys.readouterr().out)
        assert "else w@H := w@L ; y@H := y@N end" in record["program"]
        assert record["program"].endswith("; z@H := z@M end")
        assert record["stats"] == {"copies": 3}

    def test_check_fixed(self, write, capsys):
        good = write("good.while", "l@H := h@H ; l@L := 0 ; h@L := 0 ; l@L := h@L\n")
        bad = write("bad.while", "l@L := h@H\n")
        assert main(["check-fixed", "--pc", "L", good]) == EXIT_HOLDS
        assert main(["check-fixed", bad]) == EXIT_FAILS
        assert main(["check-fixed", "--pc", "H", write("pc.while", "l@L := 0\n")]) == EXIT_FAILS

    def test_check_fixed_rejects_floating(self, write, capsys):
        prog = write("float.while", "l := 0\n")
        assert main(["check-fixed", prog]) == EXIT_ERROR
        assert "floating variable" in capsys.readouterr().err


class TestHarnessCommands:
    def test_ni_passes_where_typing_fails(self, write, capsys):
        prog = write("inc.while", INCOMPLETE)
        status = main(["test-ni", "--env", "l:L,h:H", "--post", "l:L,h:H", "--domain", "0,1", prog])
        assert status == EXIT_HOLDS
        assert "verdict: pass" in capsys.readouterr().out

    def test_ni_counterexample(self, write, capsys):
        prog = write("leak.while", "l := h\n")
        status = main(["test-ni", "--env", "l:L,h:H", "--post", "l:L,h:H", "--format", "json", prog])
        assert status == EXIT_FAILS
        record = json.loads(capsys.readouterr().out)
        assert record["verdict"] == "counterexample"
        assert record["witness"]["variable"] == "l"
        assert record["witness"]["level"] == "L"
        assert record["witness"]["first"] == {"h": 0, "l": 0}
        assert record["witness"]["second"] == {"h": 1, "l": 0}

    def test_ni_inconclusive_warns(self, write, capsys):
        prog = write("loop.while", "while 1 do l := h end\n")
        status = main(["test-ni", "--env", "l:L,h:H", "--post", "l:L,h:H", "--fuel", "2", prog])
        captured = capsys.readouterr()
        assert status == EXIT_HOLDS
        assert "verdict: inconclusive" in captured.out
        assert "inconclusive" in captured.err

    def test_safety(self, write, capsys):
        prog = write("low.while", "l := 0\n")
        assert main(["test-safety", "--pc", "H", "--env", "l:L,h:H", "--post", "l:L,h:H", prog]) == EXIT_FAILS
        capsys.readouterr()
        high = write("high.while", "h := 1\n")
        assert main(["test-safety", "--pc", "H", "--env", "l:L,h:H", "--post", "l:L,h:H", high]) == EXIT_HOLDS

    def test_equiv_against_translation(self, write, capsys):
        prog = write("chain.while", OVERWRITE_CHAIN)
        assert main(["test-equiv", "--env", "l:L,h:H", "--mode", "random", "--trials", "20", prog]) == EXIT_HOLDS

    def test_equiv_against_file(self, write, capsys):
        prog = write("leak.while", "l := h\n")
        other = write("other.while", "skip\n")
        status = main(["test-equiv", "--env", "l:L,h:H", "--post", "l:H,h:H", "--against", other, prog])
        assert status == EXIT_FAILS


class TestLatticeValidate:
    def test_builtin(self, write, capsys):
        assert main(["lattice-validate", "diamond"]) == EXIT_HOLDS
        out = capsys.readouterr().out
        assert "lattice diamond: ok" in out
        assert "height: 3" in out

    def test_spec_file(self, write, capsys):
        spec = write("v.lat", "lattice vee\nelements A B C\norder A < B\norder A < C\n")
        assert main(["lattice-validate", spec]) == EXIT_ERROR
        assert "pair (B, C) has no upper bound" in capsys.readouterr().err

    def test_custom_lattice_for_check(self, write, capsys):
        spec = write("q.lat", "lattice quad\nelements L M N H\norder L < M\norder L < N\norder M < H\norder N < H\n")
        prog = write("branch.while", BRANCH)
        main(["infer", "--lattice", spec, "--env", "x:M,y:L,z:N", prog])
        assert capsys.readouterr().out == "x : M\ny : H\nz : N\n"


class TestRecordsParseBack:
    def test_infer(self, write, capsys):
        prog = write("branch.while", BRANCH)
        main(["infer", "--lattice", "diamond", "--env", "x:M,y:L,z:N", "--format", "json", prog])
        record = parse_record(capsys.readouterr().out)
        lattice = diamond()
        expected = spc(lattice, "L", make_env(lattice, x="M", y="L", z="N"), parse_program(BRANCH))
        assert env_from_record(lattice, record["environment"]) == expected

    def test_principal_over_powerset(self, write, capsys):
        prog = write("branch.while", BRANCH)
        main(["principal", "--format", "json", prog])
        record = parse_record(capsys.readouterr().out)
        lattice = PowersetLattice(frozenset({"x", "y", "z"}))
        assert record["environment"]["y"] == ["x", "z"]
        assert env_from_record(lattice, record["environment"]) == principal(parse_program(BRANCH)).deltaC

    def test_transform(self, write, capsys):
        prog = write("join_loop.while", JOIN_THEN_LOOP)
        main(["transform", "--lattice", "diamond", "--env", "w:L,x:M,y:N,z:H", "--format", "json", prog])
        record = parse_record(capsys.readouterr().out)
        lattice = diamond()
        result = translate(lattice, "L", make_env(lattice, w="L", x="M", y="N", z="H"), parse_program(JOIN_THEN_LOOP))
        assert env_from_record(lattice, record["environment"]) == result.post
        assert parse_program(record["program"], fixed=True) == result.output

    def test_rejects_foreign_json(self):
        with pytest.raises(InputError):
            parse_record("[1, 2]")
        with pytest.raises(InputError):
            parse_record('{"environment": {}}')


class TestConfiguration:
    def test_settings_from_environment(self):
        settings = settings_from({"FLOWLAT_DOMAIN": "0,1,2", "FLOWLAT_FUEL": "8", "FLOWLAT_FORMAT": "json"})
        assert settings.domain == (0, 1, 2)
        assert settings.fuel == 8
        assert settings.output_format == "json"
        assert settings.lattice == Settings().lattice

    def test_bad_settings(self):
        with pytest.raises(ConfigError):
            settings_from({"FLOWLAT_FUEL": "lots"})
        with pytest.raises(ConfigError):
            settings_from({"FLOWLAT_WORKERS": "0"})
        with pytest.raises(ConfigError):
            settings_from({"FLOWLAT_FORMAT": "yaml"})

    def test_parse_domain(self):
        assert parse_domain("0, 1,5") == (0, 1, 5)
        with pytest.raises(ConfigError):
            parse_domain(" , ")

    def test_flags_override_settings(self):
        args = build_parser().parse_args(["test-ni", "--fuel", "3", "prog.while"])
        config = config_from_args(args, Settings(fuel=10, lattice="diamond"))
        assert config.fuel == 3
        assert config.lattice == "diamond"
        assert config.target == "prog.while"

    def test_dotenv_file_is_read(self, write, capsys):
        write(".env", "FLOWLAT_FORMAT=json\n")
        prog = write("branch.while", BRANCH)
        main(["principal", prog])
        assert json.loads(capsys.readouterr().out)["subcommand"] == "principal"


class TestRenderTrace:
    def test_indentation_and_deltas(self):
        lattice = diamond()
        steps = [
            TraceStep(0, "if x == 0", (("w", "L", "H"),)),
            TraceStep(1, "w := z", (("w", "L", "H"),)),
            TraceStep(0, "while x > 0", (), 1),
        ]
        assert render_trace(lattice, steps) == ["if x == 0    [w ↦ H]", "  w := z    [w ↦ H]", "while x > 0"]
