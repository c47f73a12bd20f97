"""check_judgement against brute-force enumeration of the declarative rules."""

import pytest

from flowlat.lang import parse_program
from flowlat.lattice import chain3, two_point
from flowlat.oracle import DerivationOracle, enumerate_programs, small_expressions
from flowlat.security_types import Judgement, check_judgement
from tests.conftest import make_env


class TestEnumeration:
    def test_program_count(self):
        assert len(enumerate_programs(["a", "b"], 1)) == 9
        assert len(enumerate_programs(["a", "b"], 2)) == 450

    def test_small_expressions(self):
        assert [str(e) for e in small_expressions(["a", "b"])] == ["0", "a", "b", "a + b"]
        assert len(small_expressions(["a"])) == 2


class TestOracle:
    def test_counter_loop(self, lat2):
        oracle = DerivationOracle(lat2, ["l", "h"])
        program = parse_program("while h do l := l + 1 end")
        pre = make_env(lat2, l="L", h="H")
        assert oracle.is_derivable("L", pre, program, make_env(lat2, l="H", h="H"))
        assert not oracle.is_derivable("L", pre, program, pre)

    def test_incomplete_example(self, lat2):
        oracle = DerivationOracle(lat2, ["l", "h"])
        env = make_env(lat2, l="L", h="H")
        assert not oracle.is_derivable("L", env, parse_program("if h == 0 then l := h else l := 0 end"), env)

    def test_environment_count(self):
        assert len(DerivationOracle(chain3(), ["a", "b"]).environments) == 9

    @pytest.mark.parametrize("depth", [1, 2])
    def test_agrees_with_check_judgement(self, depth):
        lattice = two_point()
        oracle = DerivationOracle(lattice, ["a", "b"])
        for program in enumerate_programs(["a", "b"], depth):
            derivable = oracle.derivable(program)
            for pc in oracle.levels:
                for pre in oracle.environments:
                    for post in oracle.environments:
                        expected = (pc, pre, post) in derivable
                        assert check_judgement(Judgement(pc, pre, program, post)) == expected, program

    def test_agrees_over_chain(self):
        lattice = chain3()
        oracle = DerivationOracle(lattice, ["a", "b"])
        programs = enumerate_programs(["a", "b"], 2)[::15]
        for program in programs:
            for pc in oracle.levels:
                for pre in oracle.environments:
                    for post in oracle.environments:
                        assert check_judgement(Judgement(pc, pre, program, post)) == oracle.is_derivable(
                            pc, pre, program, post
                        ), program
