"""Tests for the semantic checks: noninterference, safety and translation equivalence."""

import pytest

from flowlat.errors import EmptyDomainError, FloatingVariableError, UndeclaredVariableError
from flowlat.harness import (
    Exhaustive,
    Outcome,
    Random,
    Witness,
    compatible_store,
    equiv_check,
    in_play,
    ni_check,
    normalise_domain,
    replay,
    run_all,
    safety_check,
)
from flowlat.lang import NONTERMINATION, Store, Var, parse_program
from flowlat.lattice import powerset_lattice
from flowlat.security_types import spc
from flowlat.transform import translate
from tests.conftest import make_env

OVERWRITE_CHAIN = "l := h ; l := 0 ; h := 0 ; l := h"
INCOMPLETE = "if h == 0 then l := h else l := 0 end"


def fixed(text):
    return parse_program(text, fixed=True)


class TestPlumbing:
    def test_normalise_domain(self):
        assert normalise_domain([2, 0, 2, 1]) == (0, 1, 2)
        with pytest.raises(EmptyDomainError):
            normalise_domain([])

    def test_run_all_keeps_order(self):
        program = parse_program("while x do x := x - 1 end")
        stores = [Store({"x": n}) for n in (3, 0, 100)]
        results = run_all(program, stores, fuel=10)
        assert results[:2] == [Store({"x": 0}), Store({"x": 0})]
        assert results[2] is NONTERMINATION
        assert run_all(program, stores, fuel=10, workers=3) == results

    def test_compatible_store(self, lat2):
        env = make_env(lat2, l="L", h="H")
        store = compatible_store(Store({"l": 4, "h": 5}), env, [Var("l", "H")])
        assert store == Store({Var("l", "L"): 4, Var("h", "H"): 5, Var("l", "H"): 0})
        assert in_play(env, "h") == Var("h", "H")


class TestNoninterference:
    def test_direct_flow_counterexample(self, lat2):
        env = make_env(lat2, l="L", h="H")
        verdict = ni_check(lat2, parse_program("l := h"), env, env)
        assert verdict.outcome is Outcome.COUNTEREXAMPLE
        witness = verdict.witness
        assert witness.level == "L"
        assert witness.variable == Var("l")
        assert witness.first == Store({"h": 0, "l": 0})
        assert witness.second == Store({"h": 1, "l": 0})
        assert replay(witness)

    def test_semantically_secure_program_passes(self, lat2):
        env = make_env(lat2, l="L", h="H")
        verdict = ni_check(lat2, parse_program(INCOMPLETE), env, env)
        assert verdict.outcome is Outcome.PASS
        assert verdict.holds
        assert verdict.pairs_tested > 0

    def test_overwritten_flow_passes(self, lat2):
        env = make_env(lat2, l="L", h="H")
        assert ni_check(lat2, parse_program("l := h ; l := 0"), env, env).holds

    def test_typed_post_passes(self, lat2):
        pre = make_env(lat2, l="L", h="H")
        post = make_env(lat2, l="H", h="H")
        assert ni_check(lat2, parse_program("l := h"), pre, post).holds

    def test_random_mode_finds_direct_flow(self, lat2):
        env = make_env(lat2, l="L", h="H")
        verdict = ni_check(lat2, parse_program("l := h"), env, env, mode=Random(seed=3, trials=50))
        assert verdict.outcome is Outcome.COUNTEREXAMPLE
        assert replay(verdict.witness)

    def test_diamond_levels(self, lat4):
        pre = make_env(lat4, a="M", b="N", c="L")
        bad = make_env(lat4, a="M", b="N", c="M")
        program = parse_program("c := b")
        verdict = ni_check(lat4, program, pre, bad, domain=(0, 1, 2))
        assert verdict.outcome is Outcome.COUNTEREXAMPLE
        assert lat4.leq(bad["c"], verdict.witness.level)
        assert ni_check(lat4, program, pre, spc(lat4, "L", pre, program)).holds

    def test_powerset_levels(self):
        lattice = powerset_lattice(["a", "b"])
        pre = make_env(lattice, a={"a"}, b={"b"})
        assert ni_check(lattice, parse_program("a := a + b"), pre, make_env(lattice, a={"a", "b"}, b={"b"})).holds
        verdict = ni_check(lattice, parse_program("a := a + b"), pre, pre)
        assert verdict.outcome is Outcome.COUNTEREXAMPLE
        assert replay(verdict.witness)

    def test_divergence_is_inconclusive(self, lat2):
        env = make_env(lat2, l="L", h="H")
        verdict = ni_check(lat2, parse_program("while 1 do l := h end"), env, env, fuel=4)
        assert verdict.outcome is Outcome.INCONCLUSIVE
        assert verdict.skipped == 4

    def test_termination_insensitive(self, lat2):
        env = make_env(lat2, l="L", h="H")
        verdict = ni_check(lat2, parse_program("while h do skip end"), env, env)
        assert verdict.holds
        assert verdict.skipped == 2

    def test_undeclared_variable(self, lat2):
        with pytest.raises(UndeclaredVariableError):
            ni_check(lat2, parse_program("l := z"), make_env(lat2, l="L"), make_env(lat2, l="L"))

    def test_soundness_on_corpus(self, corpus, corpus_lattice, corpus_envs):
        for program, pre in zip(corpus, corpus_envs):
            post = spc(corpus_lattice, corpus_lattice.bottom, pre, program)
            verdict = ni_check(corpus_lattice, program, pre, post)
            assert verdict.outcome is not Outcome.COUNTEREXAMPLE, verdict.witness


class TestSafety:
    def test_bottom_pc_is_vacuous(self, lat2):
        post = make_env(lat2, l="L", h="H")
        verdict = safety_check(parse_program("l := 1"), "L", post)
        assert verdict.holds
        assert verdict.pairs_tested == 0

    def test_low_write_under_high_pc(self, lat2):
        post = make_env(lat2, l="L", h="H")
        verdict = safety_check(parse_program("l := 0"), "H", post)
        assert verdict.outcome is Outcome.COUNTEREXAMPLE
        assert verdict.witness.variable == Var("l")
        assert verdict.witness.first["l"] == 1
        assert replay(verdict.witness)

    def test_high_write_under_high_pc(self, lat2):
        post = make_env(lat2, l="L", h="H")
        assert safety_check(parse_program("h := 1"), "H", post).holds

    def test_random_mode(self, lat2):
        post = make_env(lat2, l="L", h="H")
        verdict = safety_check(parse_program("l := l + 1"), "H", post, mode=Random(seed=1, trials=10))
        assert verdict.outcome is Outcome.COUNTEREXAMPLE

    def test_all_runs_diverge(self, lat2):
        post = make_env(lat2, l="L", h="H")
        verdict = safety_check(parse_program("while 1 do skip end"), "H", post, fuel=2)
        assert verdict.outcome is Outcome.INCONCLUSIVE

    def test_safety_on_corpus(self, corpus, corpus_lattice, corpus_envs):
        top = corpus_lattice.top
        for program, pre in zip(corpus, corpus_envs):
            post = spc(corpus_lattice, top, pre, program)
            verdict = safety_check(program, top, post)
            assert verdict.outcome is not Outcome.COUNTEREXAMPLE, verdict.witness


class TestEquivalence:
    def test_overwrite_chain_translation(self, lat2):
        env = make_env(lat2, l="L", h="H")
        program = parse_program(OVERWRITE_CHAIN)
        result = translate(lat2, "L", env, program)
        verdict = equiv_check(program, result.output, env, result.post, mode=Exhaustive())
        assert verdict.holds
        assert verdict.pairs_tested == 4

    def test_identity_against_skip(self, lat2):
        env = make_env(lat2, l="L", h="H")
        assert equiv_check(parse_program("l := l"), parse_program("skip"), env, env).holds

    def test_dropped_assignment_is_caught(self, lat2):
        pre = make_env(lat2, l="L", h="H")
        post = make_env(lat2, l="H", h="H")
        verdict = equiv_check(parse_program("l := h"), parse_program("skip"), pre, post)
        assert verdict.outcome is Outcome.COUNTEREXAMPLE
        witness = verdict.witness
        assert witness.kind == "equivalence"
        assert witness.variable == Var("l")
        assert witness.first == Store({"h": 1, "l": 0})
        assert replay(witness)

    def test_loop_translation(self, lat2):
        env = make_env(lat2, l="L", h="H")
        program = parse_program("while h do l := l + 1 ; h := h - 1 end")
        result = translate(lat2, "L", env, program)
        verdict = equiv_check(program, result.output, env, result.post, domain=(0, 1, 2))
        assert verdict.holds
        assert verdict.termination_mismatches == 0

    def test_floating_variable_in_fixed_program(self, lat2):
        env = make_env(lat2, l="L")
        with pytest.raises(FloatingVariableError):
            equiv_check(parse_program("l := 0"), parse_program("l := 0"), env, env)

    def test_termination_mismatch_is_inconclusive(self, lat2):
        env = make_env(lat2, l="L")
        verdict = equiv_check(parse_program("skip"), fixed("while 1 do skip end"), env, env)
        assert verdict.outcome is Outcome.INCONCLUSIVE
        assert verdict.termination_mismatches == 2


class TestReplay:
    def test_unknown_kind(self, lat2):
        witness = Witness("mystery", parse_program("skip"), Store(), None, Var("x"), 1)
        with pytest.raises(ValueError):
            replay(witness)
