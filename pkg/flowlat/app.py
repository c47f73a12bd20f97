#!/usr/bin/env python3
"""
flowlat - flow-sensitive information-flow analysis for While programs.

Results go to stdout (or --output); status and diagnostics go to stderr.
Exit status: 0 when the verdict holds, 1 when it fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .config import OUTPUT_FORMATS, Settings, load_settings, parse_domain
from .errors import ConfigError, FlowlatError, InputError, ParseError
from .formats import (
    RawEnv,
    Record,
    env_record,
    level_value,
    parse_env_text,
    parse_inline_env,
    render_env,
    render_json,
    resolve_env,
    verdict_stats,
    witness_record,
)
from .harness import Exhaustive, NIVerdict, Outcome, Random, equiv_check, ni_check, safety_check
from .lang import Command, parse_program, pretty_print, program_variables, render_store
from .lattice import BUILTIN_LATTICES, Lattice, builtin_lattice, parse_lattice_spec
from .powerset_lattice import PowersetLattice
from .principal import (
    IndependenceEnv,
    Typing,
    check_independence,
    derive_greatest,
    derive_smallest,
    distinguishing_program,
    from_independence,
    principal,
    subsumption_violations,
    to_independence,
)
from .security_types import Judgement, TraceStep, TypeEnv, check_judgement, spc
from .transform import check_fixed, translate

SUBCOMMANDS = (
    "infer",
    "check",
    "principal",
    "derive",
    "reverse",
    "subsume",
    "dual",
    "transform",
    "check-fixed",
    "test-ni",
    "test-safety",
    "test-equiv",
    "lattice-validate",
)

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_ERROR = 2


@dataclass
class RunConfig:
    """One resolved command-line invocation."""

    subcommand: str
    target: str | None = None
    lattice: str = "two-point"
    lattice2: str | None = None
    env: str | None = None
    env_file: str | None = None
    post: str | None = None
    post_file: str | None = None
    env2: str | None = None
    post2: str | None = None
    pc: str | None = None
    output_format: str = "text"
    trace: bool = False
    independence: bool = False
    domain: tuple[int, ...] = (0, 1)
    fuel: int = 64
    seed: int = 0
    trials: int = 200
    mode: str = "exhaustive"
    workers: int = 1
    emit_env: str | None = None
    output: str | None = None
    against: str | None = None
    verbose: bool = False


@dataclass
class _Output:
    """Collects result lines for stdout or the --output file."""

    config: RunConfig
    lines: list[str] = field(default_factory=list)

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def text(self, block: str) -> None:
        self.lines.extend(block.rstrip("\n").splitlines())

    def record(self, record: Record) -> None:
        self.text(render_json(record))

    def flush(self) -> None:
        body = "".join(f"{line}\n" for line in self.lines)
        if self.config.output:
            Path(self.config.output).write_text(body, encoding="utf-8")
        else:
            sys.stdout.write(body)


def _warn(message: str) -> None:
    print(f"⚠️  {message}", file=sys.stderr)


def _debug(config: RunConfig, message: str) -> None:
    if config.verbose:
        print(f"[DEBUG] {message}", file=sys.stderr)


# --- input resolution ----------------------------------------------------------


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _require_target(config: RunConfig, what: str = "program") -> str:
    if not config.target:
        raise InputError(f"{config.subcommand} needs a {what} file", "<command line>")
    return config.target


def _load_program(config: RunConfig, fixed: bool = False) -> Command:
    path = _require_target(config)
    try:
        return parse_program(_read(path), fixed=fixed)
    except ParseError as exc:
        raise InputError(f"column {exc.column}: {exc.message}", path, exc.line) from None


def _raw_env(inline: str | None, path: str | None, label: str) -> RawEnv | None:
    """Merge a file environment with an inline one; inline bindings win."""
    from_file = parse_env_text(_read(path), path) if path else None
    from_inline = parse_inline_env(inline, label) if inline else None
    if from_file is None:
        return from_inline
    if from_inline is None:
        return from_file
    for name, level in from_inline["bindings"].items():
        if name in from_file["bindings"] and from_file["bindings"][name] != level:
            _warn(f"{label} binding {name}:{level} overrides {name} : {from_file['bindings'][name]} from {path}")
    merged = {**from_file["bindings"], **from_inline["bindings"]}
    lines = {k: v for k, v in from_file["lines"].items() if k not in from_inline["bindings"]}
    return RawEnv(bindings=merged, lines=lines, independence=from_file["independence"])


def _resolve_lattice(selector: str, universe: frozenset[str]) -> Lattice:
    if selector in BUILTIN_LATTICES:
        if selector == "powerset" and not universe:
            raise InputError("the powerset lattice needs at least one variable", "--lattice")
        return builtin_lattice(selector, universe)
    return parse_lattice_spec(_read(selector), selector)


def _env_for(
    lattice: Lattice, raw: RawEnv | None, label: str, required: frozenset[str] = frozenset()
) -> TypeEnv:
    if raw is None:
        raise InputError(f"no environment given (use {label} or {label}-file)", "<command line>")
    env = resolve_env(lattice, raw, label)
    missing = sorted(required - env.variables)
    if missing:
        raise InputError(f"environment does not bind {', '.join(missing)}", label)
    return env


def _universe(*raws: RawEnv | None, program: Command | None = None) -> frozenset[str]:
    names: set[str] = set()
    for raw in raws:
        if raw is not None:
            names.update(raw["bindings"])
    if program is not None:
        names.update(program_variables(program)[0])
    return frozenset(names)


def _pc(config: RunConfig, lattice: Lattice) -> Any:
    if config.pc is None:
        return lattice.bottom
    return lattice.parse_element(config.pc)


def _typing_inputs(config: RunConfig, need_post: bool = False) -> tuple[Command, Lattice, TypeEnv, TypeEnv | None]:
    program = _load_program(config)
    raw_pre = _raw_env(config.env, config.env_file, "--env")
    raw_post = _raw_env(config.post, config.post_file, "--post")
    lattice = _resolve_lattice(config.lattice, _universe(raw_pre, raw_post, program=program))
    floating = program_variables(program)[0]
    pre = _env_for(lattice, raw_pre, "--env", floating)
    post = None
    if raw_post is not None or need_post:
        post = _env_for(lattice, raw_post, "--post", floating)
    return program, lattice, pre, post


# --- rendering ------------------------------------------------------------------


def render_trace(lattice: Lattice, steps: Sequence[TraceStep]) -> list[str]:
    lines = []
    for step in steps:
        text = "  " * step.depth + step.statement
        if step.changes:
            delta = ", ".join(f"{name} ↦ {lattice.render(new)}" for name, _, new in step.changes)
            text += f"    [{delta}]"
        lines.append(text)
    return lines


def _trace_record(lattice: Lattice, steps: Sequence[TraceStep]) -> list[dict[str, Any]]:
    return [
        {
            "depth": step.depth,
            "statement": step.statement,
            "changes": {name: level_value(lattice, new) for name, _, new in step.changes},
        }
        for step in steps
    ]


def _debug_iterations(config: RunConfig, steps: Sequence[TraceStep]) -> None:
    for step in steps:
        if step.iterations is not None:
            _debug(config, f"{step.statement}: fixpoint after {step.iterations} iteration(s)")


def _emit_env(out: _Output, subcommand: str, env: TypeEnv, independence: bool = False, **extra: Any) -> None:
    if out.config.output_format == "json":
        record: Record = {"subcommand": subcommand, "environment": env_record(env)}
        if independence:
            record["independence"] = True
        record.update(extra)  # type: ignore[typeddict-item]
        out.record(record)
    else:
        out.text(render_env(env, independence))


def _emit_verdict(out: _Output, subcommand: str, holds: bool, **extra: Any) -> int:
    verdict = "holds" if holds else "fails"
    if out.config.output_format == "json":
        record: Record = {"subcommand": subcommand, "verdict": verdict}
        record.update(extra)  # type: ignore[typeddict-item]
        out.record(record)
    else:
        out.line(f"verdict: {verdict}")
    return EXIT_HOLDS if holds else EXIT_FAILS


# --- subcommands ----------------------------------------------------------------


def _cmd_infer(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, _ = _typing_inputs(config)
    pc = _pc(config, lattice)
    steps: list[TraceStep] = []
    post = spc(lattice, pc, pre, program, steps)
    _debug_iterations(config, steps)
    if config.output_format == "json":
        extra = {"trace": _trace_record(lattice, steps)} if config.trace else {}
        _emit_env(out, "infer", post, **extra)
    else:
        if config.trace:
            out.text("\n".join(render_trace(lattice, steps)))
            out.line()
        _emit_env(out, "infer", post)
    return EXIT_HOLDS


def _cmd_check(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, post = _typing_inputs(config, need_post=True)
    assert post is not None
    pc = _pc(config, lattice)
    if config.independence:
        if not isinstance(lattice, PowersetLattice):
            raise InputError("--independence needs the powerset lattice", "--lattice")
        holds = check_independence(
            pc, IndependenceEnv(lattice, pre), program, IndependenceEnv(lattice, post)
        )
        least = spc(lattice, pc, from_independence(pre), program)
        least_view: TypeEnv = to_independence(least)
    else:
        holds = check_judgement(Judgement(pc, pre, program, post))
        least = least_view = spc(lattice, pc, pre, program)
    if not holds:
        _debug(config, f"least post-environment is {least_view!r}")
    return _emit_verdict(out, "check", holds, environment=env_record(least_view))


def _cmd_principal(config: RunConfig, out: _Output) -> int:
    program = _load_program(config)
    # --env names widen the universe beyond the program's own variables
    pt = principal(program, _universe(_raw_env(config.env, config.env_file, "--env"), program=program))
    steps: list[TraceStep] = []
    if config.trace or config.verbose:
        spc(pt.lattice, pt.lattice.bottom, pt.delta0, program, steps)
        _debug_iterations(config, steps)
    result = to_independence(pt.deltaC) if config.independence else pt.deltaC
    if config.output_format == "json":
        extra = {"trace": _trace_record(pt.lattice, steps)} if config.trace else {}
        _emit_env(out, "principal", result, config.independence, **extra)
    else:
        if config.trace:
            out.text("\n".join(render_trace(pt.lattice, steps)))
            out.line()
        _emit_env(out, "principal", result, config.independence)
    return EXIT_HOLDS


def _cmd_derive(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, _ = _typing_inputs(config)
    pt = principal(program, pre.variables)
    _emit_env(out, "derive", derive_smallest(pt, pre))
    return EXIT_HOLDS


def _cmd_reverse(config: RunConfig, out: _Output) -> int:
    program = _load_program(config)
    raw_post = _raw_env(config.post, config.post_file, "--post")
    lattice = _resolve_lattice(config.lattice, _universe(raw_post, program=program))
    post = _env_for(lattice, raw_post, "--post", program_variables(program)[0])
    pt = principal(program, post.variables)
    _emit_env(out, "reverse", derive_greatest(pt, post))
    return EXIT_HOLDS


def _cmd_subsume(config: RunConfig, out: _Output) -> int:
    raw_pre, raw_post = _raw_env(config.env, config.env_file, "--env"), _raw_env(config.post, config.post_file, "--post")
    raw_pre2, raw_post2 = _raw_env(config.env2, None, "--env2"), _raw_env(config.post2, None, "--post2")
    universe = _universe(raw_pre, raw_post, raw_pre2, raw_post2)
    lattice1 = _resolve_lattice(config.lattice, universe)
    lattice2 = _resolve_lattice(config.lattice2 or config.lattice, universe)
    first = Typing(_env_for(lattice1, raw_pre, "--env"), _env_for(lattice1, raw_post, "--post"))
    second = Typing(_env_for(lattice2, raw_pre2, "--env2"), _env_for(lattice2, raw_post2, "--post2"))
    violations = subsumption_violations(first, second)
    extra: dict[str, Any] = {}
    if violations:
        found = distinguishing_program(first, second)
        assert found is not None
        x, y, program = found
        extra["program"] = pretty_print(program)
        extra["stats"] = {"violations": [list(pair) for pair in violations]}
        if config.output_format == "text":
            out.line(f"violated pair: {x} -> {y}")
            out.line(f"distinguishing program: {pretty_print(program)}")
    return _emit_verdict(out, "subsume", not violations, **extra)


def _cmd_dual(config: RunConfig, out: _Output) -> int:
    path = _require_target(config, "environment")
    raw = parse_env_text(_read(path), path)
    universe = frozenset(raw["bindings"])
    if not universe:
        raise InputError("empty environment", path)
    lattice = PowersetLattice(universe)
    env = resolve_env(lattice, raw, path)
    converted = from_independence(env) if raw["independence"] else to_independence(env)
    _emit_env(out, "dual", converted, not raw["independence"])
    return EXIT_HOLDS


def _cmd_transform(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, _ = _typing_inputs(config)
    pc = _pc(config, lattice)
    result = translate(lattice, pc, pre, program)
    _debug(config, f"inserted {result.copies} copy assignment(s)")
    if config.emit_env:
        Path(config.emit_env).write_text(render_env(result.post), encoding="utf-8")
    if config.output_format == "json":
        out.record(
            {
                "subcommand": "transform",
                "program": pretty_print(result.output),
                "environment": env_record(result.post),
                "stats": {"copies": result.copies},
            }
        )
    else:
        out.line(pretty_print(result.output))
    return EXIT_HOLDS


def _fixed_universe(program: Command) -> frozenset[str]:
    """Base names and set-level members of a fixed-variable program."""
    names: set[str] = set()
    for var in program_variables(program)[1]:
        names.add(var.name)
        if var.level and var.level.startswith("{"):
            names.update(m for m in var.level.strip("{}").split(",") if m)
    return frozenset(names)


def _cmd_check_fixed(config: RunConfig, out: _Output) -> int:
    program = _load_program(config, fixed=True)
    lattice = _resolve_lattice(config.lattice, _fixed_universe(program))
    return _emit_verdict(out, "check-fixed", check_fixed(lattice, _pc(config, lattice), program))


def _mode(config: RunConfig) -> Exhaustive | Random:
    if config.mode == "random":
        return Random(config.seed, config.trials)
    return Exhaustive()


def _emit_harness(config: RunConfig, out: _Output, subcommand: str, verdict: NIVerdict, lattice: Lattice) -> int:
    _debug(
        config,
        f"{verdict.pairs_tested} tested, {verdict.skipped} skipped for fuel, "
        f"{verdict.termination_mismatches} termination mismatch(es)",
    )
    if verdict.outcome is Outcome.INCONCLUSIVE:
        _warn("inconclusive: no run pair could be compared within the fuel bound")
    if config.output_format == "json":
        record: Record = {"subcommand": subcommand, "verdict": verdict.outcome.value, "stats": verdict_stats(verdict)}
        if verdict.witness is not None:
            record["witness"] = witness_record(verdict.witness)
        out.record(record)
    else:
        out.line(f"verdict: {verdict.outcome.value}")
        witness = verdict.witness
        if witness is not None:
            if witness.level is not None:
                out.line(f"level: {lattice.render(witness.level)}")
            out.line(f"variable: {witness.variable}")
            out.line("first store:")
            out.text(render_store(witness.first))
            if witness.second is not None:
                out.line("second store:")
                out.text(render_store(witness.second))
    return EXIT_FAILS if verdict.outcome is Outcome.COUNTEREXAMPLE else EXIT_HOLDS


def _cmd_test_ni(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, post = _typing_inputs(config)
    if post is None:
        post = spc(lattice, lattice.bottom, pre, program)
        _debug(config, f"testing against the inferred post-environment {post!r}")
    verdict = ni_check(lattice, program, pre, post, config.domain, _mode(config), config.fuel, config.workers)
    return _emit_harness(config, out, "test-ni", verdict, lattice)


def _cmd_test_safety(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, post = _typing_inputs(config)
    pc = _pc(config, lattice)
    if post is None:
        post = spc(lattice, pc, pre, program)
    verdict = safety_check(program, pc, post, config.domain, _mode(config), config.fuel, config.workers)
    return _emit_harness(config, out, "test-safety", verdict, lattice)


def _cmd_test_equiv(config: RunConfig, out: _Output) -> int:
    program, lattice, pre, post = _typing_inputs(config)
    pc = _pc(config, lattice)
    if config.against:
        fixed = parse_program(_read(config.against), fixed=True)
        if post is None:
            post = spc(lattice, pc, pre, program)
    else:
        result = translate(lattice, pc, pre, program)
        fixed, post = result.output, result.post
    verdict = equiv_check(program, fixed, pre, post, config.domain, _mode(config), config.fuel, config.workers)
    return _emit_harness(config, out, "test-equiv", verdict, lattice)


def _cmd_lattice_validate(config: RunConfig, out: _Output) -> int:
    selector = config.target or config.lattice
    lattice = _resolve_lattice(selector, frozenset({"x"}) if selector == "powerset" else frozenset())
    elements = [lattice.render(e) for e in lattice.elements()]
    summary = {
        "name": lattice.name,
        "elements": elements,
        "bottom": lattice.render(lattice.bottom),
        "top": lattice.render(lattice.top),
        "height": lattice.height(),
    }
    if config.output_format == "json":
        out.record({"subcommand": "lattice-validate", "verdict": "holds", "stats": summary})
    else:
        out.line(f"lattice {lattice.name}: ok")
        out.line(f"elements: {' '.join(elements)}")
        out.line(f"bottom: {summary['bottom']}  top: {summary['top']}  height: {summary['height']}")
    return EXIT_HOLDS


_HANDLERS: dict[str, Callable[[RunConfig, _Output], int]] = {
    "infer": _cmd_infer,
    "check": _cmd_check,
    "principal": _cmd_principal,
    "derive": _cmd_derive,
    "reverse": _cmd_reverse,
    "subsume": _cmd_subsume,
    "dual": _cmd_dual,
    "transform": _cmd_transform,
    "check-fixed": _cmd_check_fixed,
    "test-ni": _cmd_test_ni,
    "test-safety": _cmd_test_safety,
    "test-equiv": _cmd_test_equiv,
    "lattice-validate": _cmd_lattice_validate,
}


def run(config: RunConfig) -> int:
    """Dispatch one subcommand and write its output; errors propagate."""
    out = _Output(config)
    status = _HANDLERS[config.subcommand](config, out)
    out.flush()
    return status


# --- command line ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowlat", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("target", nargs="?", help="program file ('-' for stdin), env file for dual, lattice for lattice-validate")
        p.add_argument("--lattice", help=f"built-in ({', '.join(BUILTIN_LATTICES)}) or lattice spec file")
        p.add_argument("--lattice2", help="lattice of the second typing (subsume)")
        p.add_argument("--env", help="inline pre-environment, e.g. 'l:L,h:H'")
        p.add_argument("--env-file", help="pre-environment file")
        p.add_argument("--post", help="inline post-environment")
        p.add_argument("--post-file", help="post-environment file")
        p.add_argument("--env2", help="pre-environment of the second typing (subsume)")
        p.add_argument("--post2", help="post-environment of the second typing (subsume)")
        p.add_argument("--pc", help="program-counter level (default: bottom)")
        p.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS)
        p.add_argument("--trace", action="store_true", help="report the environment change at each program point")
        p.add_argument("--independence", action="store_true", help="use the independence view of powerset environments")
        p.add_argument("--domain", help="comma-separated test values")
        p.add_argument("--fuel", type=int, help="loop unrollings per run")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--mode", choices=("exhaustive", "random"), default="exhaustive")
        p.add_argument("--workers", type=int)
        p.add_argument("--emit-env", help="write the post-environment here (transform)")
        p.add_argument("--output", help="write results here instead of stdout")
        p.add_argument("--against", help="fixed-variable program to compare with (test-equiv)")
        p.add_argument("--verbose", action="store_true", help="print [DEBUG] diagnostics")
    return parser


def config_from_args(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Command-line flags over settings over defaults."""
    fuel = settings.fuel if args.fuel is None else args.fuel
    workers = settings.workers if args.workers is None else args.workers
    trials = settings.trials if args.trials is None else args.trials
    if fuel < 0 or workers < 1 or trials < 1:
        raise ConfigError("--fuel must be >= 0, --workers and --trials >= 1")
    return RunConfig(
        subcommand=args.subcommand,
        target=args.target,
        lattice=args.lattice or settings.lattice,
        lattice2=args.lattice2,
        env=args.env,
        env_file=args.env_file,
        post=args.post,
        post_file=args.post_file,
        env2=args.env2,
        post2=args.post2,
        pc=args.pc,
        output_format=args.output_format or settings.output_format,
        trace=args.trace,
        independence=args.independence,
        domain=parse_domain(args.domain) if args.domain else settings.domain,
        fuel=fuel,
        seed=settings.seed if args.seed is None else args.seed,
        trials=trials,
        mode=args.mode,
        workers=workers,
        emit_env=args.emit_env,
        output=args.output,
        against=args.against,
        verbose=args.verbose,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args, load_settings())
        return run(config)
    except (FlowlatError, OSError) as exc:
        source = args.target or "<command line>"
        message = str(exc)
        if not isinstance(exc, InputError):
            message = f"{source}: {message}"
        print(f"❌ {message}", file=sys.stderr)
        return EXIT_ERROR
    except RecursionError:
        # deeply nested if/while or expressions
        print(f"❌ {args.target or '<command line>'}: program is nested too deeply", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
