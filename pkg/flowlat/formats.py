"""Environment files, inline environments and JSON result records."""

from __future__ import annotations

import json
import re
from collections.abc import Mapping
from typing import Any, TypedDict

from .errors import InputError, UnknownElementError
from .harness import NIVerdict, Witness
from .lang import Store
from .lattice import Lattice, Level
from .powerset_lattice import PowersetLattice
from .security_types import TypeEnv

INDEPENDENCE_HEADER = "# independence"

_BINDING = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(\S.*)$")


class RawEnv(TypedDict):
    """Bindings as written, before resolution against a lattice."""

    bindings: dict[str, str]
    lines: dict[str, int]
    independence: bool


def parse_env_text(text: str, source: str = "<env>") -> RawEnv:
    """Read ``name : element`` lines; a ``# independence`` line marks the independence view."""
    bindings: dict[str, str] = {}
    lines: dict[str, int] = {}
    independence = False
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped == INDEPENDENCE_HEADER:
            independence = True
            continue
        line = stripped.split("#", 1)[0].strip()
        if not line:
            continue
        match = _BINDING.match(line)
        if match is None:
            raise InputError(f"expected 'name : element', got {stripped!r}", source, number)
        name, level = match.group(1), match.group(2).strip()
        if name in bindings:
            raise InputError(f"duplicate binding for {name}", source, number)
        bindings[name] = level
        lines[name] = number
    return RawEnv(bindings=bindings, lines=lines, independence=independence)


def _split_top_level(text: str) -> list[str]:
    parts, depth, current = [], 0, []
    for char in text:
        if char == "{":
            depth += 1
        elif char == "}":
            depth -= 1
        if char == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(char)
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def parse_inline_env(text: str, source: str = "--env") -> RawEnv:
    """``l:L,h:H`` (commas inside ``{…}`` do not separate bindings)."""
    bindings: dict[str, str] = {}
    for part in _split_top_level(text):
        name, sep, level = part.partition(":")
        name = name.strip()
        if not sep or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or not level.strip():
            raise InputError(f"expected 'name:element', got {part!r}", source)
        if name in bindings:
            raise InputError(f"duplicate binding for {name}", source)
        bindings[name] = level.strip()
    return RawEnv(bindings=bindings, lines={}, independence=False)


def resolve_env(lattice: Lattice, raw: RawEnv, source: str = "<env>") -> TypeEnv:
    levels: dict[str, Level] = {}
    for name, text in raw["bindings"].items():
        try:
            levels[name] = lattice.parse_element(text)
        except UnknownElementError as exc:
            raise InputError(str(exc), source, raw["lines"].get(name)) from None
    return TypeEnv(lattice, levels)


def render_env(env: TypeEnv, independence: bool = False) -> str:
    lines = [INDEPENDENCE_HEADER] if independence else []
    lines.extend(env.render_lines())
    return "".join(f"{line}\n" for line in lines)


# --- JSON records ----------------------------------------------------------------


class _RecordBase(TypedDict):
    """Fields every record carries."""

    subcommand: str


class Record(_RecordBase, total=False):
    """Machine-readable result of one CLI run.

    Powerset levels are sorted arrays of variable names; other levels are
    element names.
    """

    verdict: str
    environment: dict[str, Any]
    independence: bool
    program: str
    witness: dict[str, Any]
    stats: dict[str, Any]
    trace: list[dict[str, Any]]


def level_value(lattice: Lattice, level: Level) -> Any:
    if isinstance(lattice, PowersetLattice):
        return sorted(level)  # type: ignore[call-overload]
    return lattice.render(level)


def env_record(env: TypeEnv) -> dict[str, Any]:
    return {name: level_value(env.lattice, level) for name, level in env.items()}


def store_record(store: Store) -> dict[str, int]:
    return {str(var): value for var, value in store.items()}


def witness_record(witness: Witness) -> dict[str, Any]:
    record: dict[str, Any] = {
        "kind": witness.kind,
        "variable": str(witness.variable),
        "first": store_record(witness.first),
        "fuel": witness.fuel,
    }
    if witness.second is not None:
        record["second"] = store_record(witness.second)
    if witness.level is not None:
        env = witness.pre if witness.pre is not None else witness.post
        record["level"] = level_value(env.lattice, witness.level) if env is not None else str(witness.level)
    return record


def verdict_stats(verdict: NIVerdict) -> dict[str, Any]:
    return {
        "pairs_tested": verdict.pairs_tested,
        "skipped": verdict.skipped,
        "termination_mismatches": verdict.termination_mismatches,
    }


def render_json(record: Record | Mapping[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parse_record(text: str) -> Record:
    data = json.loads(text)
    if not isinstance(data, dict) or "subcommand" not in data:
        raise InputError("not a flowlat result record")
    return data  # type: ignore[return-value]


def env_from_record(lattice: Lattice, environment: Mapping[str, Any]) -> TypeEnv:
    """Inverse of ``env_record``."""
    levels: dict[str, Level] = {}
    for name, value in environment.items():
        if isinstance(lattice, PowersetLattice):
            levels[name] = frozenset(value)
        else:
            levels[name] = lattice.parse_element(value)
    return TypeEnv(lattice, levels)
