"""
flowlat - flow-sensitive security typing for While programs over arbitrary finite lattices
"""

__version__ = "0.1.0"
__author__ = "flowlat contributors"

from .harness import NIVerdict, Outcome, equiv_check, ni_check, safety_check
from .lang import Store, execute, parse_program, pretty_print
from .lattice import Lattice, build_lattice, builtin_lattice, powerset_lattice
from .principal import PrincipalTyping, derive_greatest, derive_smallest, principal, subsumes
from .security_types import Judgement, TypeEnv, check_judgement, spc
from .transform import TranslationResult, check_fixed, translate

__all__ = [
    "Judgement",
    "Lattice",
    "NIVerdict",
    "Outcome",
    "PrincipalTyping",
    "Store",
    "TranslationResult",
    "TypeEnv",
    "build_lattice",
    "builtin_lattice",
    "check_fixed",
    "check_judgement",
    "derive_greatest",
    "derive_smallest",
    "equiv_check",
    "execute",
    "ni_check",
    "parse_program",
    "powerset_lattice",
    "pretty_print",
    "principal",
    "safety_check",
    "spc",
    "subsumes",
    "translate",
]
