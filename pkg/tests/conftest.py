"""Shared fixtures: built-in lattices and the generated soundness corpus."""

import pytest

from flowlat.generators import gen_corpus, gen_env
from flowlat.lattice import chain3, diamond, powerset_lattice, two_point
from flowlat.security_types import TypeEnv

CORPUS_VARIABLES = ("a", "b", "c", "d")
CORPUS_SIZE = 200
CORPUS_DEPTH = 4


def make_env(lattice, **levels) -> TypeEnv:
    """TypeEnv from keyword bindings; powerset levels may be given as plain sets."""
    resolved = {
        name: frozenset(level) if isinstance(level, (set, frozenset)) else level
        for name, level in levels.items()
    }
    return TypeEnv(lattice, resolved)


@pytest.fixture
def lat2():
    return two_point()


@pytest.fixture
def lat4():
    return diamond()


@pytest.fixture
def lat3():
    return chain3()


@pytest.fixture(scope="session")
def corpus():
    return gen_corpus(CORPUS_SIZE, CORPUS_DEPTH, CORPUS_VARIABLES, seed=0)


@pytest.fixture(scope="session", params=["two-point", "diamond", "powerset"])
def corpus_lattice(request):
    if request.param == "two-point":
        return two_point()
    if request.param == "diamond":
        return diamond()
    return powerset_lattice(CORPUS_VARIABLES)


@pytest.fixture(scope="session")
def corpus_envs(corpus_lattice):
    """One pre-environment per corpus program, seeded by position."""
    return [gen_env(1000 + i, corpus_lattice, CORPUS_VARIABLES) for i in range(CORPUS_SIZE)]
