"""Shared helpers: fixture loading and canonical clause comparison."""

from itertools import combinations, product
from pathlib import Path

import pytest

from mapforge import Constant, Fact, Instance, parse_instance, parse_mapping, parse_query

FIXTURES = Path(__file__).parent / "fixtures"


def load_map(name):
    path = FIXTURES / f"{name}.map"
    return parse_mapping(path.read_text(), file=str(path))


def load_inst(name, schema=None, *, ground=True):
    path = FIXTURES / f"{name}.inst"
    return parse_instance(path.read_text(), schema, ground=ground, file=str(path))


def load_query(name):
    path = FIXTURES / f"{name}.q"
    return parse_query(path.read_text(), file=str(path))


def inst(*facts):
    """Instance literal: inst(("P", "1", "2")) with strings as constants
    and ints as null indices."""
    out = Instance()
    for rel, *args in facts:
        out.add(Fact(rel, tuple(_val(a) for a in args)))
    return out


def _val(a):
    if isinstance(a, str):
        return Constant(a)
    from mapforge import Null

    return Null(a)


def ground_instances(schema, domain_size, max_facts):
    """Every instance over constants 1..domain_size with at most
    max_facts facts, the empty instance included."""
    consts = [Constant(str(i + 1)) for i in range(domain_size)]
    space = [
        Fact(rel, args)
        for rel in sorted(schema.names())
        for args in product(consts, repeat=schema.arity(rel))
    ]
    out = [Instance()]
    for k in range(1, max_facts + 1):
        for combo in combinations(space, k):
            out.append(Instance(combo))
    return out


@pytest.fixture(scope="session")
def fixture_names():
    return sorted(p.stem for p in FIXTURES.glob("*.map"))
