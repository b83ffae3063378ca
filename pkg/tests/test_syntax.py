"""Surface syntax: parsing, rendering, round-trips, JSON forms."""

import json
import random

import pytest

from mapforge import (
    Constant,
    Null,
    dumps,
    instance_from_json,
    instance_to_json,
    parse_instance,
    parse_mapping,
    parse_query,
    render,
    render_instance,
    render_mapping,
    render_query,
    value_from_json,
    value_to_json,
)
from mapforge.randgen import random_instance, random_mapping
from mapforge.syntax import ArityError, GroundViolation, ParseError, ValidationError
from mapforge.values import Schema

from conftest import FIXTURES, inst, load_map


# mappings -------------------------------------------------------------------


def test_fixtures_parse_and_roundtrip(fixture_names):
    assert len(fixture_names) >= 7
    for name in fixture_names:
        m = load_map(name)
        text = render(m)
        again = parse_mapping(text)
        assert render(again) == text, name


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as e:
        parse_mapping("source { P/1 }\ntarget { R/1 }\nst { P(x -> R(x) }")
    assert e.value.span.line == 3
    assert e.value.span.column == 10
    assert "expected ')'" in e.value.message


def test_validated_parse_raises_on_bad_arity():
    with pytest.raises(ValidationError):
        parse_mapping("source { P/1 }\ntarget { R/2 }\nst {\n  P(x, y) -> R(x, y).\n}")
    # the same text is accepted structurally
    m = parse_mapping(
        "source { P/1 }\ntarget { R/2 }\nst {\n  P(x, y) -> R(x, y).\n}",
        validated=False,
    )
    assert len(m.st_tgds) == 1


def test_renders_normalize_whitespace():
    a = parse_mapping("source{P/2}\ntarget{R/2}\nst{\nP(x,y)->R(y,x).\n}")
    b = parse_mapping("source { P/2 }\ntarget { R/2 }\nst {\n  P(x, y)  ->  R(y, x).\n}")
    assert render(a) == render(b)


def test_roundtrip_random_mappings():
    rng = random.Random(11)
    for i in range(200):
        m = random_mapping(rng)
        text = render(m)
        again = parse_mapping(text)
        assert render(again) == text, f"case {i}:\n{text}"


# instances ------------------------------------------------------------------


def test_instance_parse_and_render():
    I = parse_instance("P(1, _N2).\nQ(a).")
    assert render_instance(I) == "P(1, _N1).\nQ(a).\n"


def test_ground_mode_rejects_nulls():
    with pytest.raises(GroundViolation, match="_N1 in ground instance"):
        parse_instance("P(_N1, 2).", ground=True)


def test_instance_schema_check():
    with pytest.raises(ArityError, match="expects 2 arguments, found 1"):
        parse_instance("P(1).", Schema({"P": 2}))
    with pytest.raises(ParseError, match="relation Q not in schema"):
        parse_instance("Q(1).", Schema({"P": 1}))


def test_instance_roundtrip_random():
    rng = random.Random(5)
    schema = Schema({"P": 2, "Q": 1, "R": 3})
    for _ in range(100):
        I = random_instance(schema, rng, max_values=4, max_facts=6, nulls=2)
        text = render_instance(I)
        again = parse_instance(text, schema)
        assert again.canonical() == I.canonical()


# queries --------------------------------------------------------------------


def test_query_roundtrip():
    q = parse_query("q(x, y) :- R(x, y), S(y) ; q(x, x) :- T(x).")
    assert q.arity() == 2
    assert len(q.disjuncts) == 2
    assert parse_query(render_query(q)).disjuncts == q.disjuncts


def test_query_head_variables_must_be_bound():
    with pytest.raises(ParseError, match="not bound in body"):
        parse_query("q(x, y) :- R(x, x).")


def test_query_disjuncts_must_agree_on_arity():
    with pytest.raises(ParseError):
        parse_query("q(x) :- R(x, x) ; q(x, y) :- R(x, y).")


def test_boolean_query():
    q = parse_query("q() :- R(x, y).")
    assert q.arity() == 0


# JSON -----------------------------------------------------------------------


def test_value_json_shapes():
    assert value_to_json(Constant("a")) == {"c": "a"}
    assert value_to_json(Null(3)) == {"n": 3}
    assert value_from_json({"c": "1"}) == Constant("1")
    assert value_from_json({"n": 7}) == Null(7)


def test_instance_json_roundtrip():
    I = inst(("P", "1", 2), ("Q", "a"))
    blob = instance_to_json(I)
    assert blob["facts"][0]["args"][0] == {"c": "1"}
    # null indices are canonicalized on the way out
    assert instance_from_json(blob) == I.canonical()


def test_dumps_is_deterministic():
    assert dumps({"b": 1, "a": [2]}) == dumps({"a": [2], "b": 1})
    json.loads(dumps({"a": 1}))


def test_fixture_instances_parse(fixture_names):
    for path in sorted(FIXTURES.glob("*.inst")):
        I = parse_instance(path.read_text(), file=str(path))
        assert len(I) >= 1
