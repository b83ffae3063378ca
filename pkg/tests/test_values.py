"""Values, facts, instances, and homomorphisms."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapforge import (
    Constant,
    Fact,
    Instance,
    Null,
    Schema,
    find_homomorphism,
    homomorphically_equivalent,
)
from mapforge.values import apply_homomorphism, is_constant, is_homomorphism, value_key

from conftest import inst


def test_value_identity():
    assert Constant("1") == Constant("1")
    assert Constant("1") != Constant("2")
    assert Null(1) != Constant("1")
    assert is_constant(Constant("a"))
    assert not is_constant(Null(3))


def test_value_key_orders_constants_before_nulls():
    vals = [Null(2), Constant("b"), Null(1), Constant("a")]
    assert sorted(vals, key=value_key) == [
        Constant("a"),
        Constant("b"),
        Null(1),
        Null(2),
    ]


def test_schema_accessors():
    s = Schema({"P": 2, "Q": 1})
    assert s.names() == ["P", "Q"]
    assert s.arity("P") == 2
    merged = s.union(Schema({"R": 3}))
    assert merged.names() == ["P", "Q", "R"]


def test_active_domain():
    I = inst(("P", "1", "2"), ("P", "1", "3"))
    assert I.active_domain() == {Constant("1"), Constant("2"), Constant("3")}


def test_nulls_listing():
    J = inst(("T", "1", 2), ("T", 5, "1"))
    assert J.nulls() == {Null(2), Null(5)}
    assert inst(("T", "1", "2")).nulls() == set()


def test_facts_sorted_deterministic():
    a = inst(("Q", "2"), ("P", "1", "2"), ("P", "1", 1))
    b = inst(("P", "1", 1), ("P", "1", "2"), ("Q", "2"))
    assert a.facts_sorted() == b.facts_sorted()


def test_apply_homomorphism():
    J = inst(("T", 1, 2))
    h = {Null(1): Constant("5"), Null(2): Constant("5")}
    assert apply_homomorphism(h, J) == inst(("T", "5", "5"))


def test_find_homomorphism_collapses_nulls():
    J1 = inst(("T", 1, 2), ("T", 2, 1))
    J2 = inst(("T", "5", "5"))
    h = find_homomorphism(J1, J2)
    assert h is not None
    assert h[Null(1)] == Constant("5")
    assert h[Null(2)] == Constant("5")
    assert is_homomorphism(h, J1, J2)


def test_find_homomorphism_fixes_constants():
    assert find_homomorphism(inst(("P", "1")), inst(("P", "2"))) is None
    # but a null may land on any value
    assert find_homomorphism(inst(("P", 1)), inst(("P", "2"))) is not None


def test_find_homomorphism_direction_matters():
    specific = inst(("T", "1", "2"))
    general = inst(("T", 1, 2))
    assert find_homomorphism(general, specific) is not None
    assert find_homomorphism(specific, general) is None


def test_homomorphic_equivalence_absorbs_dominated_facts():
    core = inst(("T", "1", "2"))
    padded = inst(("T", "1", "2"), ("T", "1", 1))
    assert homomorphically_equivalent(core, padded)
    assert not homomorphically_equivalent(core, inst(("T", "2", "1")))


def test_identity_is_homomorphism():
    J = inst(("T", 1, "2"), ("U", "3"))
    assert is_homomorphism({}, J, J)


_values = st.one_of(
    st.integers(1, 3).map(lambda i: Constant(str(i))),
    st.integers(1, 2).map(Null),
)
_facts = st.tuples(st.sampled_from(["P", "Q"]), _values, _values).map(
    lambda t: Fact(t[0], (t[1], t[2]))
)


@given(st.lists(_facts, max_size=5))
@settings(max_examples=60, deadline=None)
def test_self_homomorphism_always_exists(facts):
    J = Instance(facts)
    h = find_homomorphism(J, J)
    assert h is not None
    assert is_homomorphism(h, J, J)


@given(st.lists(_facts, max_size=4), st.lists(_facts, max_size=4))
@settings(max_examples=60, deadline=None)
def test_found_homomorphisms_check_out(fa, fb):
    A, B = Instance(fa), Instance(fb)
    h = find_homomorphism(A, B)
    if h is not None:
        assert is_homomorphism(h, A, B)


def test_canonical_renames_nulls_by_first_use():
    a = inst(("T", 7, 9))
    b = inst(("T", 1, 2))
    assert a.canonical() == b.canonical()
