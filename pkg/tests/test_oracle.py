"""Brute-force satisfaction, solution enumeration, membership, equivalence.

The oracle is the independent route against which the chase is judged,
so these tests pin its own behavior on small hand-checked cases.
"""

import random

import pytest

from mapforge import Mapping, parse_mapping
from mapforge.deps import infer_schemas
from mapforge.oracle import (
    Budget,
    BudgetExceeded,
    Verdict,
    chain_member,
    check_equiv,
    composition_member,
    enumerate_solutions,
    sat_so_standard,
    sat_stso,
)
from mapforge.randgen import random_instance, random_stso
from mapforge.values import Instance

from conftest import inst, load_inst, load_map


def stso_of(name):
    return load_map(name).stso


# verdicts -------------------------------------------------------------------


def test_verdict_is_three_valued():
    with pytest.raises(TypeError, match="three-valued"):
        bool(Verdict.true())
    assert str(Verdict.true()) == "true"
    assert str(Verdict.false("witness")) == "false (witness)"
    assert str(Verdict.unknown("budget")) == "unknown (budget)"
    assert Verdict.true().is_true
    assert Verdict.unknown("x").is_unknown


# satisfaction ---------------------------------------------------------------


def test_sat_accepts_the_obvious_pair():
    v = sat_stso(inst(("S", "a")), inst(("T", 1, 2)), stso_of("braided_functions"))
    assert v.is_true


def test_sat_rejects_the_empty_target():
    v = sat_stso(inst(("S", "a")), inst(), stso_of("braided_functions"))
    assert v.is_false


def test_sat_needs_the_equality_conclusions_too():
    dep = stso_of("merge_classes")
    I = load_inst("merge_edges")
    assert sat_stso(I, inst(("C", "1", "1"), ("C", "2", "1")), dep).is_true
    # distinct targets for f(1) and f(2) contradict E(1,2) -> f(1)=f(2)
    assert sat_stso(I, inst(("C", "1", "1"), ("C", "2", "2")), dep).is_false


def test_target_nulls_are_rigid():
    dep = parse_mapping(
        "source { A/1 }\ntarget { T/2 }\n"
        "stso {\n  exists f:\n  A(x) -> T(x, f(x)).\n  A(x) & A(y) -> f(x) = f(y).\n}"
    ).stso
    I = inst(("A", "1"), ("A", "2"))
    assert sat_stso(I, inst(("T", "1", 1), ("T", "2", 1)), dep).is_true
    # _N1 and _N2 are distinct values, so f(1)=f(2) cannot hold
    assert sat_stso(I, inst(("T", "1", 1), ("T", "2", 2)), dep).is_false


def test_strategies_agree_on_fixed_cases():
    dep = stso_of("merge_classes")
    I = load_inst("merge_edges")
    for J in [
        inst(("C", "1", "1"), ("C", "2", "1")),
        inst(("C", "1", "1"), ("C", "2", "2")),
        inst(),
    ]:
        a = sat_stso(I, J, dep, strategy="enumerate")
        b = sat_stso(I, J, dep, strategy="propagate")
        assert a.value == b.value, (J.facts_sorted(), str(a), str(b))


def test_sat_so_standard_checks_target_constraints():
    m = load_map("copy_with_key")
    I = inst(("P", "1", "2"))
    assert sat_so_standard(I, inst(("R", "1", "2")), m).is_true
    assert sat_so_standard(I, inst(("R", "1", "2"), ("R", "1", "3")), m).is_false
    assert sat_so_standard(I, inst(), m).is_false


def test_satisfaction_is_monotone_in_the_target():
    rng = random.Random(41)
    tried = 0
    while tried < 40:
        dep = random_stso(rng)
        src, tgt = infer_schemas(dep)
        I = random_instance(src, rng, max_values=2, max_facts=3)
        J = random_instance(tgt, rng, max_values=2, max_facts=2, nulls=1)
        v = sat_stso(I, J, dep)
        if not v.is_true:
            continue
        extra = random_instance(tgt, rng, max_values=2, max_facts=2)
        bigger = J.union(extra)
        v2 = sat_stso(I, bigger, dep)
        assert not v2.is_false, (dep, I.facts_sorted(), bigger.facts_sorted())
        tried += 1


def test_budgets_never_flip_certified_verdicts():
    dep = stso_of("merge_classes")
    I = load_inst("merge_edges")
    J = inst(("C", "1", "1"), ("C", "2", "2"))
    tight = sat_stso(I, J, dep, Budget(max_assignments=200))
    wide = sat_stso(I, J, dep)
    if not tight.is_unknown:
        assert tight.value == wide.value


def test_exhausted_assignment_budget_reports_unknown():
    dep = stso_of("merge_classes")
    v = sat_stso(load_inst("merge_edges"), inst(("C", "1", "1")), dep, Budget(max_assignments=1))
    assert v.is_unknown
    assert "exhausted" in v.reason


def test_clipped_fresh_stock_cannot_certify_false():
    # f(1) = anything outside {1} dodges the premise, so the pair is
    # satisfiable, but only with a value from outside the instances.
    # A clipped universe must answer unknown, not false.
    dep = parse_mapping(
        "source { A/1 }\ntarget { T/2 }\n"
        "stso {\n  exists f:\n  A(x) & f(x) = x -> T(x, x).\n}"
    ).stso
    I = inst(("A", "1"))
    assert sat_stso(I, Instance(), dep).is_true
    clipped = sat_stso(I, Instance(), dep, Budget(max_universe_nulls=0))
    assert clipped.is_unknown
    assert "clipped" in clipped.reason
    # a witness inside the clipped universe is still certified
    found = sat_stso(I, inst(("T", "1", "1")), dep, Budget(max_universe_nulls=0))
    assert found.is_true


# solution enumeration -------------------------------------------------------


def test_no_solutions_under_a_key_clash():
    assert enumerate_solutions(load_inst("key_clash"), load_map("copy_with_key")) == []


def test_minimal_solutions_of_the_merge_fixture():
    sols = enumerate_solutions(
        load_inst("merge_edges"), load_map("merge_classes"), minimal_only=True
    )
    got = {tuple(J.canonical().facts_sorted()) for J in sols}
    want = {
        tuple(inst(("C", "1", "1"), ("C", "2", "1")).facts_sorted()),
        tuple(inst(("C", "1", "2"), ("C", "2", "2")).facts_sorted()),
        tuple(inst(("C", "1", 1), ("C", "2", 1)).canonical().facts_sorted()),
    }
    assert got == want


def test_enumerated_solutions_all_satisfy():
    m = load_map("braided_functions")
    I = inst(("S", "a"))
    sols = enumerate_solutions(I, m, limit=5)
    assert sols
    for J in sols:
        assert sat_stso(I, J, m.stso).is_true


def test_enumeration_respects_the_limit():
    sols = enumerate_solutions(load_inst("merge_edges"), load_map("merge_classes"), limit=2)
    assert len(sols) == 2


def test_empty_source_has_the_empty_solution():
    sols = enumerate_solutions(inst(), load_map("copy_with_key"), minimal_only=True)
    assert sols == [inst()]


# membership -----------------------------------------------------------------


def test_composition_member_through_the_copy_chain():
    m12, m23 = load_map("copy_with_key"), load_map("copy_to_final")
    assert composition_member(inst(("P", "1", "2")), inst(("T", "1", "2")), m12, m23).is_true


def test_key_clash_breaks_every_composition():
    m12, m23 = load_map("copy_with_key"), load_map("copy_to_final")
    bad = load_inst("key_clash")
    assert composition_member(bad, inst(("T", "1", "2")), m12, m23).is_false
    assert composition_member(bad, inst(), m12, m23).is_false


def test_missing_final_fact_breaks_membership():
    m12, m23 = load_map("copy_with_key"), load_map("copy_to_final")
    assert composition_member(inst(("P", "1", "2")), inst(), m12, m23).is_false


def test_chain_member_three_stages():
    m12, m23 = load_map("copy_with_key"), load_map("copy_to_final")
    m34 = parse_mapping("source { T/2 }\ntarget { W/2 }\nst {\n  T(x, y) -> W(x, y).\n}")
    assert chain_member(inst(("P", "1", "2")), inst(("W", "1", "2")), [m12, m23, m34]).is_true
    assert chain_member(inst(("P", "1", "2")), inst(("W", "2", "1")), [m12, m23, m34]).is_false


# equivalence ----------------------------------------------------------------


def test_a_dependency_is_consistent_with_itself():
    dep = stso_of("merge_classes")
    verdict, pair = check_equiv(dep, dep, trials=40)
    assert verdict.is_true
    assert pair is None
    assert "consistent" in verdict.reason


def test_dropping_a_clause_is_caught():
    from mapforge.deps import EqAtom, StSODependency

    full = stso_of("merge_classes")
    weaker = StSODependency(
        functions=full.functions,
        clauses=tuple(
            c
            for c in full.clauses
            if not any(isinstance(a, EqAtom) for a in c.conclusion)
        ),
    )
    verdict, pair = check_equiv(full, weaker, trials=120)
    assert verdict.is_false
    I, J = pair
    v1, v2 = sat_stso(I, J, full), sat_stso(I, J, weaker)
    assert v1.value != v2.value
