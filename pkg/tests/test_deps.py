"""Dependency ASTs: validation, weak acyclicity, skolemization, depth."""

import random

import pytest

from mapforge import (
    NotWeaklyAcyclic,
    parse_mapping,
    require_weakly_acyclic,
    skolemize,
    validate,
    weakly_acyclic,
)
from mapforge.deps import DependencyGraph, canonical_clause_str, infer_schemas
from mapforge.randgen import random_standard_mapping, random_stso
from mapforge.syntax import ValidationError
from mapforge.values import Schema

from conftest import load_map


def tgds_of(text):
    m = parse_mapping(
        "source { A/1 }\ntarget { B/2, C/2 }\nst {\n  A(x) -> exists y: B(x, y).\n}\n"
        "ttgd {\n" + text + "\n}",
        validated=False,
    )
    return m.target_tgds


# validation -----------------------------------------------------------------


def test_fixtures_validate_clean(fixture_names):
    for name in fixture_names:
        m = load_map(name)
        assert not [d for d in validate(m) if d.severity == "error"], name


def test_arity_misuse_is_an_error():
    with pytest.raises(ValidationError, match="arity 2, declared 1"):
        parse_mapping("source { P/1 }\ntarget { R/2 }\nst {\n  P(x, y) -> R(x, y).\n}")


def test_egd_with_unbound_variable_is_an_error():
    with pytest.raises(ValidationError, match="unbound variable w"):
        parse_mapping(
            "source { P/1 }\ntarget { R/2 }\n"
            "st {\n  P(x) -> R(x, x).\n}\n"
            "tegd {\n  R(x, y) -> y = w.\n}"
        )


def test_premise_over_wrong_schema_is_an_error():
    with pytest.raises(ValidationError, match="unknown relation"):
        parse_mapping("source { P/1 }\ntarget { R/1 }\nst {\n  R(x) -> P(x).\n}")


def test_equality_variable_needs_a_relational_guard():
    with pytest.raises(ValidationError, match="does not occur in a relational premise"):
        parse_mapping(
            "source { P/1 }\ntarget { R/1 }\n"
            "stso {\n  exists f:\n  P(x) & f(x) = f(w) -> R(x).\n}"
        )


def test_conclusion_only_variables_are_existential():
    m = parse_mapping("source { P/1 }\ntarget { R/2 }\nst {\n  P(x) -> R(x, w).\n}")
    (tgd,) = m.st_tgds
    assert [v.name for v in tgd.existential_vars()] == ["w"]


# weak acyclicity ------------------------------------------------------------


def test_closure_tgds_are_weakly_acyclic():
    m = load_map("closure_head")
    assert weakly_acyclic(m.target_tgds)
    require_weakly_acyclic(m.target_tgds)


def test_self_feeding_existential_is_not():
    tgds = tgds_of("B(x, y) -> exists z: B(y, z).")
    assert not weakly_acyclic(tgds)
    with pytest.raises(NotWeaklyAcyclic, match="cycle B.1"):
        require_weakly_acyclic(tgds)


def test_empty_set_is_weakly_acyclic():
    assert weakly_acyclic([])


def test_copy_cycle_without_special_edge_is_fine():
    assert weakly_acyclic(tgds_of("B(x, y) -> C(y, x).\n  C(x, y) -> B(y, x)."))


def test_two_step_special_cycle():
    # the null lands in C.1, copies back to B.1, and feeds the
    # existential again
    assert not weakly_acyclic(
        tgds_of("B(x, y) -> exists z: C(y, z).\n  C(x, y) -> B(x, y).")
    )
    # reversed copy sends the null to B.0, which feeds nothing
    assert weakly_acyclic(
        tgds_of("B(x, y) -> exists z: C(y, z).\n  C(x, y) -> B(y, x).")
    )


def brute_force_weakly_acyclic(tgds):
    """Path search over the position graph: look for any special edge
    (a, b) with b reaching a."""
    g = DependencyGraph(tgds)
    succ = {}
    for a, b in g.ordinary | g.special:
        succ.setdefault(a, set()).add(b)

    def reaches(start, goal):
        seen, todo = set(), [start]
        while todo:
            n = todo.pop()
            if n == goal:
                return True
            if n in seen:
                continue
            seen.add(n)
            todo.extend(succ.get(n, ()))
        return False

    return not any(reaches(b, a) for a, b in g.special)


def test_weak_acyclicity_matches_brute_force_on_random_tgd_sets():
    rng = random.Random(7)
    agree = 0
    for _ in range(120):
        m = random_standard_mapping(
            rng,
            Schema({"A": rng.randint(1, 2)}),
            Schema({"B": 2, "C": rng.randint(1, 2)}),
        )
        assert weakly_acyclic(m.target_tgds) == brute_force_weakly_acyclic(
            m.target_tgds
        )
        agree += 1
    assert agree == 120


# skolemization --------------------------------------------------------------


def test_skolemize_names_and_arities():
    m = parse_mapping(
        "source { B/1, D/2 }\ntarget { C/2, E/3 }\n"
        "st {\n  B(x) -> exists y: C(x, y).\n  D(x, y) -> exists z: E(x, y, z).\n}"
    )
    clauses, fns = skolemize(m.st_tgds)
    assert fns == {"f": 1, "g": 2}
    got = {canonical_clause_str(c.premise, c.conclusion) for c in clauses}
    assert got == {"B(v1) -> C(v1,f(v1))", "D(v1,v2) -> E(v1,v2,g(v1,v2))"}


def test_skolemize_without_existentials_introduces_nothing():
    m = parse_mapping("source { P/2 }\ntarget { R/2 }\nst {\n  P(x, y) -> R(x, y).\n}")
    clauses, fns = skolemize(m.st_tgds)
    assert fns == {}
    assert canonical_clause_str(clauses[0].premise, clauses[0].conclusion) == (
        "P(v1,v2) -> R(v1,v2)"
    )


def test_skolemize_avoids_reserved_names():
    m = parse_mapping(
        "source { F/1 }\ntarget { C/2, D/2 }\n"
        "st {\n  F(x) -> exists y: C(x, y).\n  F(x) -> exists z: D(x, z).\n}"
    )
    _, fns = skolemize(m.st_tgds)
    assert len(fns) == 2
    assert all(v == 1 for v in fns.values())


# nesting depth and schema inference -----------------------------------------


def test_nesting_depth():
    assert load_map("braided_functions").stso.nesting_depth() == 2
    assert load_map("buried_terms").stso.nesting_depth() == 2
    assert load_map("merge_classes").stso.nesting_depth() == 1
    m = parse_mapping("source { P/2 }\ntarget { R/2 }\nstso {\n  P(x, y) -> R(x, y).\n}")
    assert m.stso.nesting_depth() == 0


def test_infer_schemas_reads_atoms():
    dep = load_map("braided_functions").stso
    source, target = infer_schemas(dep)
    assert source.names() == ["S"] and source.arity("S") == 1
    assert target.names() == ["T"] and target.arity("T") == 2


def test_mapping_kinds():
    assert load_map("copy_with_key").kind() == "standard"
    assert load_map("copy_to_final").kind() == "st-tgd"
    assert load_map("braided_functions").kind() == "st-so"


def test_random_stso_respects_bounds():
    rng = random.Random(3)
    for _ in range(60):
        dep = random_stso(rng)
        assert 1 <= len(dep.clauses) <= 4
        assert dep.nesting_depth() <= 3
        errs = [d for d in validate_dep(dep) if d.severity == "error"]
        assert not errs


def validate_dep(dep):
    from mapforge import Mapping

    source, target = infer_schemas(dep)
    return validate(Mapping(source=source, target=target, stso=dep))
