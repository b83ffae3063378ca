"""Splitting a second-order mapping into a chain of standard mappings."""

import pytest

from mapforge import ComposeError, Mapping, parse_mapping
from mapforge.compose import decompose_stso
from mapforge.deps import canonical_egd_str, canonical_fo_tgd_str, infer_schemas
from mapforge.oracle import chain_member, sat_stso

from conftest import ground_instances, inst, load_inst, load_map


def chain_of(name):
    return decompose_stso(load_map(name))


def canon(m):
    return {
        "st": {canonical_fo_tgd_str(t) for t in m.st_tgds},
        "egd": {canonical_egd_str(e) for e in m.target_egds},
        "tgd": {canonical_fo_tgd_str(t) for t in m.target_tgds},
    }


def test_nested_dependency_splits_into_three_stages():
    chain = chain_of("braided_functions")
    assert len(chain) == 3
    assert chain[0].source.names() == ["S"]
    assert chain[-1].target.names() == ["T"]
    for earlier, later in zip(chain, chain[1:]):
        assert earlier.target.names() == later.source.names()


def test_first_stage_copies_and_defines_the_graphs():
    chain = chain_of("braided_functions")
    assert canon(chain[0]) == {
        "st": {
            "S(v1) -> R1(v1)",
            "S(v1) -> F1(v1,v2)",
            "S(v1) -> G1(v1,v2)",
        },
        "egd": {
            "F1(v1,v2) & F1(v1,v3) -> v2=v3",
            "G1(v1,v2) & G1(v1,v3) -> v2=v3",
        },
        "tgd": set(),
    }


def test_second_stage_extends_graphs_and_carries_the_equality():
    chain = chain_of("braided_functions")
    assert canon(chain[1]) == {
        "st": {
            "R1(v1) -> R2(v1)",
            "F1(v1,v2) -> F2(v1,v2)",
            "G1(v1,v2) -> G2(v1,v2)",
            "G1(v1,v2) -> F2(v2,v3)",
            "F1(v1,v2) -> G2(v2,v3)",
        },
        "egd": {
            "F2(v1,v2) & F2(v1,v3) -> v2=v3",
            "G2(v1,v2) & G2(v1,v3) -> v2=v3",
            # the braid constraint: f(x)=f(y) forces g(x)=g(y)
            "R2(v1) & R2(v2) & F2(v1,v3) & F2(v2,v3) & G2(v1,v4) & G2(v2,v5) -> v4=v5",
        },
        "tgd": set(),
    }


def test_last_stage_reads_conclusions_through_the_graphs():
    chain = chain_of("braided_functions")
    assert canon(chain[2]) == {
        "st": {
            "R2(v1) & G2(v1,v2) & F2(v2,v3) & F2(v1,v4) & G2(v4,v5) -> T(v3,v5)",
        },
        "egd": set(),
        "tgd": set(),
    }


def test_unnested_dependency_splits_into_exactly_two():
    chain = chain_of("merge_classes")
    assert len(chain) == 2


def test_function_free_dependency_still_yields_two_stages():
    m = parse_mapping("source { P/2 }\ntarget { R/2 }\nstso {\n  P(x, y) -> R(x, y).\n}")
    chain = decompose_stso(m)
    assert len(chain) == 2


def test_decompose_requires_a_second_order_part():
    with pytest.raises(ComposeError, match="second-order"):
        decompose_stso(load_map("copy_with_key"))


def test_stages_are_standard_mappings():
    for name in ["braided_functions", "merge_classes", "aliased_functions"]:
        for m in chain_of(name):
            assert m.stso is None
            assert m.kind() in ("st-tgd", "standard")


def test_chain_membership_matches_direct_satisfaction():
    for name in ["merge_classes", "braided_functions"]:
        m = load_map(name)
        chain = decompose_stso(m)
        src, tgt = infer_schemas(m.stso)
        targets = {
            "merge_classes": [
                inst(("C", "1", "1"), ("C", "2", "1")),
                inst(("C", "1", "1"), ("C", "2", "2")),
                inst(("C", "1", "1")),
                inst(),
            ],
            "braided_functions": [
                inst(("T", 1, 2)),
                inst(("T", "1", "1")),
                inst(),
            ],
        }[name]
        for I in ground_instances(src, 2, 1):
            for J in targets:
                direct = sat_stso(I, J, m.stso)
                through = chain_member(I, J, chain)
                if direct.is_unknown or through.is_unknown:
                    continue
                assert direct.value == through.value, (
                    name,
                    I.facts_sorted(),
                    J.facts_sorted(),
                    str(direct),
                    str(through),
                )


def test_membership_positive_example_through_the_chain():
    chain = chain_of("merge_classes")
    I = load_inst("merge_edges")
    assert chain_member(I, inst(("C", "1", "1"), ("C", "2", "1")), chain).is_true
    assert chain_member(I, inst(("C", "1", "1"), ("C", "2", "2")), chain).is_false
