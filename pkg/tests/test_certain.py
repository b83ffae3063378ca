"""Certain answers: null filtering, the no-solution case, unions."""

from mapforge import parse_query
from mapforge.certain import CertainResult, certain_answers, eval_ucq
from mapforge.oracle import Budget, enumerate_solutions
from mapforge.values import Constant, Instance, is_constant

from conftest import inst, load_inst, load_map, load_query


def c(*names):
    return tuple(Constant(str(n)) for n in names)


def test_copy_with_key_projects_the_pair():
    result = certain_answers(
        load_map("copy_with_key"), load_query("project_pair"), load_inst("single_pair")
    )
    assert result == CertainResult.of({c(1, 2)})
    assert not result.top


def test_key_clash_makes_everything_certain():
    result = certain_answers(
        load_map("copy_with_key"), load_query("project_pair"), load_inst("key_clash")
    )
    assert result == CertainResult.everything()
    assert result.top
    assert result.tuples == frozenset()


def test_nulls_never_reach_certain_answers():
    # The chase result is C(1, n), C(2, n) for one shared null, so the
    # pair query has answers but none of them is null-free.
    m = load_map("merge_classes")
    src = load_inst("merge_edges")
    pairs = certain_answers(m, parse_query("q(x, y) :- C(x, y)."), src)
    assert pairs == CertainResult.of(set())
    firsts = certain_answers(m, parse_query("q(x) :- C(x, y)."), src)
    assert firsts == CertainResult.of({c(1), c(2)})


def test_boolean_queries_answer_with_the_empty_tuple():
    m = load_map("merge_classes")
    q = parse_query("q() :- C(x, y).")
    assert certain_answers(m, q, load_inst("merge_edges")) == CertainResult.of({()})
    assert certain_answers(m, q, Instance()) == CertainResult.of(set())


def test_eval_ucq_keeps_nulls():
    answers = eval_ucq(parse_query("q(x, y) :- C(x, y)."), inst(("C", "1", 1)))
    assert len(answers) == 1
    (x, y), = answers
    assert x == Constant("1") and not is_constant(y)


def test_disjuncts_union():
    q = parse_query("q(x) :- T(x, y) ; q(x) :- U(x, y).")
    assert q.arity() == 1
    answers = eval_ucq(q, inst(("T", "1", "2"), ("U", "3", "4")))
    assert answers == {c(1), c(3)}


def test_certain_matches_solution_intersection():
    # Second route: certain answers are the constant tuples shared by
    # every solution, and for a monotone query the minimal solutions
    # decide the intersection.
    budget = Budget(max_assignments=200_000, max_millis=20_000)
    cases = [
        ("copy_with_key", "single_pair", "q(x, y) :- R(x, y)."),
        ("merge_classes", "merge_edges", "q(x, y) :- C(x, y)."),
        ("merge_classes", "merge_edges", "q(x) :- C(x, y)."),
    ]
    for map_name, inst_name, text in cases:
        m, src, q = load_map(map_name), load_inst(inst_name), parse_query(text)
        sols = enumerate_solutions(src, m, budget, minimal_only=True)
        assert sols, f"{map_name} has no solutions on {inst_name}"
        expected = None
        for J in sols:
            consts = {t for t in eval_ucq(q, J) if all(is_constant(v) for v in t)}
            expected = consts if expected is None else expected & consts
        assert certain_answers(m, q, src) == CertainResult.of(expected)
