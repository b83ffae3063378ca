"""Certain answers to unions of conjunctive queries.

The certain answers of q over a mapping and source instance are the
tuples in q(J) for every solution J. With a universal solution U they
are exactly the null-free tuples of q(U); when no solution exists at
all, every tuple is vacuously certain, a degenerate outcome reported as
Top rather than as some enumerated set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .deps import Mapping, RelAtom
from .match import FactIndex, match_atoms
from .terms import Var
from .values import Instance, Value, is_constant


@dataclass(frozen=True)
class ConjunctiveQuery:
    head: tuple[Var, ...]
    body: tuple[RelAtom, ...]


@dataclass(frozen=True)
class UCQ:
    name: str
    disjuncts: tuple[ConjunctiveQuery, ...]

    def arity(self) -> int:
        return len(self.disjuncts[0].head) if self.disjuncts else 0


@dataclass(frozen=True)
class CertainResult:
    """Either Top (no solution exists, everything is certain) or a set
    of constant tuples."""

    top: bool
    tuples: frozenset[tuple[Value, ...]]

    @staticmethod
    def of(tuples) -> "CertainResult":
        return CertainResult(False, frozenset(tuples))

    @staticmethod
    def everything() -> "CertainResult":
        return CertainResult(True, frozenset())


def eval_ucq(q: UCQ, inst: Instance) -> set[tuple[Value, ...]]:
    """All answers over the instance, nulls included."""
    index = FactIndex(inst)
    out: set[tuple[Value, ...]] = set()
    for cq in q.disjuncts:
        for binding in match_atoms(cq.body, index):
            out.add(tuple(binding[v] for v in cq.head))
    return out


def certain_answers(m: Mapping, q: UCQ, source: Instance) -> CertainResult:
    from .chase import chase_mapping  # chase depends on deps, not on queries

    outcome = chase_mapping(source, m)
    if not outcome.ok:
        return CertainResult.everything()
    answers = eval_ucq(q, outcome.instance)
    return CertainResult.of(t for t in answers if all(is_constant(v) for v in t))
