"""Conjunctive matching of variable atoms against an instance.

One engine serves premise evaluation in the chase, query evaluation and
the brute-force satisfaction checks: enumerate all bindings of the
variables such that every atom's image is a fact of the instance.
"""

from __future__ import annotations

from typing import Iterator

from .deps import RelAtom
from .terms import Var
from .values import Fact, Instance, Value


class FactIndex:
    """Facts grouped by relation and by (relation, position, value).

    Grows with the instance; candidate lists keep insertion order, which
    keeps everything downstream deterministic.
    """

    def __init__(self, inst: Instance | None = None):
        self.by_rel: dict[str, list[Fact]] = {}
        self.by_pos: dict[tuple[str, int, Value], list[Fact]] = {}
        if inst is not None:
            for f in inst.facts_sorted():
                self.add(f)

    def add(self, fact: Fact) -> None:
        self.by_rel.setdefault(fact.rel, []).append(fact)
        for i, v in enumerate(fact.args):
            self.by_pos.setdefault((fact.rel, i, v), []).append(fact)

    def candidates(self, atom: RelAtom, binding: dict[Var, Value]) -> list[Fact]:
        best: list[Fact] | None = None
        for i, t in enumerate(atom.args):
            if isinstance(t, Var) and t in binding:
                facts = self.by_pos.get((atom.rel, i, binding[t]), [])
                if best is None or len(facts) < len(best):
                    best = facts
                    if not best:
                        return []
        if best is not None:
            return best
        return self.by_rel.get(atom.rel, [])


def _bound_count(atom: RelAtom, binding: dict[Var, Value]) -> int:
    return sum(1 for t in atom.args if isinstance(t, Var) and t in binding)


def match_atoms(
    atoms: tuple[RelAtom, ...] | list[RelAtom],
    index: FactIndex,
    binding: dict[Var, Value] | None = None,
) -> Iterator[dict[Var, Value]]:
    """All bindings extending ``binding`` that place every atom in the
    indexed instance. Yielded dicts are snapshots safe to keep."""
    binding = dict(binding) if binding else {}
    rest = list(atoms)

    def step(pending: list[RelAtom]) -> Iterator[dict[Var, Value]]:
        if not pending:
            yield dict(binding)
            return
        # Most constrained atom first: more bound positions, fewer candidates.
        pending = sorted(
            pending,
            key=lambda a: (-_bound_count(a, binding), len(index.candidates(a, binding))),
        )
        atom, others = pending[0], pending[1:]
        for fact in index.candidates(atom, binding):
            if len(fact.args) != len(atom.args):
                continue
            newly: list[Var] = []
            ok = True
            for t, v in zip(atom.args, fact.args):
                if not isinstance(t, Var):
                    ok = False  # ground or functional argument: no match here
                    break
                cur = binding.get(t)
                if cur is None:
                    binding[t] = v
                    newly.append(t)
                elif cur != v:
                    ok = False
                    break
            if ok:
                yield from step(others)
            for t in newly:
                del binding[t]

    yield from step(rest)


def holds_fo_tgd(premise_binding: dict[Var, Value], conclusion, index: FactIndex) -> bool:
    """Does some extension of the binding place all conclusion atoms?"""
    for _ in match_atoms(conclusion, index, premise_binding):
        return True
    return False
