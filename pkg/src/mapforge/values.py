"""Values, facts, instances and homomorphisms.

Instances are finite sets of facts over constants and labeled nulls.
Constants are rigid: a homomorphism may move nulls but must fix every
constant. Everything downstream (chase, composition oracle, certain
answers) leans on the small vocabulary defined here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator


class BudgetExceeded(Exception):
    """A bounded search ran out of its assignment or size budget."""

    def __init__(self, what: str, limit: int) -> None:
        super().__init__(f"{what} budget exceeded (limit {limit})")
        self.what = what
        self.limit = limit


@dataclass(frozen=True, slots=True)
class Constant:
    label: str

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True, slots=True)
class Null:
    index: int

    def __str__(self) -> str:
        return f"_N{self.index}"


Value = Constant | Null


def value_key(v: Value) -> tuple:
    # Constants sort before nulls; constants by label, nulls by index.
    if isinstance(v, Constant):
        return (0, v.label, 0)
    return (1, "", v.index)


def is_constant(v: Value) -> bool:
    return isinstance(v, Constant)


@dataclass(frozen=True, slots=True)
class Fact:
    rel: str
    args: tuple[Value, ...]

    def __str__(self) -> str:
        return f"{self.rel}({', '.join(str(a) for a in self.args)})"


def fact_key(f: Fact) -> tuple:
    return (f.rel, len(f.args), tuple(value_key(a) for a in f.args))


class Schema:
    """Relation names with fixed arities."""

    def __init__(self, arities: dict[str, int] | Iterable[tuple[str, int]] = ()):
        self._arities: dict[str, int] = dict(arities)

    @property
    def arities(self) -> dict[str, int]:
        return dict(self._arities)

    def names(self) -> list[str]:
        return sorted(self._arities)

    def arity(self, name: str) -> int:
        return self._arities[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arities

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Schema) and self._arities == other._arities

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}/{a}" for n, a in sorted(self._arities.items()))
        return f"Schema({inner})"

    def union(self, other: "Schema") -> "Schema":
        merged = dict(self._arities)
        for name, ar in other._arities.items():
            if merged.get(name, ar) != ar:
                raise ValueError(f"arity clash for {name}: {merged[name]} vs {ar}")
            merged[name] = ar
        return Schema(merged)

    def disjoint_from(self, other: "Schema") -> bool:
        return not set(self._arities) & set(other._arities)

    def renamed(self, fn) -> "Schema":
        return Schema({fn(n): a for n, a in self._arities.items()})


class Instance:
    """A finite set of facts.

    Mutable while being built (the chase adds facts incrementally); two
    instances compare equal when they hold the same fact set.
    """

    def __init__(self, facts: Iterable[Fact] = ()):
        self._facts: set[Fact] = set(facts)

    def add(self, fact: Fact) -> bool:
        if fact in self._facts:
            return False
        self._facts.add(fact)
        return True

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Instance) and self._facts == other._facts

    def __repr__(self) -> str:
        return f"Instance({len(self._facts)} facts)"

    def facts_sorted(self) -> list[Fact]:
        return sorted(self._facts, key=fact_key)

    def relations(self) -> set[str]:
        return {f.rel for f in self._facts}

    def restricted(self, names: Iterable[str]) -> "Instance":
        keep = set(names)
        return Instance(f for f in self._facts if f.rel in keep)

    def union(self, other: "Instance") -> "Instance":
        return Instance(set(self._facts) | set(other._facts))

    def active_domain(self) -> set[Value]:
        return {a for f in self._facts for a in f.args}

    def constants(self) -> set[Constant]:
        return {a for f in self._facts for a in f.args if isinstance(a, Constant)}

    def nulls(self) -> set[Null]:
        return {a for f in self._facts for a in f.args if isinstance(a, Null)}

    def is_ground(self) -> bool:
        return not self.nulls()

    def max_null_index(self) -> int:
        return max((n.index for n in self.nulls()), default=0)

    def canonical(self) -> "Instance":
        """Renumber nulls as _N1, _N2, ... by first appearance in the
        lexicographically sorted fact list."""
        renaming: dict[Null, Null] = {}
        for f in self.facts_sorted():
            for a in f.args:
                if isinstance(a, Null) and a not in renaming:
                    renaming[a] = Null(len(renaming) + 1)
        return Instance(
            Fact(f.rel, tuple(renaming.get(a, a) for a in f.args)) for f in self._facts
        )

    def schema_violations(self, schema: Schema) -> list[str]:
        out = []
        for f in self.facts_sorted():
            if f.rel not in schema:
                out.append(f"unknown relation {f.rel}")
            elif schema.arity(f.rel) != len(f.args):
                out.append(
                    f"{f.rel} used with arity {len(f.args)}, declared {schema.arity(f.rel)}"
                )
        return out


def apply_homomorphism(h: dict[Value, Value], target: Fact | Instance) -> Fact | Instance:
    if isinstance(target, Fact):
        return Fact(target.rel, tuple(h.get(a, a) for a in target.args))
    return Instance(apply_homomorphism(h, f) for f in target)


def is_homomorphism(h: dict[Value, Value], source: Instance, target: Instance) -> bool:
    if any(isinstance(k, Constant) and k != v for k, v in h.items()):
        return False
    return all(apply_homomorphism(h, f) in target for f in source)


def find_homomorphism(
    source: Instance,
    target: Instance,
    *,
    limit: int | None = None,
) -> dict[Null, Value] | None:
    """Search for a homomorphism from source into target.

    Constants must match themselves; nulls may go anywhere. Returns the
    null assignment, or None when no homomorphism exists. Backtracking
    over source facts, most-constrained fact first; every candidate
    extension counts against ``limit`` (BudgetExceeded past it).
    """
    by_rel: dict[str, list[Fact]] = {}
    for f in target:
        by_rel.setdefault(f.rel, []).append(f)
    for fs in by_rel.values():
        fs.sort(key=fact_key)

    todo = source.facts_sorted()
    # Cheap static order: scarce target relations first, then many-null
    # facts late so bindings accumulate before the loosest constraints.
    todo.sort(key=lambda f: (len(by_rel.get(f.rel, ())), fact_key(f)))

    assignment: dict[Null, Value] = {}
    steps = 0

    def match(fact: Fact, cand: Fact) -> list[Null] | None:
        bound: list[Null] = []
        for a, b in zip(fact.args, cand.args):
            if isinstance(a, Constant):
                if a != b:
                    for n in bound:
                        del assignment[n]
                    return None
            else:
                cur = assignment.get(a)
                if cur is None:
                    assignment[a] = b
                    bound.append(a)
                elif cur != b:
                    for n in bound:
                        del assignment[n]
                    return None
        return bound

    def solve(i: int) -> bool:
        nonlocal steps
        if i == len(todo):
            return True
        fact = todo[i]
        for cand in by_rel.get(fact.rel, ()):
            if len(cand.args) != len(fact.args):
                continue
            steps += 1
            if limit is not None and steps > limit:
                raise BudgetExceeded("homomorphism assignments", limit)
            bound = match(fact, cand)
            if bound is None:
                continue
            if solve(i + 1):
                return True
            for n in bound:
                del assignment[n]
        return False

    if solve(0):
        return assignment
    return None


def homomorphically_equivalent(a: Instance, b: Instance, *, limit: int | None = None) -> bool:
    return (
        find_homomorphism(a, b, limit=limit) is not None
        and find_homomorphism(b, a, limit=limit) is not None
    )
