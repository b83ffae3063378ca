"""Chase procedures.

Two engines share this module. The second-order chase instantiates the
dependency's subterms over the active domain, assigns each non-atomic
term a fresh labeled null in a function table, merges table values as
the equality conclusions demand (congruence maintained throughout, every
merge moving to the lower value in the term order), and only then fires
the clause conclusions to emit target facts. The standard chase handles
st-tgds plus target egds and weakly acyclic target tgds by the usual
fixpoint: source tgds fire with memoized fresh nulls, then target egds
run to fixpoint between tgd rounds until nothing changes.

A failed chase (two distinct constants forced equal) certifies that the
source instance has no solution at all; a successful one returns a
universal solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .deps import (
    Clause,
    Egd,
    EqAtom,
    FOTgd,
    Mapping,
    RelAtom,
    StSODependency,
    require_weakly_acyclic,
)
from .ground import GTerm, ground_term, gterm_str, term_universe
from .match import FactIndex, match_atoms
from .terms import Var, term_var_set
from .values import Constant, Fact, Instance, Null, Value, value_key


class ConstantClash(Exception):
    def __init__(self, a: Value, b: Value):
        super().__init__(f"cannot equate distinct constants {a} and {b}")
        self.pair = (a, b)


class FunctionTable:
    """Values of the instantiated subterms of a dependency.

    Domain values are fixed points; every non-atomic term starts at its
    own fresh null. Merges always replace a value by a smaller one in
    the order (constants first, then nulls by creation), and the
    congruence invariant is maintained: terms with pairwise equal
    children hold equal values.
    """

    def __init__(self, terms: list[GTerm], first_null: int = 1):
        self.terms = terms
        self.F: dict[GTerm, Value] = {}
        self._parent: dict[Value, Value] = {}
        self._sig_of: dict[GTerm, tuple] = {}
        self._sig_table: dict[tuple, GTerm] = {}
        self._uses: dict[Value, list[GTerm]] = {}
        self.merge_count = 0
        next_null = first_null
        for t in terms:
            if not isinstance(t, tuple):
                self.F[t] = t
                self._parent.setdefault(t, t)
                continue
            v = Null(next_null)
            next_null += 1
            self.F[t] = v
            self._parent[v] = v
            sig = self._signature(t)
            self._sig_of[t] = sig
            self._sig_table[sig] = t
            for c in sig[1]:
                self._uses.setdefault(c, []).append(t)
        self.next_null = next_null

    def _signature(self, t: tuple) -> tuple:
        return (t[0], tuple(self.value(c) for c in t[1]))

    def find(self, v: Value) -> Value:
        root = v
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[v] != root:
            self._parent[v], v = root, self._parent[v]
        return root

    def value(self, t: GTerm) -> Value:
        return self.find(self.F[t])

    def eval(self, term, binding: dict[Var, Value]) -> Value:
        return self.value(ground_term(term, binding))

    def merge(self, a: Value, b: Value) -> list[tuple[Value, Value]]:
        """Equate two values; returns the performed merges (winner, loser).
        Raises ConstantClash when both are distinct constants."""
        done: list[tuple[Value, Value]] = []
        queue = [(a, b)]
        while queue:
            x, y = queue.pop()
            x, y = self.find(x), self.find(y)
            if x == y:
                continue
            if isinstance(x, Constant) and isinstance(y, Constant):
                raise ConstantClash(*sorted((x, y), key=value_key))
            winner, loser = sorted((x, y), key=value_key)
            self._parent[loser] = winner
            self.merge_count += 1
            done.append((winner, loser))
            # Re-sign every term that mentioned the losing class; equal
            # signatures force their values together (congruence).
            for t in self._uses.pop(loser, ()):
                old_sig = self._sig_of[t]
                if self._sig_table.get(old_sig) is t:
                    del self._sig_table[old_sig]
                sig = self._signature(t)
                self._sig_of[t] = sig
                other = self._sig_table.get(sig)
                if other is None:
                    self._sig_table[sig] = t
                else:
                    queue.append((self.F[t], self.F[other]))
                for c in sig[1]:
                    self._uses.setdefault(c, []).append(t)
        return done

    def rows(self) -> list[tuple[str, Value]]:
        return [(gterm_str(t), self.value(t)) for t in self.terms if isinstance(t, tuple)]

    def rename_values(self, renaming: dict[Value, Value]) -> None:
        """Rewrite the table through a null renaming (canonical output)."""
        self.F = {t: renaming.get(self.value(t), self.value(t)) for t in self.terms}
        self._parent = {v: v for v in self.F.values()}
        for v in renaming.values():
            self._parent.setdefault(v, v)


@dataclass
class ChaseResult:
    ok: bool
    instance: Instance | None
    table: FunctionTable | None = None
    witness: tuple[Value, Value] | None = None
    trace: list[str] = field(default_factory=list)
    stats: dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# clause premise enumeration
#
# Premises mix relational atoms with term equalities. Relational atoms
# split into variable-connected components; each component's bindings
# are enumerated separately and equalities whose sides live in
# different components become hash joins on the equated table values.
# That keeps clauses like S(x) & S(y) & f(x)=f(y) -> ... linear in the
# matches instead of quadratic in the instance.


def _components(rels: tuple[RelAtom, ...]) -> list[list[RelAtom]]:
    groups: list[tuple[set[Var], list[RelAtom]]] = []
    for atom in rels:
        vs = {v for t in atom.args for v in term_var_set(t)}
        hit = [g for g in groups if g[0] & vs]
        if not hit:
            groups.append((vs, [atom]))
        else:
            base = hit[0]
            base[0].update(vs)
            base[1].append(atom)
            for g in hit[1:]:
                base[0].update(g[0])
                base[1].extend(g[1])
                groups.remove(g)
    return [atoms for _, atoms in groups]


def _clause_bindings(
    clause: Clause, index: FactIndex, table: FunctionTable
) -> list[dict[Var, Value]]:
    comps = _components(clause.premise_rels())
    parts: list[tuple[set[Var], list[dict[Var, Value]]]] = []
    for comp in comps:
        vs = {v for a in comp for t in a.args for v in term_var_set(t)}
        parts.append((vs, list(match_atoms(comp, index))))
    eqs = list(clause.premise_eqs())

    def part_of(vs: set[Var]) -> int | None:
        for i, (pv, _) in enumerate(parts):
            if vs <= pv:
                return i
        return None

    pending = list(eqs)
    progress = True
    while pending and progress:
        progress = False
        for eq in list(pending):
            lv, rv = term_var_set(eq.lhs), term_var_set(eq.rhs)
            li, ri = part_of(lv), part_of(rv)
            if li is None or ri is None:
                continue  # sides span several components; filtered at the end
            pending.remove(eq)
            progress = True
            if li == ri:
                pv, rows = parts[li]
                rows = [b for b in rows if table.eval(eq.lhs, b) == table.eval(eq.rhs, b)]
                parts[li] = (pv, rows)
                continue
            (lvs, lrows), (rvs, rrows) = parts[li], parts[ri]
            buckets: dict[Value, list[dict[Var, Value]]] = {}
            for b in rrows:
                buckets.setdefault(table.eval(eq.rhs, b), []).append(b)
            joined = []
            for b in lrows:
                for rb in buckets.get(table.eval(eq.lhs, b), ()):
                    joined.append({**b, **rb})
            keep = [li, ri]
            merged = (lvs | rvs, joined)
            parts = [p for i, p in enumerate(parts) if i not in keep]
            parts.append(merged)

    rows: list[dict[Var, Value]] = [{}]
    for _, prows in parts:
        rows = [{**a, **b} for a in rows for b in prows]
    for eq in pending:
        rows = [b for b in rows if table.eval(eq.lhs, b) == table.eval(eq.rhs, b)]
    return rows


# ---------------------------------------------------------------------------
# the second-order chase


def chase_stso(I: Instance, dep: StSODependency, *, trace: bool = False) -> ChaseResult:
    """Chase a ground instance with a second-order dependency.

    Equality conclusions are chased to fixpoint before any relational
    conclusion fires; firing then emits every clause's conclusion atoms
    with their terms read through the function table."""
    if not I.is_ground():
        raise ValueError("the second-order chase expects a ground source instance")
    started = time.perf_counter()
    domain = sorted(I.active_domain(), key=value_key)
    split = dep.split_conclusions()
    universe = term_universe(split, domain)
    table = FunctionTable(universe)
    index = FactIndex(I)
    log: list[str] = []

    egd_clauses = [c for c in split.clauses if isinstance(c.conclusion[0], EqAtom)]
    tgd_clauses = [c for c in split.clauses if isinstance(c.conclusion[0], RelAtom)]

    def fail(witness: tuple[Value, Value]) -> ChaseResult:
        log.append(f"fail: constants {witness[0]} and {witness[1]} forced equal")
        return ChaseResult(
            False,
            None,
            table=None,
            witness=witness,
            trace=log if trace else [],
            stats={"universe": len(universe), "millis": (time.perf_counter() - started) * 1e3},
        )

    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        for ci, clause in enumerate(egd_clauses, start=1):
            eq = clause.conclusion[0]
            assert isinstance(eq, EqAtom)
            for binding in _clause_bindings(clause, index, table):
                u = table.eval(eq.lhs, binding)
                v = table.eval(eq.rhs, binding)
                if u == v:
                    continue
                try:
                    merges = table.merge(u, v)
                except ConstantClash as clash:
                    return fail(clash.pair)
                changed = True
                if trace:
                    for winner, loser in merges:
                        log.append(f"equality clause {ci}: {loser} := {winner}")

    J = Instance()
    for ci, clause in enumerate(tgd_clauses, start=1):
        atom = clause.conclusion[0]
        assert isinstance(atom, RelAtom)
        for binding in _clause_bindings(clause, index, table):
            fact = Fact(atom.rel, tuple(table.eval(t, binding) for t in atom.args))
            if J.add(fact) and trace:
                log.append(f"clause {ci}: add {fact}")

    # Canonical null numbering over the emitted instance; the table is
    # renamed consistently, leftover table nulls numbered afterwards.
    renaming: dict[Value, Value] = {}
    for f in J.facts_sorted():
        for a in f.args:
            if isinstance(a, Null) and a not in renaming:
                renaming[a] = Null(len(renaming) + 1)
    seen_roots: set[Value] = set()
    for t in table.terms:
        v = table.value(t)
        if isinstance(v, Null) and v not in renaming and v not in seen_roots:
            seen_roots.add(v)
    for v in sorted(seen_roots, key=value_key):
        renaming[v] = Null(len(renaming) + 1)
    J = Instance(Fact(f.rel, tuple(renaming.get(a, a) for a in f.args)) for f in J)
    table.rename_values(renaming)

    return ChaseResult(
        True,
        J,
        table=table,
        trace=log if trace else [],
        stats={
            "universe": len(universe),
            "merges": table.merge_count,
            "egd_rounds": rounds,
            "facts": len(J),
            "millis": (time.perf_counter() - started) * 1e3,
        },
    )


# ---------------------------------------------------------------------------
# the standard chase


def _apply_merges(J: Instance, find) -> Instance:
    return Instance(Fact(f.rel, tuple(find(a) for a in f.args)) for f in J)


def _egd_fixpoint(
    J: Instance, egds: list[Egd], log: list[str], trace: bool
) -> tuple[Instance, bool, tuple[Value, Value] | None]:
    """Run target egds to fixpoint; returns (instance, changed, clash)."""
    changed_any = False
    while True:
        index = FactIndex(J)
        parent: dict[Value, Value] = {}

        def find(v: Value) -> Value:
            while parent.get(v, v) != v:
                v = parent[v]
            return v

        merged = False
        clash: tuple[Value, Value] | None = None
        for ei, egd in enumerate(egds, start=1):
            for binding in match_atoms(egd.premise, index):
                u, v = find(binding[egd.lhs]), find(binding[egd.rhs])
                if u == v:
                    continue
                if isinstance(u, Constant) and isinstance(v, Constant):
                    clash = tuple(sorted((u, v), key=value_key))  # type: ignore[assignment]
                    if trace:
                        log.append(f"fail: egd {ei} forces {clash[0]} = {clash[1]}")
                    return J, changed_any, clash
                winner, loser = sorted((u, v), key=value_key)
                parent[loser] = winner
                merged = True
                if trace:
                    log.append(f"egd {ei}: {loser} := {winner}")
        if not merged:
            return J, changed_any, None
        changed_any = True
        J = _apply_merges(J, find)


def _standard_chase_phase(
    J: Instance,
    egds: list[Egd],
    tgds: list[FOTgd],
    next_null: int,
    log: list[str],
    trace: bool,
) -> tuple[Instance, int, tuple[Value, Value] | None]:
    """Alternate egd fixpoints with restricted tgd rounds until stable."""
    while True:
        J, _, clash = _egd_fixpoint(J, egds, log, trace)
        if clash is not None:
            return J, next_null, clash
        index = FactIndex(J)
        fired = False
        for ti, tgd in enumerate(tgds, start=1):
            ex = tgd.existential_vars()
            for binding in match_atoms(tgd.premise, index):
                satisfied = False
                for _ in match_atoms(tgd.conclusion, index, binding):
                    satisfied = True
                    break
                if satisfied:
                    continue
                full = dict(binding)
                for y in ex:
                    full[y] = Null(next_null)
                    next_null += 1
                for atom in tgd.conclusion:
                    fact = Fact(atom.rel, tuple(full[t] for t in atom.args))  # type: ignore[index]
                    if J.add(fact):
                        index.add(fact)
                        fired = True
                        if trace:
                            log.append(f"tgd {ti}: add {fact}")
        if not fired:
            return J, next_null, None


def chase_standard(I: Instance, m: Mapping, *, trace: bool = False) -> ChaseResult:
    """Chase an instance with st-tgds, then target egds and weakly
    acyclic target tgds. Source nulls, if any, are matched like any
    other value (chaining chases through a sequence relies on this)."""
    require_weakly_acyclic(m.target_tgds)
    started = time.perf_counter()
    log: list[str] = []

    def fail(witness: tuple[Value, Value]) -> ChaseResult:
        return ChaseResult(
            False,
            None,
            witness=witness,
            trace=log if trace else [],
            stats={"millis": (time.perf_counter() - started) * 1e3},
        )

    source_index = FactIndex(I)
    for ei, egd in enumerate(m.source_egds, start=1):
        for binding in match_atoms(egd.premise, source_index):
            u, v = binding[egd.lhs], binding[egd.rhs]
            if u != v:
                if trace:
                    log.append(f"source egd {ei} violated: {u} != {v}")
                return fail(tuple(sorted((u, v), key=value_key)))  # type: ignore[arg-type]

    next_null = max((n.index for n in I.nulls()), default=0) + 1
    J = Instance()
    for ti, tgd in enumerate(m.st_tgds, start=1):
        univ = tgd.universal_vars()
        ex = tgd.existential_vars()
        memo: dict[tuple[Value, ...], dict[Var, Value]] = {}
        for binding in match_atoms(tgd.premise, source_index):
            key = tuple(binding[v] for v in univ)
            fresh = memo.get(key)
            if fresh is None:
                fresh = {}
                for y in ex:
                    fresh[y] = Null(next_null)
                    next_null += 1
                memo[key] = fresh
            full = {**binding, **fresh}
            for atom in tgd.conclusion:
                fact = Fact(atom.rel, tuple(full[t] for t in atom.args))  # type: ignore[index]
                if J.add(fact) and trace:
                    log.append(f"st-tgd {ti}: add {fact}")

    J, next_null, clash = _standard_chase_phase(
        J, m.target_egds, m.target_tgds, next_null, log, trace
    )
    if clash is not None:
        return fail(clash)

    # Source nulls stay as they are; only chase-created nulls renumber.
    source_nulls = I.nulls()
    renaming: dict[Value, Value] = {}
    base = max((n.index for n in source_nulls), default=0)
    for f in J.facts_sorted():
        for a in f.args:
            if isinstance(a, Null) and a not in source_nulls and a not in renaming:
                renaming[a] = Null(base + len(renaming) + 1)
    J = Instance(Fact(f.rel, tuple(renaming.get(a, a) for a in f.args)) for f in J)

    return ChaseResult(
        True,
        J,
        trace=log if trace else [],
        stats={"facts": len(J), "millis": (time.perf_counter() - started) * 1e3},
    )


def chase_so_standard(I: Instance, m: Mapping, *, trace: bool = False) -> ChaseResult:
    """Second-order chase followed by the target-constraint phase."""
    assert m.stso is not None
    require_weakly_acyclic(m.target_tgds)
    first = chase_stso(I, m.stso, trace=trace)
    if not first.ok:
        return first
    started = time.perf_counter()
    log = list(first.trace)
    J = first.instance
    assert J is not None
    next_null = J.max_null_index() + 1
    if first.table is not None:
        next_null = max(next_null, first.table.next_null)
    J, next_null, clash = _standard_chase_phase(
        J, m.target_egds, m.target_tgds, next_null, log, trace
    )
    stats = dict(first.stats)
    stats["millis"] = stats.get("millis", 0.0) + (time.perf_counter() - started) * 1e3
    if clash is not None:
        return ChaseResult(False, None, witness=clash, trace=log if trace else [], stats=stats)
    J = J.canonical()
    stats["facts"] = len(J)
    return ChaseResult(True, J, table=first.table, trace=log if trace else [], stats=stats)


def chase_mapping(I: Instance, m: Mapping, *, trace: bool = False) -> ChaseResult:
    if m.stso is not None:
        return chase_so_standard(I, m, trace=trace)
    return chase_standard(I, m, trace=trace)


@dataclass
class SequenceResult:
    ok: bool
    stages: list[ChaseResult]
    instance: Instance | None


def chase_sequence(I: Instance, mappings: list[Mapping], *, trace: bool = False) -> SequenceResult:
    """Chase through a chain of mappings, each stage consuming the
    previous stage's result. The final instance is a universal solution
    for the chain's composition; any stage failure certifies that the
    source has no solution through the chain."""
    stages: list[ChaseResult] = []
    cur = I
    for m in mappings:
        res = chase_mapping(cur, m, trace=trace)
        stages.append(res)
        if not res.ok:
            return SequenceResult(False, stages, None)
        assert res.instance is not None
        cur = res.instance
    return SequenceResult(True, stages, cur)
