"""Dependency ASTs: tgds, egds, second-order dependencies, mappings.

The FO classes keep premises and conclusions as relational atoms over
variables. Second-order dependencies declare function symbols and hold
clauses whose premises mix relational atoms (variable arguments only)
with equalities between function terms, and whose conclusions are
relational atoms over terms or term equalities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .terms import App, Term, Var, depth, is_var, subterms, term_vars

@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True, slots=True)
class RelAtom:
    rel: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.rel}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True, slots=True)
class EqAtom:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


Atom = RelAtom | EqAtom


def atom_vars(atom: Atom) -> list[Var]:
    if isinstance(atom, RelAtom):
        out: list[Var] = []
        for a in atom.args:
            out.extend(term_vars(a))
        return out
    return term_vars(atom.lhs) + term_vars(atom.rhs)


def atom_terms(atom: Atom) -> list[Term]:
    if isinstance(atom, RelAtom):
        return list(atom.args)
    return [atom.lhs, atom.rhs]


# ---------------------------------------------------------------------------
# first-order dependencies


@dataclass(frozen=True)
class FOTgd:
    """A tuple-generating dependency; conclusion variables absent from the
    premise are existentially quantified."""

    premise: tuple[RelAtom, ...]
    conclusion: tuple[RelAtom, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def universal_vars(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for atom in self.premise:
            for v in atom_vars(atom):
                seen.setdefault(v, None)
        return list(seen)

    def existential_vars(self) -> list[Var]:
        univ = set(self.universal_vars())
        seen: dict[Var, None] = {}
        for atom in self.conclusion:
            for v in atom_vars(atom):
                if v not in univ:
                    seen.setdefault(v, None)
        return list(seen)

    def __str__(self) -> str:
        prem = " & ".join(str(a) for a in self.premise)
        conc = " & ".join(str(a) for a in self.conclusion)
        ex = self.existential_vars()
        if ex:
            conc = f"exists {', '.join(v.name for v in ex)}: {conc}"
        return f"{prem} -> {conc}"


@dataclass(frozen=True)
class Egd:
    """An equality-generating dependency: premise atoms force lhs = rhs."""

    premise: tuple[RelAtom, ...]
    lhs: Var
    rhs: Var
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        prem = " & ".join(str(a) for a in self.premise)
        return f"{prem} -> {self.lhs} = {self.rhs}"


# ---------------------------------------------------------------------------
# second-order dependencies


@dataclass(frozen=True)
class Clause:
    """One implication inside a second-order dependency.

    Premise: relational atoms over variables plus equalities between
    terms. Conclusion: relational atoms over terms, or term equalities.
    All variables are universally quantified at the clause level.
    """

    premise: tuple[Atom, ...]
    conclusion: tuple[Atom, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def premise_rels(self) -> tuple[RelAtom, ...]:
        return tuple(a for a in self.premise if isinstance(a, RelAtom))

    def premise_eqs(self) -> tuple[EqAtom, ...]:
        return tuple(a for a in self.premise if isinstance(a, EqAtom))

    def variables(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for atom in self.premise + self.conclusion:
            for v in atom_vars(atom):
                seen.setdefault(v, None)
        return list(seen)

    def all_terms(self) -> list[Term]:
        out: list[Term] = []
        for atom in self.premise + self.conclusion:
            out.extend(atom_terms(atom))
        return out

    def __str__(self) -> str:
        prem = " & ".join(str(a) for a in self.premise)
        conc = " & ".join(str(a) for a in self.conclusion)
        return f"{prem} -> {conc}"


@dataclass
class StSODependency:
    """A second-order source-to-target dependency: existentially
    quantified function symbols over a conjunction of clauses."""

    functions: dict[str, int]
    clauses: list[Clause]

    def tgd_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if any(isinstance(a, RelAtom) for a in c.conclusion)]

    def egd_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if any(isinstance(a, EqAtom) for a in c.conclusion)]

    def has_egd_parts(self) -> bool:
        return any(isinstance(a, EqAtom) for c in self.clauses for a in c.conclusion)

    def all_terms(self) -> list[Term]:
        seen: dict[Term, None] = {}
        for c in self.clauses:
            for t in c.all_terms():
                for s in subterms(t):
                    seen.setdefault(s, None)
        return list(seen)

    def nesting_depth(self) -> int:
        return max((depth(t) for c in self.clauses for t in c.all_terms()), default=0)

    def is_unnested(self) -> bool:
        return self.nesting_depth() <= 1

    def split_conclusions(self) -> "StSODependency":
        """One conclusion atom per clause; clause-level quantification
        makes the split lossless."""
        out = []
        for c in self.clauses:
            if len(c.conclusion) <= 1:
                out.append(c)
            else:
                out.extend(Clause(c.premise, (a,)) for a in c.conclusion)
        return StSODependency(dict(self.functions), out)

    def __str__(self) -> str:
        fns = ", ".join(sorted(self.functions))
        body = " & ".join(f"({c})" for c in self.clauses)
        return f"exists {fns}: {body}"


# ---------------------------------------------------------------------------
# mappings

from .values import Schema  # noqa: E402  (Schema lives with instances)


@dataclass
class Mapping:
    """A schema mapping: source and target schemas plus dependencies.

    The source-to-target part is either a list of st-tgds or a single
    second-order dependency, never both. Target constraints are egds and
    tgds over the target schema; source egds constrain source instances.
    """

    source: Schema
    target: Schema
    st_tgds: list[FOTgd] = field(default_factory=list)
    stso: StSODependency | None = None
    source_egds: list[Egd] = field(default_factory=list)
    target_egds: list[Egd] = field(default_factory=list)
    target_tgds: list[FOTgd] = field(default_factory=list)

    @property
    def is_so(self) -> bool:
        return self.stso is not None

    def kind(self) -> str:
        if self.is_so:
            if self.target_egds or self.target_tgds:
                return "so-standard"
            return "st-so"
        if self.target_egds or self.target_tgds:
            return "standard"
        return "st-tgd"


def infer_schemas(dep: StSODependency) -> tuple[Schema, Schema]:
    """Source and target schemas read off the dependency's atoms:
    premise relations on one side, conclusion relations on the other."""
    src: dict[str, int] = {}
    tgt: dict[str, int] = {}
    for clause in dep.clauses:
        for atom in clause.premise_rels():
            src.setdefault(atom.rel, len(atom.args))
        for atom in clause.conclusion:
            if isinstance(atom, RelAtom):
                tgt.setdefault(atom.rel, len(atom.args))
    return Schema(src), Schema(tgt)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str
    span: SourceSpan | None = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}: {self.message}"


def _check_rel_atom(atom: RelAtom, schema: Schema, side: str, out: list[Diagnostic]) -> None:
    if atom.rel not in schema:
        out.append(Diagnostic("error", f"{side} atom uses unknown relation {atom.rel}"))
    elif schema.arity(atom.rel) != len(atom.args):
        out.append(
            Diagnostic(
                "error",
                f"{atom.rel} used with arity {len(atom.args)}, declared {schema.arity(atom.rel)}",
            )
        )


def _check_fo_tgd(tgd: FOTgd, prem_schema: Schema, conc_schema: Schema, out: list[Diagnostic]) -> None:
    for atom in tgd.premise:
        _check_rel_atom(atom, prem_schema, "premise", out)
        for t in atom.args:
            if not is_var(t):
                out.append(Diagnostic("error", f"non-variable argument {t} in premise atom {atom}"))
    for atom in tgd.conclusion:
        _check_rel_atom(atom, conc_schema, "conclusion", out)
        for t in atom.args:
            if not is_var(t):
                out.append(Diagnostic("error", f"non-variable argument {t} in conclusion atom {atom}"))
    if not tgd.premise:
        out.append(Diagnostic("error", f"tgd with empty premise: {tgd}"))


def _check_egd(egd: Egd, schema: Schema, out: list[Diagnostic]) -> None:
    prem_vars: set[Var] = set()
    for atom in egd.premise:
        _check_rel_atom(atom, schema, "premise", out)
        for t in atom.args:
            if not is_var(t):
                out.append(Diagnostic("error", f"non-variable argument {t} in egd premise {atom}"))
            else:
                prem_vars.add(t)
    for v in (egd.lhs, egd.rhs):
        if v not in prem_vars:
            out.append(Diagnostic("error", f"egd equates unbound variable {v}"))


def _term_function_uses(t: Term, uses: dict[str, set[int]]) -> None:
    if isinstance(t, App):
        uses.setdefault(t.fn, set()).add(len(t.args))
        for a in t.args:
            _term_function_uses(a, uses)


def _check_stso(dep: StSODependency, source: Schema, target: Schema, out: list[Diagnostic]) -> None:
    uses: dict[str, set[int]] = {}
    for ci, clause in enumerate(dep.clauses, start=1):
        if not any(isinstance(a, RelAtom) for a in clause.premise):
            out.append(Diagnostic("error", f"clause {ci} has no relational premise atom"))
        prem_vars: set[Var] = set()
        for atom in clause.premise:
            if isinstance(atom, RelAtom):
                _check_rel_atom(atom, source, "premise", out)
                for t in atom.args:
                    if not is_var(t):
                        out.append(
                            Diagnostic(
                                "error",
                                f"clause {ci}: premise atom {atom} has non-variable argument {t}",
                            )
                        )
                    else:
                        prem_vars.add(t)
            else:
                _term_function_uses(atom.lhs, uses)
                _term_function_uses(atom.rhs, uses)
        if not clause.conclusion:
            out.append(Diagnostic("error", f"clause {ci} has empty conclusion"))
        for atom in clause.conclusion:
            if isinstance(atom, RelAtom):
                _check_rel_atom(atom, target, "conclusion", out)
                for t in atom.args:
                    _term_function_uses(t, uses)
            else:
                _term_function_uses(atom.lhs, uses)
                _term_function_uses(atom.rhs, uses)
        for v in clause.variables():
            if v not in prem_vars:
                out.append(
                    Diagnostic(
                        "error",
                        f"clause {ci}: variable {v} does not occur in a relational premise atom",
                    )
                )
    for fn, arities in sorted(uses.items()):
        if fn not in dep.functions:
            out.append(Diagnostic("error", f"undeclared function symbol {fn}"))
        elif arities != {dep.functions[fn]}:
            got = ", ".join(str(a) for a in sorted(arities))
            out.append(
                Diagnostic(
                    "error",
                    f"function {fn} declared with arity {dep.functions[fn]} but used with {got}",
                )
            )
    for fn in sorted(dep.functions):
        if fn not in uses:
            out.append(Diagnostic("warning", f"declared function {fn} is never used"))


def validate(mapping: Mapping) -> list[Diagnostic]:
    """Structural checks. Errors make the mapping unusable; warnings do not."""
    out: list[Diagnostic] = []
    if mapping.st_tgds and mapping.stso is not None:
        out.append(Diagnostic("error", "mapping has both st-tgds and a second-order dependency"))
    overlap = set(mapping.source.names()) & set(mapping.target.names())
    if overlap:
        out.append(
            Diagnostic("warning", f"source and target schemas share relations: {sorted(overlap)}")
        )
    for tgd in mapping.st_tgds:
        _check_fo_tgd(tgd, mapping.source, mapping.target, out)
    if mapping.stso is not None:
        _check_stso(mapping.stso, mapping.source, mapping.target, out)
    for egd in mapping.source_egds:
        _check_egd(egd, mapping.source, out)
    for egd in mapping.target_egds:
        _check_egd(egd, mapping.target, out)
    for tgd in mapping.target_tgds:
        _check_fo_tgd(tgd, mapping.target, mapping.target, out)
    return out


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


# ---------------------------------------------------------------------------
# weak acyclicity

Position = tuple[str, int]


class DependencyGraph:
    """Position graph of a set of tgds: nodes are (relation, index) pairs;
    an edge means a value can flow between the positions, special when the
    flow can create a fresh value."""

    def __init__(self, tgds: Iterable[FOTgd]):
        self.ordinary: set[tuple[Position, Position]] = set()
        self.special: set[tuple[Position, Position]] = set()
        for tgd in tgds:
            prem_pos: dict[Var, set[Position]] = {}
            for atom in tgd.premise:
                for i, t in enumerate(atom.args):
                    if isinstance(t, Var):
                        prem_pos.setdefault(t, set()).add((atom.rel, i))
            univ = set(prem_pos)
            conc_univ_pos: dict[Var, set[Position]] = {}
            exist_pos: set[Position] = set()
            for atom in tgd.conclusion:
                for i, t in enumerate(atom.args):
                    if not isinstance(t, Var):
                        continue
                    if t in univ:
                        conc_univ_pos.setdefault(t, set()).add((atom.rel, i))
                    else:
                        exist_pos.add((atom.rel, i))
            for v, targets in conc_univ_pos.items():
                for p1 in prem_pos[v]:
                    for p2 in targets:
                        self.ordinary.add((p1, p2))
                    for p2 in exist_pos:
                        self.special.add((p1, p2))

    def edges(self) -> set[tuple[Position, Position, bool]]:
        out = {(a, b, False) for a, b in self.ordinary}
        out |= {(a, b, True) for a, b in self.special}
        return out

    def special_cycle(self) -> list[Position] | None:
        """A cycle through a special edge, or None when there is none."""
        succ: dict[Position, set[Position]] = {}
        for a, b in self.ordinary | self.special:
            succ.setdefault(a, set()).add(b)
            succ.setdefault(b, set())

        # Strongly connected components; a special edge inside one
        # component closes a cycle through it.
        index: dict[Position, int] = {}
        low: dict[Position, int] = {}
        comp: dict[Position, int] = {}
        stack: list[Position] = []
        on_stack: set[Position] = set()
        counter = [0]
        comp_count = [0]

        def strongconnect(root: Position) -> None:
            work = [(root, iter(sorted(succ[root])))]
            index[root] = low[root] = counter[0]
            counter[0] += 1
            stack.append(root)
            on_stack.add(root)
            while work:
                node, it = work[-1]
                advanced = False
                for nxt in it:
                    if nxt not in index:
                        index[nxt] = low[nxt] = counter[0]
                        counter[0] += 1
                        stack.append(nxt)
                        on_stack.add(nxt)
                        work.append((nxt, iter(sorted(succ[nxt]))))
                        advanced = True
                        break
                    if nxt in on_stack:
                        low[node] = min(low[node], index[nxt])
                if advanced:
                    continue
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[node])
                if low[node] == index[node]:
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp[w] = comp_count[0]
                        if w == node:
                            break
                    comp_count[0] += 1

        for node in sorted(succ):
            if node not in index:
                strongconnect(node)

        for a, b in sorted(self.special):
            if comp[a] == comp[b]:
                return self._cycle_through(a, b, succ)
        return None

    def _cycle_through(self, a: Position, b: Position, succ: dict[Position, set[Position]]) -> list[Position]:
        # BFS path b -> a; the special edge a -> b closes the cycle.
        if a == b:
            return [a]
        prev: dict[Position, Position] = {}
        frontier = [b]
        seen = {b}
        while frontier:
            nxt_frontier = []
            for node in frontier:
                for nxt in sorted(succ.get(node, ())):
                    if nxt in seen:
                        continue
                    prev[nxt] = node
                    if nxt == a:
                        path = [a]
                        while path[-1] != b:
                            path.append(prev[path[-1]])
                        path.reverse()
                        return path
                    seen.add(nxt)
                    nxt_frontier.append(nxt)
            frontier = nxt_frontier
        return [a, b]  # unreachable for a genuine SCC witness


def weakly_acyclic(tgds: Iterable[FOTgd]) -> bool:
    return DependencyGraph(tgds).special_cycle() is None


class NotWeaklyAcyclic(Exception):
    def __init__(self, cycle: list[Position]):
        pretty = " -> ".join(f"{r}.{i}" for r, i in cycle)
        super().__init__(f"target tgds are not weakly acyclic (cycle {pretty})")
        self.cycle = cycle


def require_weakly_acyclic(tgds: Iterable[FOTgd]) -> None:
    cycle = DependencyGraph(tgds).special_cycle()
    if cycle is not None:
        raise NotWeaklyAcyclic(cycle)


# ---------------------------------------------------------------------------
# skolemization and fresh names

_NAME_POOL = "fghklmnpqrstuvw"


class FreshNamer:
    """Hands out function symbols avoiding a reserved set."""

    def __init__(self, reserved: Iterable[str] = ()):
        self.reserved = set(reserved)
        self._counter = 0

    def reserve(self, name: str) -> str:
        if name in self.reserved:
            raise ValueError(f"name {name} already taken")
        self.reserved.add(name)
        return name

    def fresh(self, stem: str | None = None) -> str:
        if stem is not None:
            if stem not in self.reserved:
                return self.reserve(stem)
            k = 2
            while f"{stem}{k}" in self.reserved:
                k += 1
            return self.reserve(f"{stem}{k}")
        while True:
            base = _NAME_POOL[self._counter % len(_NAME_POOL)]
            round_ = self._counter // len(_NAME_POOL)
            self._counter += 1
            name = base if round_ == 0 else f"{base}{round_}"
            if name not in self.reserved:
                return self.reserve(name)


def skolemize(tgds: Iterable[FOTgd], namer: FreshNamer | None = None) -> tuple[list[Clause], dict[str, int]]:
    """Replace existential variables by fresh function symbols applied to
    all universal variables, in order of first premise occurrence."""
    namer = namer or FreshNamer()
    functions: dict[str, int] = {}
    out: list[Clause] = []
    for tgd in tgds:
        univ = tgd.universal_vars()
        repl: dict[Var, Term] = {}
        for y in tgd.existential_vars():
            fn = namer.fresh()
            functions[fn] = len(univ)
            repl[y] = App(fn, tuple(univ))
        conclusion = tuple(
            RelAtom(a.rel, tuple(repl.get(t, t) if isinstance(t, Var) else t for t in a.args))
            for a in tgd.conclusion
        )
        out.append(Clause(tuple(tgd.premise), conclusion))
    return out, functions


# ---------------------------------------------------------------------------
# canonical clause form (comparison, dedup)


def canonical_atom_str(atom: Atom, renaming: dict[Var, str]) -> str:
    def go(t: Term) -> str:
        if isinstance(t, Var):
            if t not in renaming:
                renaming[t] = f"v{len(renaming) + 1}"
            return renaming[t]
        return f"{t.fn}({','.join(go(a) for a in t.args)})"

    if isinstance(atom, RelAtom):
        return f"{atom.rel}({','.join(go(a) for a in atom.args)})"
    return f"{go(atom.lhs)}={go(atom.rhs)}"


def canonical_clause_str(premise: Iterable[Atom], conclusion: Iterable[Atom]) -> str:
    """Variables renamed by first appearance, atom order preserved."""
    renaming: dict[Var, str] = {}
    prem = " & ".join(canonical_atom_str(a, renaming) for a in premise)
    conc = " & ".join(canonical_atom_str(a, renaming) for a in conclusion)
    return f"{prem} -> {conc}"


def canonical_clause_set(dep: StSODependency) -> set[str]:
    split = dep.split_conclusions()
    return {canonical_clause_str(c.premise, c.conclusion) for c in split.clauses}


def canonical_fo_tgd_str(tgd: FOTgd) -> str:
    return canonical_clause_str(tgd.premise, tgd.conclusion)


def canonical_egd_str(egd: Egd) -> str:
    renaming: dict[Var, str] = {}
    prem = " & ".join(canonical_atom_str(a, renaming) for a in egd.premise)
    conc = canonical_atom_str(EqAtom(egd.lhs, egd.rhs), renaming)
    return f"{prem} -> {conc}"
