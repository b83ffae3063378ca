"""Composition of schema mappings, chain collapse, and decomposition.

Composing two standard mappings eliminates the intermediate schema: a
membership statement R(t1,...,tk) about an intermediate relation turns
into the equality f_R(t1,...,tk) = g_R(t1,...,tk) between two fresh
function symbols, dependencies over the intermediate schema are
instantiated with the finitely many term shapes that can reach each
relation position, and every variable left free by the elimination gets
guarded by the source-domain formula, disjunctions expanded away. The
result is a single second-order source-to-target dependency plus the
carried target constraints.

A longer chain collapses to an equivalent pair first: the head absorbs
every mapping but the last (intermediate source-to-target tgds become
target tgds over the union schema), and the tail is the last mapping
with its source widened to that union.

Decomposition is the reverse direction: a second-order dependency of
nesting depth d splits into d+1 standard mappings whose intermediate
schemas carry copies of the source relations and one graph relation per
function symbol, with functionality egds making the graphs functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .deps import (
    Atom,
    Clause,
    Egd,
    EqAtom,
    FOTgd,
    FreshNamer,
    Mapping,
    RelAtom,
    StSODependency,
    canonical_clause_str,
    require_weakly_acyclic,
    skolemize,
)
from .terms import App, HOLE, Term, Var, depth, fill, hole_count, is_var, skel, subst, term_vars
from .values import Schema


class ComposeError(Exception):
    pass


# ---------------------------------------------------------------------------
# source-domain formula


@dataclass(frozen=True)
class DomFormula:
    """dom(x): the disjunction, over every source relation position, of
    membership of x at that position (other positions existential)."""

    disjuncts: tuple[tuple[str, int, int], ...]  # (relation, position, arity)

    @staticmethod
    def of(schema: Schema) -> "DomFormula":
        out = []
        for rel in schema.names():
            for i in range(schema.arity(rel)):
                out.append((rel, i, schema.arity(rel)))
        return DomFormula(tuple(out))

    def guard(self, v: Var, choice: int, fresh) -> RelAtom:
        rel, pos, arity = self.disjuncts[choice]
        args = tuple(v if i == pos else fresh() for i in range(arity))
        return RelAtom(rel, args)

    def __str__(self) -> str:
        parts = []
        for rel, pos, arity in self.disjuncts:
            args = ", ".join("x" if i == pos else "_" for i in range(arity))
            parts.append(f"{rel}({args})")
        return " | ".join(parts)


# ---------------------------------------------------------------------------
# shape closure


class SkeletonClosure:
    """For every intermediate relation position, the term shapes that
    source-to-target and intermediate tgds can place there.

    Seeded by the Skolemized source-to-target conclusions and closed
    under the Skolemized intermediate tgds, where each premise variable
    may take any shape known at any of its premise positions. Weak
    acyclicity keeps the shape depth bounded; the depth cap only guards
    against a non-weakly-acyclic input slipping through."""

    def __init__(
        self,
        seed_clauses: list[Clause],
        closure_clauses: list[Clause],
        schema: Schema,
    ):
        self.shapes: dict[tuple[str, int], dict[Term, None]] = {
            (rel, i): {} for rel in schema.names() for i in range(schema.arity(rel))
        }
        cap = sum(schema.arity(r) for r in schema.names()) + 1
        for clause in seed_clauses:
            for atom in clause.conclusion:
                assert isinstance(atom, RelAtom)
                if atom.rel not in schema:
                    continue
                for i, t in enumerate(atom.args):
                    self._add(atom.rel, i, skel(t), cap)
        changed = True
        while changed:
            changed = False
            for clause in closure_clauses:
                changed |= self._apply(clause, schema, cap)

    def _add(self, rel: str, pos: int, shape: Term, cap: int) -> bool:
        if depth(shape) > cap:
            raise ComposeError(
                "shape closure exceeded the weak-acyclicity depth bound; "
                "intermediate tgds are unexpectedly cyclic"
            )
        slot = self.shapes[(rel, pos)]
        if shape in slot:
            return False
        slot[shape] = None
        return True

    def at(self, rel: str, pos: int) -> list[Term]:
        return list(self.shapes[(rel, pos)])

    def _apply(self, clause: Clause, schema: Schema, cap: int) -> bool:
        options: dict[Var, dict[Term, None]] = {}
        for atom in clause.premise:
            assert isinstance(atom, RelAtom)
            for i, t in enumerate(atom.args):
                assert isinstance(t, Var)
                options.setdefault(t, {})
                for s in self.shapes[(atom.rel, i)]:
                    options[t].setdefault(s, None)
        vs = list(options)
        if any(not options[v] for v in vs):
            return False
        changed = False
        for combo in product(*(list(options[v]) for v in vs)):
            chosen = dict(zip(vs, combo))
            for atom in clause.conclusion:
                assert isinstance(atom, RelAtom)
                if atom.rel not in schema:
                    continue
                for i, t in enumerate(atom.args):
                    composed = skel(subst(t, chosen)) if is_var(t) else self._compose(t, chosen)
                    changed |= self._add(atom.rel, i, composed, cap)
        return changed

    def _compose(self, t: Term, chosen: dict[Var, Term]) -> Term:
        if is_var(t):
            return chosen[t]
        assert isinstance(t, App)
        return App(t.fn, tuple(self._compose(a, chosen) for a in t.args))


# ---------------------------------------------------------------------------
# clause instantiation

# Eliminating an intermediate relation replaces each of its atoms by an
# equality between the paired functions. Premise atoms are instantiated
# per occurrence: every occurrence of a variable may carry a different
# shape, fresh variables fill the holes, and occurrences of one variable
# are linked by equalities. Variable-to-variable links are unified away
# and variable-to-term links substituted, which reproduces the usual
# economical presentation; only term-to-term links survive as premise
# equalities. Conclusion occurrences reuse the premise occurrence terms
# in order.


class _Fresh:
    def __init__(self, stem: str = "u"):
        self.stem = stem
        self.count = 0

    def __call__(self) -> Var:
        self.count += 1
        return Var(f"{self.stem}{self.count}")


def _resolve(t: Term, sub: dict[Var, Term]) -> Term:
    while isinstance(t, Var) and t in sub:
        t = sub[t]
    if isinstance(t, App):
        return App(t.fn, tuple(_resolve(a, sub) for a in t.args))
    return t


def _instantiate(
    premise: tuple[RelAtom, ...],
    conclusion: tuple[Atom, ...],
    closure: SkeletonClosure,
    fresh: _Fresh,
) -> list[tuple[list[RelAtom], list[EqAtom], list[Atom]]]:
    """All per-occurrence shape instantiations of a clause whose premise
    ranges over the eliminated schema. Yields (premise atoms with term
    arguments, linking equalities, substituted conclusion atoms)."""
    occ_sites: list[tuple[int, int, Var]] = []
    for j, atom in enumerate(premise):
        for i, t in enumerate(atom.args):
            assert isinstance(t, Var)
            occ_sites.append((j, i, t))
    option_lists = [closure.at(premise[j].rel, i) for j, i, _ in occ_sites]
    if any(not opts for opts in option_lists):
        return []

    out = []
    for combo in product(*option_lists):
        terms: list[Term] = []
        for shape in combo:
            terms.append(fill(shape, [fresh() for _ in range(hole_count(shape))]))
        by_var: dict[Var, list[Term]] = {}
        for (j, i, v), t in zip(occ_sites, terms):
            by_var.setdefault(v, []).append(t)

        sub: dict[Var, Term] = {}
        eqs: list[EqAtom] = []
        for v, ts in by_var.items():
            for a, b in zip(ts, ts[1:]):
                ra, rb = _resolve(a, sub), _resolve(b, sub)
                if ra == rb:
                    continue
                if isinstance(ra, Var):
                    sub[ra] = rb
                elif isinstance(rb, Var):
                    sub[rb] = ra
                else:
                    eqs.append(EqAtom(ra, rb))

        site_terms = [_resolve(t, sub) for t in terms]
        by_var_final: dict[Var, list[Term]] = {}
        for (j, i, v), t in zip(occ_sites, site_terms):
            by_var_final.setdefault(v, []).append(t)
        new_premise = []
        k = 0
        for j, atom in enumerate(premise):
            args = tuple(site_terms[k : k + len(atom.args)])
            k += len(atom.args)
            new_premise.append(RelAtom(atom.rel, args))
        eqs = [EqAtom(_resolve(e.lhs, sub), _resolve(e.rhs, sub)) for e in eqs]
        eqs = [e for e in eqs if e.lhs != e.rhs]

        counters: dict[Var, int] = {}

        def replace(t: Term) -> Term:
            if isinstance(t, Var):
                ts = by_var_final[t]
                o = counters.get(t, 0)
                counters[t] = o + 1
                return ts[min(o, len(ts) - 1)]
            assert isinstance(t, App)
            return App(t.fn, tuple(replace(a) for a in t.args))

        new_conclusion: list[Atom] = []
        for atom in conclusion:
            if isinstance(atom, RelAtom):
                new_conclusion.append(RelAtom(atom.rel, tuple(replace(t) for t in atom.args)))
            else:
                new_conclusion.append(EqAtom(replace(atom.lhs), replace(atom.rhs)))
        out.append((new_premise, eqs, new_conclusion))
    return out


def _pair_eq(atom: RelAtom, pairs: dict[str, tuple[str, str]]) -> EqAtom:
    f, g = pairs[atom.rel]
    return EqAtom(App(f, atom.args), App(g, atom.args))


def _clause_variables(atoms: list[Atom]) -> list[Var]:
    seen: dict[Var, None] = {}
    for atom in atoms:
        ts = atom.args if isinstance(atom, RelAtom) else (atom.lhs, atom.rhs)
        for t in ts:
            for v in term_vars(t):
                seen.setdefault(v, None)
    return list(seen)


def _guarded(
    eqs: list[EqAtom],
    conclusion: list[Atom],
    dom: DomFormula,
    fresh: _Fresh,
) -> list[Clause]:
    """Guard every variable by the source-domain formula and expand the
    disjunction into one clause per combination."""
    vs = _clause_variables(list(eqs) + conclusion)
    out = []
    for combo in product(range(len(dom.disjuncts)), repeat=len(vs)):
        guards = [dom.guard(v, c, fresh) for v, c in zip(vs, combo)]
        out.append(Clause(tuple(guards) + tuple(eqs), tuple(conclusion)))
    return out


# ---------------------------------------------------------------------------
# pair composition


def compose_standard_pair(
    m12: Mapping, m23: Mapping, *, stats: dict | None = None
) -> Mapping:
    """Compose two standard mappings into one second-order mapping from
    the first source to the second target, carrying the second mapping's
    target constraints. Refuses non-weakly-acyclic intermediate tgds."""
    if m12.is_so or m23.is_so:
        raise ComposeError("pair composition expects first-order standard mappings")
    if m12.target != m23.source:
        raise ComposeError(
            f"intermediate schemas disagree: {m12.target!r} vs {m23.source!r}"
        )
    require_weakly_acyclic(m12.target_tgds)
    require_weakly_acyclic(m23.target_tgds)

    mid = m12.target
    reserved = set()
    pairs: dict[str, tuple[str, str]] = {}
    namer = FreshNamer(reserved)
    for rel in mid.names():
        pairs[rel] = (namer.fresh(f"f_{rel}"), namer.fresh(f"g_{rel}"))

    functions: dict[str, int] = {}
    for rel, (f, g) in pairs.items():
        functions[f] = mid.arity(rel)
        functions[g] = mid.arity(rel)

    sk12, fns12 = skolemize(m12.st_tgds, namer)
    mid_tgds = list(m12.target_tgds)
    mid_egds = list(m12.target_egds) + list(m23.source_egds)
    sk2, fns2 = skolemize(mid_tgds, namer)
    sk23, fns23 = skolemize(m23.st_tgds, namer)
    functions.update(fns12)
    functions.update(fns2)
    functions.update(fns23)

    closure = SkeletonClosure(sk12, sk2, mid)
    dom = DomFormula.of(m12.source)

    clauses: list[Clause] = []
    seen: set[str] = set()

    def emit(premise: tuple[Atom, ...], conclusion: tuple[Atom, ...]) -> None:
        key = canonical_clause_str(premise, conclusion)
        if key in seen:
            return
        seen.add(key)
        clauses.append(Clause(premise, conclusion))

    # Source-to-target rules keep their relational premises; their
    # conclusions become function-pair equalities.
    for clause in sk12:
        concl = tuple(
            _pair_eq(a, pairs) for a in clause.conclusion if isinstance(a, RelAtom)
        )
        emit(clause.premise, concl)

    fresh = _Fresh()

    def eliminate(premise: tuple[RelAtom, ...], conclusion: tuple[Atom, ...]) -> None:
        for prem_atoms, links, concl in _instantiate(premise, conclusion, closure, fresh):
            prem_eqs = [_pair_eq(a, pairs) for a in prem_atoms]
            final_concl: list[Atom] = []
            for atom in concl:
                if isinstance(atom, RelAtom) and atom.rel in pairs:
                    final_concl.append(_pair_eq(atom, pairs))
                else:
                    final_concl.append(atom)
            for guarded in _guarded(prem_eqs + links, final_concl, dom, fresh):
                emit(guarded.premise, guarded.conclusion)

    for clause in sk2:
        eliminate(clause.premise, clause.conclusion)  # type: ignore[arg-type]
    for egd in mid_egds:
        eliminate(egd.premise, (EqAtom(egd.lhs, egd.rhs),))
    for clause in sk23:
        eliminate(clause.premise, clause.conclusion)  # type: ignore[arg-type]

    dep = StSODependency(functions, clauses)
    if stats is not None:
        stats["clauses"] = len(clauses)
        stats["functions"] = len(functions)
        stats["shapes"] = {
            f"{rel}.{i}": len(closure.at(rel, i))
            for rel in mid.names()
            for i in range(mid.arity(rel))
        }
    return Mapping(
        source=m12.source,
        target=m23.target,
        stso=dep,
        source_egds=list(m12.source_egds),
        target_egds=list(m23.target_egds),
        target_tgds=list(m23.target_tgds),
    )


# ---------------------------------------------------------------------------
# chain collapse


def _identity_copy(schema: Schema) -> Mapping:
    tgds = []
    for rel in schema.names():
        args = tuple(Var(f"x{i + 1}") for i in range(schema.arity(rel)))
        tgds.append(FOTgd((RelAtom(rel, args),), (RelAtom(rel, args),)))
    return Mapping(source=schema, target=schema, st_tgds=tgds)


def collapse_chain(mappings: list[Mapping]) -> tuple[Mapping, Mapping]:
    """Collapse a chain of standard mappings to an equivalent pair.

    The head keeps the first mapping's source-to-target tgds; every
    middle mapping's source-to-target tgds turn into target tgds over
    the union of the intermediate schemas, and all intermediate
    constraints ride along. The tail is the final mapping, its source
    widened to the union. A single mapping pairs with an identity copy
    of its target."""
    if not mappings:
        raise ComposeError("empty chain")
    for m in mappings:
        if m.is_so:
            raise ComposeError("chain collapse expects first-order standard mappings")
    for a, b in zip(mappings, mappings[1:]):
        if a.target != b.source:
            raise ComposeError(f"chain schemas disagree: {a.target!r} vs {b.source!r}")
    if len(mappings) == 1:
        return mappings[0], _identity_copy(mappings[0].target)

    head_ms = mappings[:-1]
    tail = mappings[-1]
    union = head_ms[0].target
    for m in head_ms[1:]:
        if not union.disjoint_from(m.target):
            raise ComposeError(
                "intermediate schemas overlap; rename stages before collapsing"
            )
        union = union.union(m.target)

    target_tgds: list[FOTgd] = list(head_ms[0].target_tgds)
    target_egds: list[Egd] = list(head_ms[0].target_egds)
    for m in head_ms[1:]:
        target_tgds.extend(m.st_tgds)
        target_tgds.extend(m.target_tgds)
        target_egds.extend(m.source_egds)
        target_egds.extend(m.target_egds)
    target_egds.extend(tail.source_egds)
    require_weakly_acyclic(target_tgds)

    head = Mapping(
        source=head_ms[0].source,
        target=union,
        st_tgds=list(head_ms[0].st_tgds),
        source_egds=list(head_ms[0].source_egds),
        target_egds=target_egds,
        target_tgds=target_tgds,
    )
    widened_tail = Mapping(
        source=union,
        target=tail.target,
        st_tgds=list(tail.st_tgds),
        target_egds=list(tail.target_egds),
        target_tgds=list(tail.target_tgds),
    )
    return head, widened_tail


def rename_apart(mappings: list[Mapping]) -> list[Mapping]:
    """Stage-prefix renaming of intermediate schemas so a chain whose
    stages reuse relation names can still collapse."""
    if len(mappings) < 2:
        return list(mappings)
    out = []
    rename_in: dict[str, str] = {}
    for i, m in enumerate(mappings):
        last = i == len(mappings) - 1
        rename_out = (
            {}
            if last
            else {rel: f"s{i + 1}_{rel}" for rel in m.target.names()}
        )
        def rn_atom(atom: RelAtom, table: dict[str, str]) -> RelAtom:
            return RelAtom(table.get(atom.rel, atom.rel), atom.args)
        st = [
            FOTgd(
                tuple(rn_atom(a, rename_in) for a in t.premise),
                tuple(rn_atom(a, rename_out) for a in t.conclusion),
            )
            for t in m.st_tgds
        ]
        tegds = [
            Egd(tuple(rn_atom(a, rename_out) for a in e.premise), e.lhs, e.rhs)
            for e in m.target_egds
        ]
        ttgds = [
            FOTgd(
                tuple(rn_atom(a, rename_out) for a in t.premise),
                tuple(rn_atom(a, rename_out) for a in t.conclusion),
            )
            for t in m.target_tgds
        ]
        segds = [
            Egd(tuple(rn_atom(a, rename_in) for a in e.premise), e.lhs, e.rhs)
            for e in m.source_egds
        ]
        out.append(
            Mapping(
                source=m.source.renamed(lambda n: rename_in.get(n, n)),
                target=m.target.renamed(lambda n: rename_out.get(n, n)),
                st_tgds=st,
                source_egds=segds,
                target_egds=tegds,
                target_tgds=ttgds,
            )
        )
        rename_in = rename_out
    return out


def compose_chain(mappings: list[Mapping], *, stats: dict | None = None) -> Mapping:
    """Compose two or more standard mappings via chain collapse."""
    if len(mappings) < 2:
        raise ComposeError("composition needs at least two mappings")
    intermediates = [m.target for m in mappings[:-1]]
    disjoint = all(
        a.disjoint_from(b)
        for i, a in enumerate(intermediates)
        for b in intermediates[i + 1 :]
    )
    chain = mappings if disjoint else rename_apart(mappings)
    head, tail = collapse_chain(chain)
    return compose_standard_pair(head, tail, stats=stats)


# ---------------------------------------------------------------------------
# decomposition


def _stage_names(
    source: Schema,
    functions: dict[str, int],
    stages: int,
    taken: set[str],
) -> tuple[dict[tuple[str, int], str], dict[tuple[str, int], str]]:
    """Names for per-stage copy and graph relations. A single source
    relation copies to R1, R2, ...; several keep their own names with a
    stage suffix. Function graphs capitalize the symbol plus the stage."""
    copies: dict[tuple[str, int], str] = {}
    graphs: dict[tuple[str, int], str] = {}

    def claim(name: str) -> str:
        while name in taken:
            name = name + "_"
        taken.add(name)
        return name

    single = len(source.names()) == 1
    for i in range(1, stages + 1):
        for rel in source.names():
            base = f"R{i}" if single else f"{rel}_{i}"
            copies[(rel, i)] = claim(base)
        for fn in sorted(functions):
            graphs[(fn, i)] = claim(f"{fn[0].upper()}{fn[1:]}{i}")
    return copies, graphs


class _VarNamer:
    def __init__(self, avoid: set[str]):
        self.avoid = set(avoid)
        self.count = 0

    def fresh(self) -> Var:
        while True:
            self.count += 1
            name = f"v{self.count}"
            if name not in self.avoid:
                return Var(name)


def _term_chain(
    t: Term,
    graph_of,
    namer: _VarNamer,
    final: Var | None = None,
) -> tuple[Var, list[RelAtom]]:
    """Atoms evaluating a term through graph relations; returns the
    variable holding the term's value. ``final`` pins that variable."""
    if is_var(t):
        return t, []
    assert isinstance(t, App)
    atoms: list[RelAtom] = []
    arg_vars: list[Var] = []
    for a in t.args:
        v, more = _term_chain(a, graph_of, namer)
        atoms.extend(more)
        arg_vars.append(v)
    out = final if final is not None else namer.fresh()
    atoms.append(RelAtom(graph_of(t.fn), tuple(arg_vars) + (out,)))
    return out, atoms


def _functionality_egds(
    functions: dict[str, int], stage: int, graphs: dict[tuple[str, int], str]
) -> list[Egd]:
    out = []
    for fn in sorted(functions):
        k = functions[fn]
        xs = tuple(Var(f"x{j + 1}") for j in range(k))
        y, z = Var("y"), Var("z")
        rel = graphs[(fn, stage)]
        out.append(Egd((RelAtom(rel, xs + (y,)), RelAtom(rel, xs + (z,))), y, z))
    return out


def _depth_subterms(dep: StSODependency, d: int) -> list[Term]:
    return [t for t in dep.all_terms() if isinstance(t, App) and depth(t) == d]


def decompose_stso(m: Mapping) -> list[Mapping]:
    """Split a second-order mapping into a chain of standard mappings.

    Nesting depth d yields d+1 mappings: stage i materializes every
    function's graph on the values reachable with i applications
    (copies carry everything forward), functionality egds keep graphs
    functional, equality conclusions become target egds at the last
    intermediate stage, and the final mapping evaluates the relational
    conclusions through the graphs. An unnested dependency therefore
    splits into exactly two mappings. Target constraints of the input
    ride on the final mapping."""
    if m.stso is None:
        raise ComposeError("decomposition expects a second-order mapping")
    dep = m.stso.split_conclusions()
    used: set[str] = set()
    for t in dep.all_terms():
        if isinstance(t, App):
            used.add(t.fn)
    functions = {fn: ar for fn, ar in dep.functions.items() if fn in used and ar >= 0}
    d = max(dep.nesting_depth(), 1)
    taken = set(m.source.names()) | set(m.target.names())
    copies, graphs = _stage_names(m.source, functions, d, taken)

    def stage_schema(i: int) -> Schema:
        arities = {copies[(rel, i)]: m.source.arity(rel) for rel in m.source.names()}
        for fn, k in functions.items():
            arities[graphs[(fn, i)]] = k + 1
        return Schema(arities)

    dom = DomFormula.of(m.source)
    out: list[Mapping] = []

    # Stage 1: copy the source and define every graph on the domain.
    st1: list[FOTgd] = []
    for rel in m.source.names():
        xs = tuple(Var(f"x{j + 1}") for j in range(m.source.arity(rel)))
        st1.append(FOTgd((RelAtom(rel, xs),), (RelAtom(copies[(rel, 1)], xs),)))
    for fn in sorted(functions):
        k = functions[fn]
        xs = [Var(f"x{j + 1}") for j in range(k)]
        y = Var("y")
        if k == 0:
            fallback = m.source.names()[0]
            ar = m.source.arity(fallback)
            guard = RelAtom(fallback, tuple(Var(f"w{j + 1}") for j in range(ar)))
            st1.append(FOTgd((guard,), (RelAtom(graphs[(fn, 1)], (y,)),)))
            continue
        for combo in product(range(len(dom.disjuncts)), repeat=k):
            counter = [0]

            def fresh() -> Var:
                counter[0] += 1
                return Var(f"w{counter[0]}")

            guards = tuple(dom.guard(x, c, fresh) for x, c in zip(xs, combo))
            st1.append(FOTgd(guards, (RelAtom(graphs[(fn, 1)], tuple(xs) + (y,)),)))
    tegd1 = _functionality_egds(functions, 1, graphs)
    stages: list[tuple[list[FOTgd], list[Egd]]] = [(st1, tegd1)]

    # Stages 2..d: copy forward, extend graphs one nesting level.
    for i in range(2, d + 1):
        st: list[FOTgd] = []
        for rel in m.source.names():
            ar = m.source.arity(rel)
            xs = tuple(Var(f"x{j + 1}") for j in range(ar))
            st.append(
                FOTgd((RelAtom(copies[(rel, i - 1)], xs),), (RelAtom(copies[(rel, i)], xs),))
            )
        for fn in sorted(functions):
            k = functions[fn]
            xs = tuple(Var(f"x{j + 1}") for j in range(k + 1))
            st.append(
                FOTgd((RelAtom(graphs[(fn, i - 1)], xs),), (RelAtom(graphs[(fn, i)], xs),))
            )
        seen_ext: set[str] = set()
        for t in _depth_subterms(dep, i):
            assert isinstance(t, App)
            namer = _VarNamer({v.name for v in term_vars(t)})
            atoms: list[RelAtom] = []
            arg_vars: list[Var] = []
            for a in t.args:
                v, more = _term_chain(a, lambda fn_: graphs[(fn_, i - 1)], namer)
                atoms.extend(more)
                arg_vars.append(v)
            uncovered = [
                v
                for v in dict.fromkeys(x for x in arg_vars if isinstance(x, Var))
                if not any(v in atom.args for atom in atoms)
            ]
            z = namer.fresh()
            conclusion = (RelAtom(graphs[(t.fn, i)], tuple(arg_vars) + (z,)),)
            if uncovered:
                for combo in product(range(len(dom.disjuncts)), repeat=len(uncovered)):
                    copy_guards = []
                    for v, c in zip(uncovered, combo):
                        rel, pos, arity = dom.disjuncts[c]
                        args = tuple(
                            v if idx == pos else namer.fresh() for idx in range(arity)
                        )
                        copy_guards.append(RelAtom(copies[(rel, i - 1)], args))
                    tgd = FOTgd(tuple(copy_guards) + tuple(atoms), conclusion)
                    key = canonical_clause_str(tgd.premise, tgd.conclusion)
                    if key not in seen_ext:
                        seen_ext.add(key)
                        st.append(tgd)
            else:
                tgd = FOTgd(tuple(atoms), conclusion)
                key = canonical_clause_str(tgd.premise, tgd.conclusion)
                if key not in seen_ext:
                    seen_ext.add(key)
                    st.append(tgd)
        stages.append((st, _functionality_egds(functions, i, graphs)))

    # Equality conclusions become target egds at the last stage.
    final_egds: list[Egd] = []
    for clause in dep.clauses:
        concl = clause.conclusion[0]
        if not isinstance(concl, EqAtom):
            continue
        clause_vars = {v.name for v in clause.variables()}
        namer = _VarNamer(clause_vars)
        premise: list[RelAtom] = []
        for atom in clause.premise_rels():
            premise.append(
                RelAtom(copies[(atom.rel, d)], atom.args)
            )
        sub: dict[Var, Var] = {}
        for eq in clause.premise_eqs():
            if is_var(eq.lhs) and is_var(eq.rhs):
                sub[eq.rhs] = eq.lhs  # type: ignore[index]
                continue
            if is_var(eq.lhs):
                v, atoms = _term_chain(eq.rhs, lambda fn_: graphs[(fn_, d)], namer, final=eq.lhs)  # type: ignore[arg-type]
                premise.extend(atoms)
                continue
            if is_var(eq.rhs):
                v, atoms = _term_chain(eq.lhs, lambda fn_: graphs[(fn_, d)], namer, final=eq.rhs)  # type: ignore[arg-type]
                premise.extend(atoms)
                continue
            shared = namer.fresh()
            _, atoms = _term_chain(eq.lhs, lambda fn_: graphs[(fn_, d)], namer, final=shared)
            premise.extend(atoms)
            _, atoms = _term_chain(eq.rhs, lambda fn_: graphs[(fn_, d)], namer, final=shared)
            premise.extend(atoms)
        lv, latoms = _term_chain(concl.lhs, lambda fn_: graphs[(fn_, d)], namer)
        premise.extend(latoms)
        rv, ratoms = _term_chain(concl.rhs, lambda fn_: graphs[(fn_, d)], namer)
        premise.extend(ratoms)
        if sub:
            premise = [
                RelAtom(a.rel, tuple(sub.get(t, t) if isinstance(t, Var) else t for t in a.args))
                for a in premise
            ]
            lv = sub.get(lv, lv)
            rv = sub.get(rv, rv)
        final_egds.append(Egd(tuple(premise), lv, rv))
    stages[-1][1].extend(final_egds)

    # Final mapping: evaluate relational conclusions through the graphs.
    final_st: list[FOTgd] = []
    for clause in dep.clauses:
        concl = clause.conclusion[0]
        if not isinstance(concl, RelAtom):
            continue
        clause_vars = {v.name for v in clause.variables()}
        namer = _VarNamer(clause_vars)
        premise = [RelAtom(copies[(a.rel, d)], a.args) for a in clause.premise_rels()]
        sub = {}
        for eq in clause.premise_eqs():
            if is_var(eq.lhs) and is_var(eq.rhs):
                sub[eq.rhs] = eq.lhs  # type: ignore[index]
                continue
            if is_var(eq.lhs):
                _, atoms = _term_chain(eq.rhs, lambda fn_: graphs[(fn_, d)], namer, final=eq.lhs)  # type: ignore[arg-type]
                premise.extend(atoms)
                continue
            if is_var(eq.rhs):
                _, atoms = _term_chain(eq.lhs, lambda fn_: graphs[(fn_, d)], namer, final=eq.rhs)  # type: ignore[arg-type]
                premise.extend(atoms)
                continue
            shared = namer.fresh()
            _, atoms = _term_chain(eq.lhs, lambda fn_: graphs[(fn_, d)], namer, final=shared)
            premise.extend(atoms)
            _, atoms = _term_chain(eq.rhs, lambda fn_: graphs[(fn_, d)], namer, final=shared)
            premise.extend(atoms)
        arg_vars = []
        for t in concl.args:
            v, atoms = _term_chain(t, lambda fn_: graphs[(fn_, d)], namer)
            premise.extend(atoms)
            arg_vars.append(v)
        if sub:
            premise = [
                RelAtom(a.rel, tuple(sub.get(t, t) if isinstance(t, Var) else t for t in a.args))
                for a in premise
            ]
            arg_vars = [sub.get(v, v) if isinstance(v, Var) else v for v in arg_vars]
        final_st.append(FOTgd(tuple(premise), (RelAtom(concl.rel, tuple(arg_vars)),)))

    out.append(
        Mapping(
            source=m.source,
            target=stage_schema(1),
            st_tgds=stages[0][0],
            source_egds=list(m.source_egds),
            target_egds=stages[0][1],
        )
    )
    for i in range(2, d + 1):
        out.append(
            Mapping(
                source=stage_schema(i - 1),
                target=stage_schema(i),
                st_tgds=stages[i - 1][0],
                target_egds=stages[i - 1][1],
            )
        )
    out.append(
        Mapping(
            source=stage_schema(d),
            target=m.target,
            st_tgds=final_st,
            target_egds=list(m.target_egds),
            target_tgds=list(m.target_tgds),
        )
    )
    return out
