"""Denesting: trading nested function terms for fresh symbols.

A dependency of any nesting depth is equivalent to one of depth at most
one. The general transformation introduces one fresh symbol per term
skeleton, rewrites every atom with its outermost term replaced by the
skeleton symbol applied to the term's variables, and adds congruence
clauses tying the skeleton symbols together: whenever the arguments of
two same-headed terms evaluate equal, so do the terms.

For SO tgds of depth two there is a sharper transformation that emits
no congruence clauses: each depth-one term buried inside a depth-two
term is guessed to evaluate like some shape over fresh domain-guarded
variables, and each guess is discharged by an equality premise.

Both share the source-domain formula of the composition module.
"""

from __future__ import annotations

from itertools import product

from .compose import DomFormula
from .deps import (
    Clause,
    EqAtom,
    Mapping,
    RelAtom,
    StSODependency,
    infer_schemas,
)
from .terms import App, Term, Var, depth, hole_count, is_var, skel, term_vars


class DepthExceeded(Exception):
    def __init__(self, got: int) -> None:
        super().__init__(f"nesting depth {got} exceeds 2")
        self.got = got


def _flat(t: Term) -> str:
    if is_var(t):
        return "o"
    assert isinstance(t, App)
    return f"{t.fn}{len(t.args)}" + "".join(_flat(a) for a in t.args)


class XiSymbolTable:
    """One fresh function symbol per term skeleton; the symbol's arity
    is the skeleton's hole count. Names spell the skeleton out
    (hole -> o, f(_) -> f1o) and are collision-checked."""

    def __init__(self, reserved: set[str] = frozenset()):
        self.reserved = set(reserved)
        self.by_skel: dict[Term, str] = {}
        self.arities: dict[str, int] = {}

    def symbol(self, skeleton: Term) -> str:
        name = self.by_skel.get(skeleton)
        if name is not None:
            return name
        name = "xi__" + _flat(skeleton)
        while name in self.reserved or name in self.arities:
            name = name + "_"
        self.by_skel[skeleton] = name
        self.arities[name] = hole_count(skeleton)
        return name

    def xi(self, t: Term) -> Term:
        """The unnested stand-in: variables unchanged, a non-atomic term
        becomes its skeleton symbol applied to the term's variables."""
        if is_var(t):
            return t
        assert isinstance(t, App)
        return App(self.symbol(skel(t)), tuple(term_vars(t)))

    def functions(self) -> dict[str, int]:
        return dict(self.arities)


class _Counter:
    def __init__(self, prefix: str = "u"):
        self.prefix = prefix
        self.n = 0

    def __call__(self) -> Var:
        self.n += 1
        return Var(f"{self.prefix}{self.n}")


def _rewrite_atom(atom, xi: XiSymbolTable):
    if isinstance(atom, RelAtom):
        return RelAtom(atom.rel, tuple(xi.xi(t) for t in atom.args))
    return EqAtom(xi.xi(atom.lhs), xi.xi(atom.rhs))


def _refresh(t: Term, fresh: _Counter) -> Term:
    """Every variable occurrence replaced by a distinct fresh variable,
    so f(x, x) refreshes to f(u1, u2)."""
    if is_var(t):
        return fresh()
    assert isinstance(t, App)
    return App(t.fn, tuple(_refresh(a, fresh) for a in t.args))


def _guard_products(
    variables: list[Var], dom: DomFormula, fresh
) -> list[tuple[RelAtom, ...]]:
    """One guard atom per variable, expanded over every combination of
    domain disjuncts."""
    out = []
    for combo in product(range(len(dom.disjuncts)), repeat=len(variables)):
        out.append(tuple(dom.guard(v, c, fresh) for v, c in zip(variables, combo)))
    return out


def denest_stso(
    dep: StSODependency, *, stats: dict | None = None
) -> StSODependency:
    """An equivalent dependency of nesting depth at most one.

    Every conjunct is rewritten with its outermost non-atomic terms
    replaced by skeleton symbols, and for each unordered pair of
    same-headed subterms a set of congruence clauses is added: refresh
    the variable occurrences of both terms, guard the fresh variables by
    the source-domain formula, and conclude equality of the heads from
    argumentwise equality."""
    source, _ = infer_schemas(dep)
    dom = DomFormula.of(source)
    xi = XiSymbolTable(reserved=set(dep.functions))
    clauses: list[Clause] = []
    for clause in dep.clauses:
        clauses.append(
            Clause(
                premise=tuple(_rewrite_atom(a, xi) for a in clause.premise),
                conclusion=tuple(_rewrite_atom(a, xi) for a in clause.conclusion),
            )
        )
    rewritten = len(clauses)

    subterms = [t for t in dep.all_terms() if isinstance(t, App)]
    by_head: dict[str, list[App]] = {}
    for t in subterms:
        by_head.setdefault(t.fn, []).append(t)
    pairs = 0
    for head in by_head:
        group = by_head[head]
        for i in range(len(group)):
            for j in range(i, len(group)):
                pairs += 1
                fresh = _Counter()
                s = _refresh(group[i], fresh)
                s2 = _refresh(group[j], fresh)
                assert isinstance(s, App) and isinstance(s2, App)
                arg_eqs = tuple(
                    EqAtom(xi.xi(a), xi.xi(b)) for a, b in zip(s.args, s2.args)
                )
                conclusion = (EqAtom(xi.xi(s), xi.xi(s2)),)
                guarded_vars = term_vars(s) + term_vars(s2)
                aux = _Counter("w")
                for guards in _guard_products(guarded_vars, dom, aux):
                    clauses.append(Clause(premise=guards + arg_eqs, conclusion=conclusion))
    if stats is not None:
        stats["clauses"] = len(clauses)
        stats["rewritten_clauses"] = rewritten
        stats["congruence_pairs"] = pairs
        stats["symbols"] = len(xi.arities)
    return StSODependency(functions=xi.functions(), clauses=tuple(clauses))


# ---------------------------------------------------------------------------
# depth-2 SO tgds, congruence-free


def _inner_ones(clause: Clause) -> list[App]:
    """Depth-one terms buried inside depth-two terms, in order of first
    appearance."""
    out: dict[App, None] = {}
    for t in clause.all_terms():
        if isinstance(t, App) and depth(t) == 2:
            for a in t.args:
                if isinstance(a, App):
                    out.setdefault(a, None)
    return list(out)


def _substitute_inner(t: Term, chosen: dict[App, Term]) -> Term:
    """Replace the buried terms by their guessed shapes. Only arguments
    of depth-two terms are replaced; a standalone depth-one term keeps
    its own symbol."""
    if is_var(t) or depth(t) < 2:
        return t
    assert isinstance(t, App)
    return App(
        t.fn,
        tuple(chosen.get(a, a) if isinstance(a, App) else a for a in t.args),
    )


def denest_sotgd_depth2(
    dep: StSODependency, *, stats: dict | None = None
) -> StSODependency:
    """An unnested SO tgd equivalent to one of nesting depth two.

    Each buried depth-one term is guessed to evaluate either to a
    domain value or like one of the dependency's function symbols
    applied to domain values; every combination of guesses yields one
    clause whose equality premises discharge the guesses. Depth zero
    and one pass through with skeleton symbols only."""
    if dep.has_egd_parts():
        raise ValueError("expects an SO tgd: equality conclusions not allowed")
    d = dep.nesting_depth()
    if d > 2:
        raise DepthExceeded(d)
    source, _ = infer_schemas(dep)
    dom = DomFormula.of(source)
    xi = XiSymbolTable(reserved=set(dep.functions))
    fn_order = list(dep.functions)
    clauses: list[Clause] = []
    selections_total = 0
    for clause in dep.clauses:
        ones = _inner_ones(clause)
        fresh = _Counter()
        # Candidate shapes per buried term, instantiated against a
        # single counter so every option owns distinct variables.
        options: list[list[Term]] = []
        for _ in ones:
            opts: list[Term] = [fresh()]
            for fn in fn_order:
                opts.append(App(fn, tuple(fresh() for _ in range(dep.functions[fn]))))
            options.append(opts)
        for pick in product(*options):
            selections_total += 1
            chosen = dict(zip(ones, pick))
            sel_eqs = tuple(
                EqAtom(xi.xi(t), xi.xi(s)) for t, s in zip(ones, pick)
            )
            prem_rels = tuple(clause.premise_rels())
            prem_eqs = tuple(
                EqAtom(
                    xi.xi(_substitute_inner(e.lhs, chosen)),
                    xi.xi(_substitute_inner(e.rhs, chosen)),
                )
                for e in clause.premise_eqs()
            )
            conclusion = tuple(
                RelAtom(
                    a.rel,
                    tuple(xi.xi(_substitute_inner(t, chosen)) for t in a.args),
                )
                for a in clause.conclusion
                if isinstance(a, RelAtom)
            )
            guarded = [v for s in pick for v in term_vars(s)]
            aux = _Counter("w")
            for guards in _guard_products(guarded, dom, aux):
                clauses.append(
                    Clause(
                        premise=prem_rels + guards + sel_eqs + prem_eqs,
                        conclusion=conclusion,
                    )
                )
    if stats is not None:
        stats["clauses"] = len(clauses)
        stats["selections"] = selections_total
        stats["symbols"] = len(xi.arities)
    return StSODependency(functions=xi.functions(), clauses=tuple(clauses))


def denest_pipeline(
    dep: StSODependency, *, stats: dict | None = None
) -> tuple[StSODependency, list[Mapping]]:
    """Denest, then split the unnested result into its two-mapping
    chain."""
    from .compose import decompose_stso

    star = denest_stso(dep, stats=stats)
    source, target = infer_schemas(star)
    chain = decompose_stso(Mapping(source=source, target=target, stso=star))
    if stats is not None:
        stats["chain_length"] = len(chain)
    return star, chain
