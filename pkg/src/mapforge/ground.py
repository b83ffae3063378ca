"""Ground terms: function terms instantiated with values.

The chase and the satisfaction oracle both work over the instantiated
subterm universe of a second-order dependency: every subterm of the
dependency's terms, with its variables replaced by active-domain values
in all possible ways. A ground term is a value or a function symbol
applied to ground terms.
"""

from __future__ import annotations

from itertools import product

from .deps import StSODependency
from .terms import Term, Var, term_vars
from .values import Value, value_key

# A ground term is a Value leaf or (symbol, children).
GTerm = Value | tuple


def ground_term(t: Term, binding: dict[Var, Value]) -> GTerm:
    if isinstance(t, Var):
        return binding[t]
    return (t.fn, tuple(ground_term(a, binding) for a in t.args))


def gterm_depth(g: GTerm) -> int:
    if not isinstance(g, tuple):
        return 0
    return 1 + max((gterm_depth(c) for c in g[1]), default=0)


def gterm_str(g: GTerm) -> str:
    if not isinstance(g, tuple):
        return str(g)
    return f"{g[0]}({', '.join(gterm_str(c) for c in g[1])})"


def gterm_key(g: GTerm) -> tuple:
    if not isinstance(g, tuple):
        return (0, value_key(g), ())
    return (1, (g[0],), tuple(gterm_key(c) for c in g[1]))


def subterm_shapes(dep: StSODependency) -> list[Term]:
    """Unique subterms (with variables) of every term of the dependency,
    innermost first."""
    return dep.all_terms()


def term_universe(dep: StSODependency, domain: list[Value]) -> list[GTerm]:
    """Every subterm shape instantiated over the domain in all ways,
    shallowest first; includes the domain values themselves."""
    out: dict[GTerm, None] = {}
    for v in domain:
        out[v] = None
    shaped: list[GTerm] = []
    for shape in subterm_shapes(dep):
        if isinstance(shape, Var):
            continue
        seen: dict[Var, None] = {}
        for v in term_vars(shape):
            seen.setdefault(v, None)
        vs = list(seen)
        for combo in product(domain, repeat=len(vs)):
            shaped.append(ground_term(shape, dict(zip(vs, combo))))
    shaped.sort(key=lambda g: (gterm_depth(g), gterm_key(g)))
    for g in shaped:
        out.setdefault(g, None)
    return list(out)
