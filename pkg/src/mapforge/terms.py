"""Function terms: variables and applications of declared function symbols.

Skeletons are terms whose variable positions are holes; two terms share a
skeleton exactly when one is a variable renaming of the other. Most of the
rewriting machinery (composition closure, denesting) works on skeletons
plus the ordered variable list of a term.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class App:
    fn: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        return f"{self.fn}({', '.join(str(a) for a in self.args)})"


Term = Var | App

# Hole marker for skeletons. "_" is not a legal variable name in the
# surface syntax, so skeletons cannot collide with real terms.
HOLE = Var("_")


def is_var(t: Term) -> bool:
    return isinstance(t, Var)


def non_atomic(t: Term) -> bool:
    return isinstance(t, App)


def depth(t: Term) -> int:
    if isinstance(t, Var):
        return 0
    return 1 + max((depth(a) for a in t.args), default=0)


def term_vars(t: Term) -> list[Var]:
    """Variables in left-to-right order, duplicates kept."""
    if isinstance(t, Var):
        return [t]
    out: list[Var] = []
    for a in t.args:
        out.extend(term_vars(a))
    return out


def term_var_set(t: Term) -> set[Var]:
    return set(term_vars(t))


def skel(t: Term) -> Term:
    if isinstance(t, Var):
        return HOLE
    return App(t.fn, tuple(skel(a) for a in t.args))


def hole_count(skeleton: Term) -> int:
    if isinstance(skeleton, Var):
        return 1
    return sum(hole_count(a) for a in skeleton.args)


def fill(skeleton: Term, args: list[Term]) -> Term:
    """Plug terms into a skeleton's holes, left to right."""
    it = iter(args)

    def go(s: Term) -> Term:
        if isinstance(s, Var):
            return next(it)
        return App(s.fn, tuple(go(a) for a in s.args))

    out = go(skeleton)
    leftover = list(it)
    if leftover:
        raise ValueError(f"{len(leftover)} extra arguments for skeleton {skeleton}")
    return out


def subst(t: Term, mapping: dict[Var, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t, t)
    return App(t.fn, tuple(subst(a, mapping) for a in t.args))


def subterms(t: Term) -> list[Term]:
    """All subterms, innermost first, each one once."""
    seen: dict[Term, None] = {}

    def go(t: Term) -> None:
        if isinstance(t, App):
            for a in t.args:
                go(a)
        if t not in seen:
            seen[t] = None

    go(t)
    return list(seen)


def function_symbols(t: Term) -> set[str]:
    if isinstance(t, Var):
        return set()
    out = {t.fn}
    for a in t.args:
        out |= function_symbols(a)
    return out
