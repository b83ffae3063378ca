"""Seeded generators for random instances, dependencies, and mappings.

Every generator draws from a caller-supplied random.Random, so a seed
pins the whole stream. Sizes are kept at desk scale on purpose: the
consumers are brute-force sweeps and round-trip tests.
"""

from __future__ import annotations

import random

from .deps import (
    Clause,
    Egd,
    EqAtom,
    FOTgd,
    Mapping,
    RelAtom,
    StSODependency,
    infer_schemas,
    weakly_acyclic,
)
from .terms import App, Term, Var
from .values import Constant, Fact, Instance, Null, Schema


def random_instance(
    schema: Schema,
    rng: random.Random,
    *,
    max_values: int = 3,
    max_facts: int = 4,
    nulls: int = 0,
) -> Instance:
    """A small instance over the schema: constants 1..k plus an
    optional stock of nulls."""
    values: list = [Constant(str(i + 1)) for i in range(rng.randint(1, max_values))]
    if nulls:
        values.extend(Null(i + 1) for i in range(rng.randint(0, nulls)))
    inst = Instance()
    names = schema.names()
    if not names:
        return inst
    for _ in range(rng.randint(0, max_facts)):
        rel = rng.choice(names)
        args = tuple(rng.choice(values) for _ in range(schema.arity(rel)))
        inst.add(Fact(rel, args))
    return inst


def _random_term(
    rng: random.Random,
    variables: list[Var],
    functions: dict[str, int],
    max_depth: int,
) -> Term:
    if max_depth == 0 or not functions or rng.random() < 0.45:
        return rng.choice(variables)
    fn = rng.choice(sorted(functions))
    return App(
        fn,
        tuple(
            _random_term(rng, variables, functions, max_depth - 1)
            for _ in range(functions[fn])
        ),
    )


def random_stso(
    rng: random.Random,
    *,
    max_clauses: int = 4,
    max_arity: int = 2,
    max_depth: int = 3,
) -> StSODependency:
    """A small second-order dependency: a couple of source and target
    relations, one or two function symbols, clauses mixing relational
    and equality conclusions."""
    src = {}
    for name in ["A", "B"][: rng.randint(1, 2)]:
        src[name] = rng.randint(1, max_arity)
    tgt = {}
    for name in ["T", "U"][: rng.randint(1, 2)]:
        tgt[name] = rng.randint(1, max_arity)
    functions: dict[str, int] = {}
    for name in ["f", "g"][: rng.randint(1, 2)]:
        functions[name] = rng.choice([1, 1, max_arity])
    src_names = sorted(src)
    tgt_names = sorted(tgt)

    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        pool = [Var("x"), Var("y"), Var("z")]
        premise: list = []
        for _ in range(rng.randint(1, 2)):
            rel = rng.choice(src_names)
            premise.append(
                RelAtom(rel, tuple(rng.choice(pool[: src[rel] + 1]) for _ in range(src[rel])))
            )
        used = sorted({v for a in premise for v in a.args}, key=lambda v: v.name)
        if rng.random() < 0.35:
            premise.append(
                EqAtom(
                    _random_term(rng, used, functions, max_depth),
                    _random_term(rng, used, functions, max_depth),
                )
            )
        if rng.random() < 0.25:
            conclusion: tuple = (
                EqAtom(
                    _random_term(rng, used, functions, max_depth),
                    _random_term(rng, used, functions, max_depth),
                ),
            )
        else:
            atoms = []
            for _ in range(rng.randint(1, 2)):
                rel = rng.choice(tgt_names)
                args = []
                for _ in range(tgt[rel]):
                    if rng.random() < 0.7:
                        args.append(_random_term(rng, used, functions, max_depth))
                    else:
                        args.append(rng.choice(used))
                atoms.append(RelAtom(rel, tuple(args)))
            conclusion = tuple(atoms)
        clauses.append(Clause(premise=tuple(premise), conclusion=conclusion))
    return StSODependency(functions=functions, clauses=tuple(clauses))


def _random_st_tgds(
    rng: random.Random, source: Schema, target: Schema, count: int
) -> list[FOTgd]:
    out = []
    for _ in range(count):
        rel = rng.choice(source.names())
        xs = [Var(f"x{i + 1}") for i in range(source.arity(rel))]
        premise: list = [RelAtom(rel, tuple(xs))]
        if rng.random() < 0.3 and len(source.names()) > 1:
            rel2 = rng.choice(source.names())
            premise.append(
                RelAtom(rel2, tuple(rng.choice(xs) for _ in range(source.arity(rel2))))
            )
        pool = xs + ([Var("y")] if rng.random() < 0.5 else [])
        atoms = []
        for _ in range(rng.randint(1, 2)):
            trel = rng.choice(target.names())
            atoms.append(
                RelAtom(trel, tuple(rng.choice(pool) for _ in range(target.arity(trel))))
            )
        out.append(FOTgd(tuple(premise), tuple(atoms)))
    return out


def _random_key_egd(rng: random.Random, schema: Schema) -> Egd | None:
    wide = [r for r in schema.names() if schema.arity(r) >= 2]
    if not wide:
        return None
    rel = rng.choice(wide)
    k = schema.arity(rel)
    key_pos = rng.randrange(k)
    val_pos = rng.choice([i for i in range(k) if i != key_pos])
    a1 = []
    a2 = []
    for i in range(k):
        if i == key_pos:
            a1.append(Var("x"))
            a2.append(Var("x"))
        elif i == val_pos:
            a1.append(Var("y"))
            a2.append(Var("z"))
        else:
            a1.append(Var(f"u{i}"))
            a2.append(Var(f"v{i}"))
    return Egd((RelAtom(rel, tuple(a1)), RelAtom(rel, tuple(a2))), Var("y"), Var("z"))


def _random_target_tgds(rng: random.Random, schema: Schema) -> list[FOTgd]:
    """Zero or one extra tgd over the schema, kept only when the result
    stays weakly acyclic."""
    if rng.random() < 0.6 or len(schema.names()) < 2:
        return []
    a, b = rng.sample(schema.names(), 2)
    xs = [Var(f"x{i + 1}") for i in range(schema.arity(a))]
    evar = Var("y")
    args = []
    used_evar = False
    for i in range(schema.arity(b)):
        if not used_evar and rng.random() < 0.4:
            args.append(evar)
            used_evar = True
        else:
            args.append(rng.choice(xs))
    tgd = FOTgd((RelAtom(a, tuple(xs)),), (RelAtom(b, tuple(args)),))
    return [tgd] if weakly_acyclic([tgd]) else []


def random_standard_mapping(
    rng: random.Random, source: Schema, target: Schema
) -> Mapping:
    return Mapping(
        source=source,
        target=target,
        st_tgds=_random_st_tgds(rng, source, target, rng.randint(1, 3)),
        target_egds=[e for e in [_random_key_egd(rng, target)] if e and rng.random() < 0.6],
        target_tgds=_random_target_tgds(rng, target),
    )


def random_standard_pair(rng: random.Random) -> tuple[Mapping, Mapping]:
    """Two standard mappings with chained schemas."""
    s1 = Schema({name: rng.randint(1, 2) for name in ["A", "B"][: rng.randint(1, 2)]})
    s2 = Schema({name: rng.randint(1, 2) for name in ["C", "D"][: rng.randint(1, 2)]})
    s3 = Schema({name: rng.randint(1, 2) for name in ["E", "F"][: rng.randint(1, 2)]})
    return (
        random_standard_mapping(rng, s1, s2),
        random_standard_mapping(rng, s2, s3),
    )


def random_mapping(rng: random.Random) -> Mapping:
    """A random valid mapping of any kind; used for text round-trips."""
    kind = rng.choice(["st-tgd", "standard", "st-so", "so-standard"])
    if kind in ("st-so", "so-standard"):
        dep = random_stso(rng)
        source, target = infer_schemas(dep)
        m = Mapping(source=source, target=target, stso=dep)
        if kind == "so-standard":
            m.target_egds = [e for e in [_random_key_egd(rng, target)] if e]
            m.target_tgds = _random_target_tgds(rng, target)
        return m
    source = Schema({name: rng.randint(1, 3) for name in ["A", "B", "P"][: rng.randint(1, 3)]})
    target = Schema({name: rng.randint(1, 3) for name in ["T", "U", "R"][: rng.randint(1, 3)]})
    m = random_standard_mapping(rng, source, target)
    if kind == "st-tgd":
        m.target_egds = []
        m.target_tgds = []
    if rng.random() < 0.3:
        egd = _random_key_egd(rng, source)
        if egd:
            m.source_egds = [egd]
    return m
