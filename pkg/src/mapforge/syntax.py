"""Concrete syntax: parsing and rendering of mappings, instances, queries.

The textual language is the only serialization boundary. Variables are
lowercase, relations capitalized; function symbols are lowercase names
declared by the `exists` prefix of an stso block. Universal quantifiers
are implicit; `forall` prefixes are accepted and ignored. Constants in
instance files are bare alphanumerics or single-quoted strings and are
compared as tokens, never as numbers.

A mapping file looks like:

    source { P/2, Q/1 }
    target { R/2 }
    st {
      P(x, y) -> R(x, y).
      Q(x) -> exists z: R(x, z).
    }
    tegd {
      R(x, y) & R(x, z) -> y = z.
    }

with further sections `ttgd { }` (target tgds), `segd { }` (source egds)
and `stso { exists f, g: ... }` for a second-order source-to-target
dependency. `#` starts a line comment. Instance files are fact lists
(`R(1, _N1).`); query files are rule lists with `;` between disjuncts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .certain import UCQ, ConjunctiveQuery
from .deps import (
    Clause,
    Diagnostic,
    Egd,
    EqAtom,
    FOTgd,
    Mapping,
    RelAtom,
    SourceSpan,
    StSODependency,
    has_errors,
    validate,
)
from .terms import App, Term, Var
from .values import Constant, Fact, Instance, Null, Schema, Value


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class ArityError(ParseError):
    pass


class GroundViolation(ParseError):
    pass


class ValidationError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics if d.severity == "error"))
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<arrow>->)
  | (?P<turnstile>:-)
  | (?P<word>[A-Za-z0-9_][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<sym>[{}(),/.=&:;])
    """,
    re.VERBOSE,
)

_PUNCT_NAMES = {
    "{": "lbrace",
    "}": "rbrace",
    "(": "lpar",
    ")": "rpar",
    ",": "comma",
    "/": "slash",
    ".": "dot",
    "=": "eq",
    "&": "amp",
    ":": "colon",
    ";": "semi",
}


@dataclass(frozen=True)
class Token:
    kind: str  # word, quoted, arrow, turnstile, punct names, eof
    text: str
    span: SourceSpan


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(file, line, col))
        span = SourceSpan(file, line, col)
        chunk = m.group(0)
        kind = m.lastgroup
        if kind == "sym":
            kind = _PUNCT_NAMES[chunk]
        if kind != "ws":
            tokens.append(Token(kind, chunk, span))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(file, line, col)))
    return tokens


def _is_relation(word: str) -> bool:
    return word[0].isupper()


def _is_lower_name(word: str) -> bool:
    return word[0].islower()


_NULL_RE = re.compile(r"_[nN]([0-9]+)$")


class _Parser:
    def __init__(self, text: str, file: str):
        self.tokens = tokenize(text, file)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            want = what or kind
            got = tok.text or "end of input"
            raise ParseError(f"expected {want}, found {got!r}", tok.span)
        return self.next()

    def expect_word(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "word" or tok.text != word:
            got = tok.text or "end of input"
            raise ParseError(f"expected {word!r}, found {got!r}", tok.span)
        return self.next()

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.text == word

    # -- schemas ------------------------------------------------------------

    def parse_schema(self) -> Schema:
        self.expect("lbrace", "'{'")
        arities: dict[str, int] = {}
        if self.peek().kind != "rbrace":
            while True:
                name = self.expect("word", "relation name")
                if not _is_relation(name.text):
                    raise ParseError(f"relation names are capitalized: {name.text!r}", name.span)
                self.expect("slash", "'/'")
                num = self.expect("word", "arity")
                if not num.text.isdigit():
                    raise ParseError(f"arity must be a number, found {num.text!r}", num.span)
                if name.text in arities:
                    raise ParseError(f"relation {name.text} declared twice", name.span)
                arities[name.text] = int(num.text)
                if self.peek().kind != "comma":
                    break
                self.next()
        self.expect("rbrace", "'}'")
        return Schema(arities)

    # -- terms and atoms ----------------------------------------------------

    def parse_term(self, functions: dict[str, int] | None) -> Term:
        tok = self.expect("word", "a term")
        if not _is_lower_name(tok.text):
            raise ParseError(f"expected a variable or function term, found {tok.text!r}", tok.span)
        if self.peek().kind == "lpar":
            if functions is None:
                raise ParseError(f"function term {tok.text}(...) not allowed here", tok.span)
            if tok.text not in functions:
                raise ParseError(f"undeclared function symbol {tok.text}", tok.span)
            self.next()
            args: list[Term] = []
            if self.peek().kind != "rpar":
                while True:
                    args.append(self.parse_term(functions))
                    if self.peek().kind != "comma":
                        break
                    self.next()
            self.expect("rpar", "')'")
            seen = functions[tok.text]
            if seen >= 0 and seen != len(args):
                raise ParseError(
                    f"function {tok.text} used with arity {len(args)} and {seen}", tok.span
                )
            functions[tok.text] = len(args)
            return App(tok.text, tuple(args))
        if functions is not None and tok.text in functions:
            raise ParseError(f"function symbol {tok.text} used as a variable", tok.span)
        return Var(tok.text)

    def parse_atom(self, functions: dict[str, int] | None) -> RelAtom | EqAtom:
        tok = self.peek()
        if tok.kind == "word" and _is_relation(tok.text):
            self.next()
            self.expect("lpar", "'('")
            args: list[Term] = []
            if self.peek().kind != "rpar":
                while True:
                    args.append(self.parse_term(functions))
                    if self.peek().kind != "comma":
                        break
                    self.next()
            self.expect("rpar", "')'")
            return RelAtom(tok.text, tuple(args))
        lhs = self.parse_term(functions)
        self.expect("eq", "'='")
        rhs = self.parse_term(functions)
        return EqAtom(lhs, rhs)

    def skip_forall_prefix(self) -> None:
        if self.at_word("forall"):
            self.next()
            self.expect("word", "variable")
            while self.peek().kind == "comma":
                self.next()
                self.expect("word", "variable")
            self.expect("colon", "':'")

    def parse_exists_prefix(self) -> list[Var]:
        self.expect_word("exists")
        out = [Var(self.expect("word", "variable").text)]
        while self.peek().kind == "comma":
            self.next()
            out.append(Var(self.expect("word", "variable").text))
        self.expect("colon", "':'")
        return out

    # -- first-order dependencies -------------------------------------------

    def parse_fo_tgd(self) -> FOTgd:
        start = self.peek().span
        self.skip_forall_prefix()
        premise = [self.parse_atom(None)]
        while self.peek().kind == "amp":
            self.next()
            premise.append(self.parse_atom(None))
        self.expect("arrow", "'->'")
        if self.at_word("exists"):
            self.parse_exists_prefix()  # names recoverable from the atoms
        conclusion = [self.parse_atom(None)]
        while self.peek().kind == "amp":
            self.next()
            conclusion.append(self.parse_atom(None))
        self.expect("dot", "'.'")
        for atom in premise + conclusion:
            if isinstance(atom, EqAtom):
                raise ParseError("equality atom in a tgd", start)
        return FOTgd(tuple(premise), tuple(conclusion), span=start)

    def parse_egd(self) -> Egd:
        start = self.peek().span
        self.skip_forall_prefix()
        premise = []
        first = self.parse_atom(None)
        if isinstance(first, EqAtom):
            raise ParseError("egd premise must start with a relational atom", start)
        premise.append(first)
        while self.peek().kind == "amp":
            self.next()
            atom = self.parse_atom(None)
            if isinstance(atom, EqAtom):
                raise ParseError("equality atom in an egd premise", start)
            premise.append(atom)
        self.expect("arrow", "'->'")
        conclusion = self.parse_atom(None)
        if not isinstance(conclusion, EqAtom):
            raise ParseError("egd conclusion must be an equality", start)
        if not isinstance(conclusion.lhs, Var) or not isinstance(conclusion.rhs, Var):
            raise ParseError("egd conclusion must equate variables", start)
        self.expect("dot", "'.'")
        return Egd(tuple(premise), conclusion.lhs, conclusion.rhs, span=start)

    # -- second-order dependency --------------------------------------------

    def parse_stso_body(self) -> StSODependency:
        functions: dict[str, int] = {}
        if self.at_word("exists"):
            for v in self.parse_exists_prefix():
                if not _is_lower_name(v.name):
                    raise ParseError(f"function symbols are lowercase: {v.name!r}", self.peek().span)
                functions[v.name] = -1  # arity fixed at first use
        clauses: list[Clause] = []
        while self.peek().kind not in ("rbrace", "eof"):
            clauses.append(self.parse_stso_clause(functions))
        for fn, ar in functions.items():
            if ar < 0:
                functions[fn] = 0
        return StSODependency(functions, clauses)

    def parse_stso_clause(self, functions: dict[str, int]) -> Clause:
        start = self.peek().span
        self.skip_forall_prefix()
        premise = [self.parse_atom(functions)]
        while self.peek().kind == "amp" and not (
            self.peek(1).kind == "word" and self.peek(1).text == "forall"
        ):
            self.next()
            premise.append(self.parse_atom(functions))
        self.expect("arrow", "'->'")
        conclusion = [self.parse_atom(functions)]
        while self.peek().kind == "amp" and not (
            self.peek(1).kind == "word" and self.peek(1).text == "forall"
        ):
            self.next()
            conclusion.append(self.parse_atom(functions))
        if self.peek().kind == "dot":
            self.next()
        elif self.peek().kind == "amp":
            self.next()  # clause boundary: the '&' before a forall prefix
        elif self.peek().kind not in ("rbrace", "eof"):
            raise ParseError(
                f"expected '.', '&' or '}}', found {self.peek().text!r}", self.peek().span
            )
        return Clause(tuple(premise), tuple(conclusion), span=start)

    # -- mapping ------------------------------------------------------------

    def parse_mapping(self) -> Mapping:
        self.expect_word("source")
        source = self.parse_schema()
        self.expect_word("target")
        target = self.parse_schema()
        st_tgds: list[FOTgd] = []
        stso: StSODependency | None = None
        source_egds: list[Egd] = []
        target_egds: list[Egd] = []
        target_tgds: list[FOTgd] = []
        while self.peek().kind != "eof":
            section = self.expect("word", "a section (st, tegd, ttgd, segd, stso)")
            self.expect("lbrace", "'{'")
            if section.text == "st":
                while self.peek().kind != "rbrace":
                    st_tgds.append(self.parse_fo_tgd())
            elif section.text == "ttgd":
                while self.peek().kind != "rbrace":
                    target_tgds.append(self.parse_fo_tgd())
            elif section.text == "tegd":
                while self.peek().kind != "rbrace":
                    target_egds.append(self.parse_egd())
            elif section.text == "segd":
                while self.peek().kind != "rbrace":
                    source_egds.append(self.parse_egd())
            elif section.text == "stso":
                if stso is not None:
                    raise ParseError("a mapping has at most one stso section", section.span)
                stso = self.parse_stso_body()
            else:
                raise ParseError(f"unknown section {section.text!r}", section.span)
            self.expect("rbrace", "'}'")
        return Mapping(
            source=source,
            target=target,
            st_tgds=st_tgds,
            stso=stso,
            source_egds=source_egds,
            target_egds=target_egds,
            target_tgds=target_tgds,
        )

    # -- instances ----------------------------------------------------------

    def parse_value(self) -> Value:
        tok = self.peek()
        if tok.kind == "quoted":
            self.next()
            body = tok.text[1:-1]
            return Constant(re.sub(r"\\(.)", r"\1", body))
        word = self.expect("word", "a value")
        if word.text.startswith("_"):
            m = _NULL_RE.match(word.text)
            if not m:
                raise ParseError(f"malformed null token {word.text!r} (use _N<k>)", word.span)
            return Null(int(m.group(1)))
        return Constant(word.text)

    def parse_instance(self, schema: Schema | None, ground: bool) -> Instance:
        inst = Instance()
        while self.peek().kind != "eof":
            rel = self.expect("word", "relation name")
            if not _is_relation(rel.text):
                raise ParseError(f"relation names are capitalized: {rel.text!r}", rel.span)
            self.expect("lpar", "'('")
            args: list[Value] = []
            if self.peek().kind != "rpar":
                while True:
                    span = self.peek().span
                    v = self.parse_value()
                    if ground and isinstance(v, Null):
                        raise GroundViolation(f"null {v} in ground instance", span)
                    args.append(v)
                    if self.peek().kind != "comma":
                        break
                    self.next()
            self.expect("rpar", "')'")
            self.expect("dot", "'.'")
            if schema is not None:
                if rel.text not in schema:
                    raise ArityError(f"relation {rel.text} not in schema", rel.span)
                if schema.arity(rel.text) != len(args):
                    raise ArityError(
                        f"{rel.text} expects {schema.arity(rel.text)} arguments, found {len(args)}",
                        rel.span,
                    )
            inst.add(Fact(rel.text, tuple(args)))
        return inst

    # -- queries ------------------------------------------------------------

    def parse_query(self) -> UCQ:
        disjuncts: list[ConjunctiveQuery] = []
        name: str | None = None
        while True:
            start = self.peek().span
            head = self.expect("word", "query head")
            if name is None:
                name = head.text
            elif head.text != name:
                raise ParseError(f"query head {head.text!r} does not match {name!r}", head.span)
            self.expect("lpar", "'('")
            head_vars: list[Var] = []
            if self.peek().kind != "rpar":
                while True:
                    v = self.expect("word", "variable")
                    if not _is_lower_name(v.text):
                        raise ParseError(f"head arguments are variables: {v.text!r}", v.span)
                    head_vars.append(Var(v.text))
                    if self.peek().kind != "comma":
                        break
                    self.next()
            self.expect("rpar", "')'")
            self.expect("turnstile", "':-'")
            body = [self._parse_query_atom()]
            while self.peek().kind == "comma":
                self.next()
                body.append(self._parse_query_atom())
            body_vars = {v for atom in body for v in atom.args if isinstance(v, Var)}
            for v in head_vars:
                if v not in body_vars:
                    raise ParseError(f"head variable {v} not bound in body", start)
            disjuncts.append(ConjunctiveQuery(tuple(head_vars), tuple(body)))
            if self.peek().kind == "semi":
                self.next()
                continue
            break
        self.expect("dot", "'.'")
        self.expect("eof", "end of input")
        arities = {len(d.head) for d in disjuncts}
        if len(arities) > 1:
            raise ParseError("disjuncts disagree on head arity", self.peek().span)
        return UCQ(name or "q", tuple(disjuncts))

    def _parse_query_atom(self) -> RelAtom:
        atom = self.parse_atom(None)
        if isinstance(atom, EqAtom):
            raise ParseError("equality atoms are not allowed in queries", self.peek().span)
        for t in atom.args:
            if not isinstance(t, Var):
                raise ParseError(f"query atoms take variables, found {t}", self.peek().span)
        return atom


# ---------------------------------------------------------------------------
# public parse API


def parse_mapping(text: str, file: str = "<input>", *, validated: bool = True) -> Mapping:
    p = _Parser(text, file)
    mapping = p.parse_mapping()
    p.expect("eof", "end of input")
    if validated:
        diags = validate(mapping)
        if has_errors(diags):
            raise ValidationError(diags)
    return mapping


def parse_instance(
    text: str,
    schema: Schema | None = None,
    *,
    ground: bool = False,
    file: str = "<input>",
) -> Instance:
    return _Parser(text, file).parse_instance(schema, ground)


def parse_query(text: str, file: str = "<input>") -> UCQ:
    return _Parser(text, file).parse_query()


# ---------------------------------------------------------------------------
# rendering


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"{t.fn}({', '.join(render_term(a) for a in t.args)})"


def render_atom(atom: RelAtom | EqAtom) -> str:
    if isinstance(atom, RelAtom):
        return f"{atom.rel}({', '.join(render_term(a) for a in atom.args)})"
    return f"{render_term(atom.lhs)} = {render_term(atom.rhs)}"


def render_fo_tgd(tgd: FOTgd) -> str:
    prem = " & ".join(render_atom(a) for a in tgd.premise)
    conc = " & ".join(render_atom(a) for a in tgd.conclusion)
    ex = tgd.existential_vars()
    prefix = f"exists {', '.join(v.name for v in ex)}: " if ex else ""
    return f"{prem} -> {prefix}{conc}."


def render_egd(egd: Egd) -> str:
    prem = " & ".join(render_atom(a) for a in egd.premise)
    return f"{prem} -> {egd.lhs.name} = {egd.rhs.name}."


def render_clause(clause: Clause) -> str:
    prem = " & ".join(render_atom(a) for a in clause.premise)
    conc = " & ".join(render_atom(a) for a in clause.conclusion)
    return f"{prem} -> {conc}."


def _render_schema(schema: Schema) -> str:
    inner = ", ".join(f"{n}/{schema.arity(n)}" for n in schema.names())
    return f"{{ {inner} }}" if inner else "{ }"


def render_mapping(m: Mapping) -> str:
    lines = [f"source {_render_schema(m.source)}", f"target {_render_schema(m.target)}"]

    def section(name: str, rows: list[str]) -> None:
        if not rows:
            return
        lines.append(name + " {")
        lines.extend(f"  {r}" for r in rows)
        lines.append("}")

    section("st", [render_fo_tgd(t) for t in m.st_tgds])
    if m.stso is not None:
        lines.append("stso {")
        if m.stso.functions:
            lines.append(f"  exists {', '.join(sorted(m.stso.functions))}:")
        lines.extend(f"  {render_clause(c)}" for c in m.stso.clauses)
        lines.append("}")
    section("segd", [render_egd(e) for e in m.source_egds])
    section("tegd", [render_egd(e) for e in m.target_egds])
    section("ttgd", [render_fo_tgd(t) for t in m.target_tgds])
    return "\n".join(lines) + "\n"


def render_value(v: Value) -> str:
    if isinstance(v, Null):
        return str(v)
    if re.fullmatch(r"[A-Za-z0-9][A-Za-z0-9_]*", v.label):
        return v.label
    escaped = v.label.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def render_instance(inst: Instance) -> str:
    canon = inst.canonical()
    lines = [
        f"{f.rel}({', '.join(render_value(a) for a in f.args)})." for f in canon.facts_sorted()
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def render_query(q: UCQ) -> str:
    parts = []
    for cq in q.disjuncts:
        head = f"{q.name}({', '.join(v.name for v in cq.head)})"
        body = ", ".join(render_atom(a) for a in cq.body)
        parts.append(f"{head} :- {body}")
    return " ;\n".join(parts) + ".\n"


def render(x: Mapping | Instance | UCQ) -> str:
    if isinstance(x, Mapping):
        return render_mapping(x)
    if isinstance(x, Instance):
        return render_instance(x)
    return render_query(x)


# ---------------------------------------------------------------------------
# JSON forms (structured CLI output)


def value_to_json(v: Value) -> dict:
    if isinstance(v, Constant):
        return {"c": v.label}
    return {"n": v.index}


def value_from_json(obj: dict) -> Value:
    if "c" in obj:
        return Constant(str(obj["c"]))
    return Null(int(obj["n"]))


def instance_to_json(inst: Instance) -> dict:
    canon = inst.canonical()
    return {
        "facts": [
            {"rel": f.rel, "args": [value_to_json(a) for a in f.args]}
            for f in canon.facts_sorted()
        ]
    }


def instance_from_json(obj: dict) -> Instance:
    return Instance(
        Fact(f["rel"], tuple(value_from_json(a) for a in f["args"])) for f in obj["facts"]
    )


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
