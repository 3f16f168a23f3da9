"""Tokenizer, term parser and corpus loader for the restricted term language.

The term grammar covers sorts (Set, Prop, Type(i)), global names, variables,
forall/fun binders, non-dependent arrows, flattened application, let and fix.
Identifiers consisting of a single letter plus optional digits and primes
(n, H, x1, s2') lex as variables; everything else is a global name.  The four
operators +, -, *, == are infix sugar for binary application.

Corpus files contain one declaration per `.`-terminated clause, either
`name : TYPE := BODY .` or `name : TYPE .` for an axiom, with `(* ... *)`
comments.  Proof traces arrive as already-decoded JSON records (one object
per line in the file format, see the cli module).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import (
    DuplicateDefinition,
    LexError,
    ParseError,
    UnbalancedParens,
    UnknownName,
)

# ---------------------------------------------------------------------------
# Tokens

KEYWORDS = frozenset(
    {
        "forall",
        "fun",
        "let",
        "fix",
        "cofix",
        "match",
        "if",
        "is",
        "in",
        "Inductive",
        "CoInductive",
        "exists",
        "exists2",
    }
)

SORT_TOKENS = frozenset({"Set", "Prop", "Type"})

# Tokens the parser deliberately rejects: lexable per the full keyword
# inventory but outside the implemented term grammar.
UNSUPPORTED_KEYWORDS = frozenset(
    {"match", "if", "cofix", "is", "Inductive", "CoInductive", "exists", "exists2"}
)

INFIX_OPERATORS = ("==", "+", "-", "*")

_SYMBOL_KINDS = (
    ("->", "arrow"),
    ("=>", "fatArrow"),
    (":=", "assign"),
    (":>", "keyword"),
    ("<:", "keyword"),
    ("==", "name"),
    (":", "colon"),
    ("(", "lparen"),
    (")", "rparen"),
    (",", "comma"),
    ("@", "keyword"),
    ("+", "name"),
    ("-", "name"),
    ("*", "name"),
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_VARIABLE_RE = re.compile(r"[A-Za-z][0-9]*'*\Z")
_INT_RE = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def position(self) -> tuple[int, int]:
        return (self.line, self.column)


def _scan(source: str, allow_period: bool) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(text: str):
        nonlocal i, line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += len(text)

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            continue
        if source.startswith("(*", i):
            # comments nest
            depth = 0
            start = (line, col)
            j = i
            while j < n:
                if source.startswith("(*", j):
                    depth += 1
                    j += 2
                elif source.startswith("*)", j):
                    depth -= 1
                    j += 2
                    if depth == 0:
                        break
                else:
                    j += 1
            if depth != 0:
                raise LexError("unterminated comment", *start)
            advance(source[i:j])
            continue
        matched = False
        for text, kind in _SYMBOL_KINDS:
            if source.startswith(text, i):
                tokens.append(Token(kind, text, line, col))
                advance(text)
                matched = True
                break
        if matched:
            continue
        if allow_period and ch == ".":
            tokens.append(Token("period", ".", line, col))
            advance(ch)
            continue
        m = _INT_RE.match(source, i)
        if m:
            tokens.append(Token("integer", m.group(), line, col))
            advance(m.group())
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            text = m.group()
            if text in SORT_TOKENS:
                kind = "sort"
            elif text in KEYWORDS:
                kind = "keyword"
            elif _VARIABLE_RE.match(text):
                kind = "variable"
            else:
                kind = "name"
            tokens.append(Token(kind, text, line, col))
            advance(text)
            continue
        raise LexError(f"no token starts with {ch!r}", line, col)
    return tokens


def tokenize(source: str) -> list[Token]:
    """Tokenize a term source string, skipping comments."""
    return _scan(source, allow_period=False)


# ---------------------------------------------------------------------------
# Term AST


@dataclass(frozen=True)
class Sort:
    tier: str  # "Set" | "Prop" | "Type"
    level: int = 0


@dataclass(frozen=True)
class Name:
    ident: str
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    @property
    def is_numeral(self) -> bool:
        return self.ident.isdigit()


@dataclass(frozen=True)
class Var:
    ident: str


@dataclass(frozen=True)
class Forall:
    binders: tuple[tuple[str, "TermAst"], ...]
    body: "TermAst"


@dataclass(frozen=True)
class Fun:
    binders: tuple[tuple[str, "TermAst"], ...]
    body: "TermAst"


@dataclass(frozen=True)
class Arrow:
    domain: "TermAst"
    codomain: "TermAst"


@dataclass(frozen=True)
class App:
    head: "TermAst"
    args: tuple["TermAst", ...]


@dataclass(frozen=True)
class Let:
    var: str
    typ: "TermAst"
    bound: "TermAst"
    body: "TermAst"


@dataclass(frozen=True)
class Fix:
    name: str
    binder: tuple[str, "TermAst"]
    ret: "TermAst"
    body: "TermAst"


TermAst = Union[Sort, Name, Var, Forall, Fun, Arrow, App, Let, Fix]


def make_app(head: TermAst, args: tuple[TermAst, ...]) -> TermAst:
    # keep application uncurried: no App node ever has an App head
    if isinstance(head, App):
        return App(head.head, head.args + args)
    return App(head, args)


# ---------------------------------------------------------------------------
# Parser

_ATOM_STARTS = frozenset({"name", "variable", "integer", "sort", "lparen"})
_BINDER_KEYWORDS = frozenset({"forall", "fun", "let", "fix"})


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _fail(self, message: str, expected: str = "", cls=ParseError):
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            line, col = (last.line, last.column + len(last.text)) if last else (1, 1)
            raise cls(f"{message}: unexpected end of input", line, col, expected)
        raise cls(f"{message}: got {tok.text!r}", tok.line, tok.column, expected)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            self._fail("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind or (text is not None and tok.text != text):
            if kind in ("rparen", "lparen"):
                self._fail("unbalanced parentheses", text or kind, UnbalancedParens)
            self._fail("syntax error", text or kind)
        return self.next()

    def term(self) -> TermAst:
        tok = self.peek()
        if tok is not None and tok.kind == "keyword":
            if tok.text in UNSUPPORTED_KEYWORDS:
                self._fail(f"{tok.text!r} is outside the supported term grammar")
            if tok.text == "forall":
                self.next()
                binders = self.binders()
                self.expect("comma")
                return Forall(binders, self.term())
            if tok.text == "fun":
                self.next()
                binders = self.binders()
                self.expect("fatArrow")
                return Fun(binders, self.term())
            if tok.text == "let":
                self.next()
                var = self.expect("variable").text
                self.expect("colon")
                typ = self.term()
                self.expect("assign")
                bound = self.term()
                self.expect("keyword", "in")
                return Let(var, typ, bound, self.term())
            if tok.text == "fix":
                self.next()
                name = self.expect("variable").text
                self.expect("lparen")
                bvar = self.expect("variable").text
                self.expect("colon")
                btyp = self.term()
                self.expect("rparen")
                self.expect("colon")
                ret = self.term()
                self.expect("assign")
                return Fix(name, (bvar, btyp), ret, self.term())
        return self.arrow()

    def binders(self) -> tuple[tuple[str, TermAst], ...]:
        tok = self.peek()
        if tok is not None and tok.kind == "lparen":
            out = []
            while (t := self.peek()) is not None and t.kind == "lparen":
                self.next()
                var = self.expect("variable").text
                self.expect("colon")
                typ = self.term()
                self.expect("rparen")
                out.append((var, typ))
            return tuple(out)
        # single unparenthesized binder: forall x : T, U
        var = self.expect("variable").text
        self.expect("colon")
        return ((var, self.term()),)

    def arrow(self) -> TermAst:
        left = self.cmp()
        tok = self.peek()
        if tok is not None and tok.kind == "arrow":
            self.next()
            return Arrow(left, self.term())  # right-associative
        return left

    def cmp(self) -> TermAst:
        left = self.add()
        tok = self.peek()
        if tok is not None and tok.kind == "name" and tok.text == "==":
            op = self.next()
            right = self.add()
            return make_app(Name("==", op.position), (left, right))
        return left

    def add(self) -> TermAst:
        left = self.mul()
        while (tok := self.peek()) is not None and tok.kind == "name" and tok.text in ("+", "-"):
            op = self.next()
            left = make_app(Name(op.text, op.position), (left, self.mul()))
        return left

    def mul(self) -> TermAst:
        left = self.app()
        while (tok := self.peek()) is not None and tok.kind == "name" and tok.text == "*":
            op = self.next()
            left = make_app(Name("*", op.position), (left, self.app()))
        return left

    def app(self) -> TermAst:
        head = self.atom()
        args = []
        while (tok := self.peek()) is not None and self._starts_atom(tok):
            args.append(self.atom())
        if args:
            return make_app(head, tuple(args))
        return head

    @staticmethod
    def _starts_atom(tok: Token) -> bool:
        if tok.kind == "name" and tok.text in INFIX_OPERATORS:
            return False
        return tok.kind in _ATOM_STARTS

    def atom(self) -> TermAst:
        tok = self.peek()
        if tok is None:
            self._fail("expected a term")
        if tok.kind == "sort":
            self.next()
            if tok.text == "Type":
                self.expect("lparen")
                level = int(self.expect("integer").text)
                self.expect("rparen")
                return Sort("Type", level)
            return Sort(tok.text)
        if tok.kind == "name":
            if tok.text in INFIX_OPERATORS:
                self._fail("operators are infix only")
            self.next()
            return Name(tok.text, tok.position)
        if tok.kind == "integer":
            self.next()
            return Name(tok.text, tok.position)
        if tok.kind == "variable":
            self.next()
            return Var(tok.text)
        if tok.kind == "lparen":
            self.next()
            inner = self.term()
            self.expect("rparen")
            return inner
        if tok.kind == "keyword" and (tok.text in _BINDER_KEYWORDS or tok.text in UNSUPPORTED_KEYWORDS):
            return self.term()
        self._fail("expected a term")


def parse_term(tokens: list[Token]) -> TermAst:
    """Parse a complete token list into a TermAst, consuming every token."""
    if not tokens:
        raise ParseError("empty input", 1, 1)
    parser = _Parser(tokens)
    ast = parser.term()
    leftover = parser.peek()
    if leftover is not None:
        if leftover.kind == "rparen":
            raise UnbalancedParens(
                "unbalanced parentheses", leftover.line, leftover.column
            )
        raise ParseError(
            f"trailing input: {leftover.text!r}", leftover.line, leftover.column
        )
    return ast


def parse(source: str) -> TermAst:
    return parse_term(tokenize(source))


# ---------------------------------------------------------------------------
# Canonical printer

def pretty(t: TermAst) -> str:
    """Canonical fully parenthesized rendering; re-parses to an equal TermAst."""
    if isinstance(t, Sort):
        return f"Type({t.level})" if t.tier == "Type" else t.tier
    if isinstance(t, (Name, Var)):
        return t.ident
    if isinstance(t, Arrow):
        return f"({pretty(t.domain)} -> {pretty(t.codomain)})"
    if isinstance(t, App):
        if isinstance(t.head, Name) and t.head.ident in INFIX_OPERATORS and len(t.args) >= 2:
            text = f"({pretty(t.args[0])} {t.head.ident} {pretty(t.args[1])})"
            # flattened over-application, e.g. (1 + 2) 3: re-curry the extras
            for extra in t.args[2:]:
                text = f"({text} {pretty(extra)})"
            return text
        parts = [pretty(t.head)] + [pretty(a) for a in t.args]
        return "(" + " ".join(parts) + ")"
    if isinstance(t, Forall):
        bs = " ".join(f"({v} : {pretty(ty)})" for v, ty in t.binders)
        return f"(forall {bs}, {pretty(t.body)})"
    if isinstance(t, Fun):
        bs = " ".join(f"({v} : {pretty(ty)})" for v, ty in t.binders)
        return f"(fun {bs} => {pretty(t.body)})"
    if isinstance(t, Let):
        return f"(let {t.var} : {pretty(t.typ)} := {pretty(t.bound)} in {pretty(t.body)})"
    if isinstance(t, Fix):
        v, ty = t.binder
        return f"(fix {t.name} ({v} : {pretty(ty)}) : {pretty(t.ret)} := {pretty(t.body)})"
    raise TypeError(f"not a TermAst: {t!r}")


# ---------------------------------------------------------------------------
# Builtin environment

# Global names available to every corpus, with their declared types.
# Numerals are implicitly names of type nat.
BUILTINS: dict[str, str] = {
    "nat": "Set",
    "bool": "Set",
    "unit": "Set",
    "seq": "Set -> Set",
    "true": "bool",
    "false": "bool",
    "tt": "unit",
    "+": "nat -> nat -> nat",
    "-": "nat -> nat -> nat",
    "*": "nat -> nat -> nat",
    "==": "nat -> nat -> bool",
    "even": "nat -> Prop",
    "odd": "nat -> Prop",
    "bigsum": "nat -> nat -> (nat -> nat) -> nat",
    "eqP": "Prop",
}

_builtin_cache: dict[str, TermAst] = {}


def builtin_types() -> dict[str, TermAst]:
    if not _builtin_cache:
        for name, src in BUILTINS.items():
            _builtin_cache[name] = parse(src)
    return _builtin_cache


# ---------------------------------------------------------------------------
# Corpus


@dataclass
class Definition:
    name: str
    declared_type: TermAst
    body: TermAst | None


@dataclass
class Corpus:
    definitions: list[Definition]
    proofs: list  # list[proofs.ProofTrace]
    dialect: str = "ssreflect"

    def names(self) -> set[str]:
        return {d.name for d in self.definitions}

    def get(self, name: str) -> Definition:
        for d in self.definitions:
            if d.name == name:
                return d
        raise UnknownName(name)


def iter_names(t: TermAst) -> Iterable[Name]:
    """Yield every Name node of a term in pre-order."""
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Name):
            yield node
        elif isinstance(node, (Forall, Fun)):
            stack.append(node.body)
            for _, ty in reversed(node.binders):
                stack.append(ty)
        elif isinstance(node, Arrow):
            stack.extend((node.codomain, node.domain))
        elif isinstance(node, App):
            stack.extend(reversed(node.args))
            stack.append(node.head)
        elif isinstance(node, Let):
            stack.extend((node.body, node.bound, node.typ))
        elif isinstance(node, Fix):
            stack.extend((node.body, node.ret, node.binder[1]))


def free_vars(t: TermAst, bound: frozenset[str] = frozenset()) -> set[str]:
    if isinstance(t, Var):
        return set() if t.ident in bound else {t.ident}
    if isinstance(t, (Sort, Name)):
        return set()
    if isinstance(t, (Forall, Fun)):
        out = set()
        for v, ty in t.binders:
            out |= free_vars(ty, bound)
            bound = bound | {v}
        return out | free_vars(t.body, bound)
    if isinstance(t, Arrow):
        return free_vars(t.domain, bound) | free_vars(t.codomain, bound)
    if isinstance(t, App):
        out = free_vars(t.head, bound)
        for a in t.args:
            out |= free_vars(a, bound)
        return out
    if isinstance(t, Let):
        return (
            free_vars(t.typ, bound)
            | free_vars(t.bound, bound)
            | free_vars(t.body, bound | {t.var})
        )
    if isinstance(t, Fix):
        v, ty = t.binder
        inner = bound | {t.name, v}
        return free_vars(ty, bound) | free_vars(t.ret, bound | {v}) | free_vars(t.body, inner)
    raise TypeError(f"not a TermAst: {t!r}")


def _parse_declarations(text: str) -> list[Definition]:
    tokens = _scan(text, allow_period=True)
    groups: list[list[Token]] = []
    current: list[Token] = []
    for tok in tokens:
        if tok.kind == "period":
            if current:
                groups.append(current)
                current = []
            continue
        current.append(tok)
    if current:
        last = current[-1]
        raise ParseError("declaration not terminated by '.'", last.line, last.column)

    defs = []
    for group in groups:
        parser = _Parser(group)
        name_tok = parser.peek()
        if name_tok is None or name_tok.kind != "name":
            parser._fail("declaration must start with a name")
        parser.next()
        parser.expect("colon")
        typ = parser.term()
        body = None
        if (tok := parser.peek()) is not None:
            if tok.kind != "assign":
                parser._fail("expected ':=' or '.'")
            parser.next()
            body = parser.term()
            if parser.peek() is not None:
                parser._fail("trailing tokens in declaration")
        defs.append(Definition(name_tok.text, typ, body))
    return defs


def _check_names(term: TermAst, known: set[str]):
    for n in iter_names(term):
        if n.is_numeral or n.ident in known:
            continue
        raise UnknownName(n.ident, n.pos)


def parse_corpus(
    definitions_text: str,
    proof_records: Iterable[dict] = (),
    dialect: str = "ssreflect",
) -> Corpus:
    """Load a definitions file plus proof-trace records into a Corpus.

    Definitions keep file order and every referenced name must resolve to a
    corpus definition, a builtin, or a numeral.
    """
    definitions = _parse_declarations(definitions_text)
    seen: set[str] = set()
    for d in definitions:
        if d.name in seen or d.name in BUILTINS:
            raise DuplicateDefinition(d.name)
        seen.add(d.name)

    known = seen | set(BUILTINS)
    for d in definitions:
        _check_names(d.declared_type, known)
        if d.body is not None:
            _check_names(d.body, known)

    from .proofs import load_trace  # local import: proofs depends on this module

    traces = [load_trace(rec, idx, known) for idx, rec in enumerate(proof_records)]
    return Corpus(definitions, traces, dialect)
