import itertools
import json
import random
from pathlib import Path

import pytest

from proofscope import recurrent, syntax, termtree
from proofscope.syntax import (
    App,
    Arrow,
    Fix,
    Forall,
    Fun,
    Let,
    Name,
    Sort,
    Var,
)

FIXTURES = Path(__file__).parent / "fixtures"


def load_corpus(defs_name: str, proofs_name: str | None = None, dialect="ssreflect"):
    text = (FIXTURES / defs_name).read_text()
    records = []
    if proofs_name:
        for line in (FIXTURES / proofs_name).read_text().splitlines():
            if line.strip():
                records.append(json.loads(line))
    return syntax.parse_corpus(text, records, dialect)


@pytest.fixture(scope="session")
def seq_corpus():
    return load_corpus("seq.defs")


@pytest.fixture(scope="session")
def telescope_corpus():
    return load_corpus("telescope.defs", "telescope.jsonl")


@pytest.fixture(scope="session")
def strategy_corpus():
    return load_corpus("strategy.defs", "strategy.jsonl")


@pytest.fixture(scope="session")
def planted_corpus():
    return load_corpus("planted30.defs")


FIG1_SOURCE = "forall (n : nat) (H : even n), odd (n + 1)"


@pytest.fixture(scope="session")
def fig1_ast():
    return syntax.parse(FIG1_SOURCE)


@pytest.fixture(scope="session")
def fig1_tree(fig1_ast):
    return termtree.build_term_tree(fig1_ast, termtree.TypingEnv())


@pytest.fixture(scope="session")
def fig1_tables(fig1_ast):
    corpus = syntax.parse_corpus("")
    return recurrent.bootstrap_tables(corpus, (fig1_ast,))


# ---------------------------------------------------------------------------
# Random closed terms for property tests

NAME_POOL = ("nat", "bool", "even", "odd", "true", "false", "bigsum", "+", "==")
VAR_POOL = ("a", "b", "c", "x", "y", "z")


def random_term(rng: random.Random, scope: tuple[str, ...] = (), depth: int = 0):
    """A random closed term over builtin names; small enough to fit 10x10."""
    leafy = depth >= 3
    options = ["name", "sort", "numeral"]
    if scope:
        options += ["var", "var"]
    if not leafy:
        options += ["app", "arrow", "forall", "fun", "let", "fix"]
    kind = rng.choice(options)
    if kind == "name":
        return Name(rng.choice(("even", "odd", "true", "false", "bigsum", "nat", "bool")))
    if kind == "sort":
        return rng.choice((Sort("Set"), Sort("Prop"), Sort("Type", rng.randrange(2))))
    if kind == "numeral":
        return Name(str(rng.randrange(4)))
    if kind == "var":
        return Var(rng.choice(scope))
    if kind == "app":
        head = rng.choice(("even", "odd", "bigsum", "+", "=="))
        # operators are infix only, so they always take exactly two arguments
        n_args = 2 if head in ("+", "==") else rng.randrange(1, 3)
        return App(Name(head), tuple(random_term(rng, scope, depth + 2) for _ in range(n_args)))
    if kind == "arrow":
        return Arrow(random_term(rng, scope, depth + 1), random_term(rng, scope, depth + 1))
    if kind in ("forall", "fun"):
        fresh = [v for v in VAR_POOL if v not in scope]
        n_binders = rng.randrange(1, 3) if fresh[1:] else 1
        binders = []
        inner = scope
        for _ in range(n_binders):
            v = fresh.pop(0)
            binders.append((v, random_term(rng, inner, depth + 2)))
            inner = inner + (v,)
        body = random_term(rng, inner, depth + 1)
        cls = Forall if kind == "forall" else Fun
        return cls(tuple(binders), body)
    if kind == "let":
        fresh = next(v for v in VAR_POOL if v not in scope)
        return Let(
            fresh,
            random_term(rng, scope, depth + 2),
            random_term(rng, scope, depth + 2),
            random_term(rng, scope + (fresh,), depth + 1),
        )
    fresh = [v for v in VAR_POOL if v not in scope]
    f, x = fresh[0], fresh[1]
    return Fix(
        f,
        (x, random_term(rng, scope, depth + 2)),
        random_term(rng, scope + (x,), depth + 2),
        random_term(rng, scope + (f, x), depth + 1),
    )


def rename_bound(t, mapping: dict, fresh):
    """Rename every binder (and its occurrences) with names drawn from fresh."""
    if isinstance(t, Var):
        return Var(mapping.get(t.ident, t.ident))
    if isinstance(t, (Sort, Name)):
        return t
    if isinstance(t, (Forall, Fun)):
        m = dict(mapping)
        binders = []
        for v, ty in t.binders:
            ty2 = rename_bound(ty, m, fresh)
            nv = next(fresh)
            m[v] = nv
            binders.append((nv, ty2))
        cls = type(t)
        return cls(tuple(binders), rename_bound(t.body, m, fresh))
    if isinstance(t, Arrow):
        return Arrow(rename_bound(t.domain, mapping, fresh), rename_bound(t.codomain, mapping, fresh))
    if isinstance(t, App):
        return App(
            rename_bound(t.head, mapping, fresh),
            tuple(rename_bound(a, mapping, fresh) for a in t.args),
        )
    if isinstance(t, Let):
        typ = rename_bound(t.typ, mapping, fresh)
        bound = rename_bound(t.bound, mapping, fresh)
        m = dict(mapping)
        nv = next(fresh)
        m[t.var] = nv
        return Let(nv, typ, bound, rename_bound(t.body, m, fresh))
    if isinstance(t, Fix):
        v, ty = t.binder
        ty2 = rename_bound(ty, mapping, fresh)
        m = dict(mapping)
        nx = next(fresh)
        m[v] = nx
        ret = rename_bound(t.ret, m, fresh)
        nf = next(fresh)
        m[t.name] = nf
        return Fix(nf, (nx, ty2), ret, rename_bound(t.body, m, fresh))
    raise TypeError(t)


def alpha_canonical(t) -> str:
    fresh = (f"v{i}" for i in itertools.count())
    return syntax.pretty(rename_bound(t, {}, fresh))


def alpha_variant(t, start: int = 50):
    fresh = (f"w{i}" for i in itertools.count(start))
    return rename_bound(t, {}, fresh)


def generate_distinct_terms(count: int, seed: int = 0, max_size: int = 10):
    """count pairwise non-alpha-equivalent closed terms fitting max_size x max_size."""
    rng = random.Random(seed)
    env = termtree.TypingEnv()
    seen: set[str] = set()
    out = []
    while len(out) < count:
        term = random_term(rng)
        tree = termtree.build_term_tree(term, env)
        if tree.max_depth > max_size - 1:
            continue
        if any(tree.width(d) > max_size for d in range(tree.max_depth + 1)):
            continue
        canon = alpha_canonical(term)
        if canon in seen:
            continue
        seen.add(canon)
        out.append(term)
    return out
