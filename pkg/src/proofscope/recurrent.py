"""Recurrent term/type clustering: encode, cluster, re-assign values, repeat.

Each round vectorizes every definition (its body, or its declared type for
axioms) and every type expression appearing as a node label, clusters both
sides, then writes 200 + 2*cluster + proximity into fresh assignment tables.
Rounds repeat until both partitions stabilize or a round budget runs out.
Builtins and numerals keep their bootstrap values throughout: they have no
defining term to cluster.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .clustering import ClusterConfig, Clustering, cluster_count, kmeans
from .encoders import AssignmentTable
from .errors import CyclicDependency, TooFewObjects
from .syntax import BUILTINS, Corpus, Sort, TermAst, Var, free_vars, iter_names
from .termfeatures import FeatureVector, flatten, term_feature_matrix
from .termtree import (
    TermTree,
    TermTypeNode,
    TypingEnv,
    build_term_tree,
    canonical_type_key,
)

DEFAULT_MAX_ROUNDS = 5
_EPSILON = 1e-6


def dependency_order(corpus: Corpus) -> list[str]:
    """Topological order of definitions, ties broken by file order."""
    names = [d.name for d in corpus.definitions]
    index = set(names)
    deps: dict[str, set[str]] = {}
    for d in corpus.definitions:
        refs = set()
        for term in (d.declared_type, d.body):
            if term is None:
                continue
            for nm in iter_names(term):
                if nm.ident in index:
                    refs.add(nm.ident)
        deps[d.name] = refs

    done: set[str] = set()
    out: list[str] = []
    remaining = list(names)
    while remaining:
        pick = next((n for n in remaining if deps[n] <= done), None)
        if pick is None:
            members = set(remaining)
            changed = True
            while changed:
                changed = False
                for n in list(members):
                    if not (deps[n] & members):
                        members.discard(n)
                        changed = True
            raise CyclicDependency(sorted(members))
        out.append(pick)
        done.add(pick)
        remaining.remove(pick)
    return out


# ---------------------------------------------------------------------------
# Type-expression universe

Scope = dict[str, TermAst]


def tree_labels(tree: TermTree) -> list[tuple[str, TermAst, Scope]]:
    """Table-backed type labels of a tree: (canonical key, label, free-var types).

    Sort and bare-variable labels encode directly and are skipped.  Free
    variables of a label are typed from the tree's own binder nodes, which is
    unambiguous because binding sites are renamed apart at build time.
    """
    var_types: Scope = dict(tree.free_bindings)
    var_types.update(
        (node.term.ident, node.typ)
        for node in tree.nodes.values()
        if isinstance(node, TermTypeNode) and isinstance(node.term, Var)
    )

    def capture(variables) -> Scope:
        # transitive: a captured binder type may itself have free variables
        scope: Scope = {}
        work = list(variables)
        while work:
            v = work.pop()
            if v in scope or v not in var_types:
                continue
            scope[v] = var_types[v]
            work.extend(free_vars(var_types[v]))
        return scope

    out = []
    for _, node in tree.level_order():
        if isinstance(node, TermTypeNode) and not isinstance(node.typ, (Sort, Var)):
            key = canonical_type_key(node.typ, tree.var_order)
            out.append((key, node.typ, capture(free_vars(node.typ))))
    return out


def type_universe(
    corpus: Corpus, extra_terms: tuple[TermAst, ...] = ()
) -> dict[str, TermTree]:
    """Standalone trees for every type expression labelling any node.

    Collected in first-appearance order over the definitions (dependency
    order), then closed under the labels of the collected expressions
    themselves, since a type expression is vectorized as a term tree too.
    """
    env = TypingEnv.for_corpus(corpus)
    queue: list[tuple[str, TermAst, Scope]] = []
    for name in dependency_order(corpus):
        d = corpus.get(name)
        term = d.body if d.body is not None else d.declared_type
        queue.extend(tree_labels(build_term_tree(term, env)))
    for term in extra_terms:
        queue.extend(tree_labels(build_term_tree(term, env)))

    universe: dict[str, TermTree] = {}
    i = 0
    while i < len(queue):
        key, ast, scope = queue[i]
        i += 1
        if key in universe:
            continue
        tree = build_term_tree(ast, env, scope)
        universe[key] = tree
        queue.extend(tree_labels(tree))
    return universe


# ---------------------------------------------------------------------------
# Tables


def bootstrap_tables(
    corpus: Corpus, extra_terms: tuple[TermAst, ...] = ()
) -> AssignmentTable:
    """Round-0 tables: 200 + 2*rank along builtins, then dependency order."""
    order = list(BUILTINS) + dependency_order(corpus)
    term_values = {name: 200.0 + 2.0 * rank for rank, name in enumerate(order)}
    universe = type_universe(corpus, extra_terms)
    type_values = {key: 200.0 + 2.0 * rank for rank, key in enumerate(universe)}
    table = AssignmentTable(term_values, type_values, 0)
    table.validate()
    return table


def _repair_injective(
    values: dict[str, float], anchors: frozenset[str] = frozenset()
) -> dict[str, float]:
    # separate exact collisions by epsilon steps in key order; values stay
    # inside their cluster band since epsilon << the 2-wide band gap.
    # Anchor keys (builtins) keep their exact value.
    for _ in range(64):
        groups: dict[float, list[str]] = {}
        for key, val in values.items():
            groups.setdefault(val, []).append(key)
        dups = [keys for keys in groups.values() if len(keys) > 1]
        if not dups:
            return values
        for keys in dups:
            keys.sort(key=lambda k: (k not in anchors, k))
            for i, key in enumerate(keys):
                values[key] = values[key] + _EPSILON * i
    raise AssertionError("could not make value map injective")


def _values_from(ids, clustering: Clustering) -> dict[str, float]:
    return {
        oid: 200.0 + 2.0 * clustering.assignment[oid] + clustering.proximities[oid]
        for oid in ids
    }


# ---------------------------------------------------------------------------
# Driver


@dataclass
class RecurrentState:
    round: int
    tables: AssignmentTable
    term_clustering: Clustering
    type_clustering: Clustering | None
    term_vectors: dict[str, FeatureVector]
    type_vectors: dict[str, FeatureVector] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)


def _partition_json(clustering: Clustering | None) -> list[list[str]]:
    if clustering is None:
        return []
    return sorted(sorted(clustering.members(c)) for c in range(clustering.k))


def recurrent_cluster(
    corpus: Corpus,
    config: ClusterConfig,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> RecurrentState:
    """Iterate encode/cluster until both partitions stabilize or rounds run out.

    Hitting the round budget without convergence is a valid stop, not an
    error.  With a fixed seed the final state is fully reproducible.
    """
    if len(corpus.definitions) < 2:
        raise TooFewObjects("recurrent clustering needs at least 2 definitions")
    env = TypingEnv.for_corpus(corpus)

    def_terms = {
        d.name: d.body if d.body is not None else d.declared_type
        for d in corpus.definitions
    }
    def_trees: dict[str, TermTree] = {
        name: build_term_tree(term, env) for name, term in def_terms.items()
    }
    type_trees = type_universe(corpus)

    bootstrap = bootstrap_tables(corpus)
    tables = bootstrap
    k_term = cluster_count(len(def_trees), config.granularity)
    type_config = replace(config, seed=config.seed + 1)

    prev_term = prev_type = None
    history: list[dict] = []
    state = None
    for round_number in range(1, max(1, max_rounds) + 1):
        assert tables.round == round_number - 1, "tables must come from the previous round"
        term_vectors = {
            name: flatten(term_feature_matrix(def_trees[name], tables, name))
            for name in def_trees
        }
        term_clustering = kmeans(list(term_vectors.values()), k_term, config)

        type_vectors: dict[str, FeatureVector] = {}
        type_clustering = None
        if len(type_trees) >= 2:
            type_vectors = {
                key: flatten(term_feature_matrix(type_trees[key], tables, key))
                for key in type_trees
            }
            k_type = cluster_count(len(type_trees), config.granularity)
            type_clustering = kmeans(list(type_vectors.values()), k_type, type_config)

        term_values = dict(
            (name, bootstrap.term_values[name]) for name in BUILTINS
        )
        term_values.update(_values_from(def_trees, term_clustering))
        term_values = _repair_injective(term_values, frozenset(BUILTINS))
        if type_clustering is not None:
            type_values = _repair_injective(_values_from(type_trees, type_clustering))
        else:
            type_values = dict(bootstrap.type_values)
        new_tables = AssignmentTable(term_values, type_values, round_number)
        new_tables.validate()

        history.append(
            {
                "round": round_number,
                "termPartition": _partition_json(term_clustering),
                "typePartition": _partition_json(type_clustering),
            }
        )
        state = RecurrentState(
            round=round_number,
            tables=new_tables,
            term_clustering=term_clustering,
            type_clustering=type_clustering,
            term_vectors=term_vectors,
            type_vectors=type_vectors,
            history=history,
        )

        term_part = term_clustering.partition()
        type_part = type_clustering.partition() if type_clustering else frozenset()
        if prev_term == term_part and prev_type == type_part:
            break
        prev_term, prev_type = term_part, type_part
        tables = new_tables
    return state
