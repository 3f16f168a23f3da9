"""Proof traces, proof patches, 5x6 patch matrices and patch-level clustering.

A proof is a sequence of (goal, tactic sequence, subgoal count) steps; proof
contexts are deliberately not modelled.  Patches are windows of at most five
consecutive steps: consecutive non-overlapping chunks plus, for proofs of five
or more steps, one extra window covering the last five steps when that window
is not already produced.  Each patch becomes a 5-row matrix (tactics, tactic
count, argument types, argument lemmas, goal symbols, subgoals) flattened to
85 values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .clustering import ClusterConfig, Clustering, cluster_count, kmeans
from .encoders import (
    AssignmentTable,
    TacticTable,
    aggregate_values,
    encode_name,
    encode_sort,
    encode_tactic,
)
from .errors import MalformedProofRecord, TooFewObjects, UnknownName
from .recurrent import RecurrentState
from .syntax import BUILTINS, Corpus, Sort, TermAst, Var, free_vars, iter_names, parse
from .termfeatures import FeatureVector, node_term_value
from .termtree import TermTypeNode, TypingEnv, build_term_tree, canonical_type_key

PATCH_VECTOR_LENGTH = 85
ROW_WIDTH = 17  # 4 tactics + count + 4 arg types + 4 arg lemmas + 3 symbols + subgoals

ARG_KINDS = ("lemma", "hyp", "term")


@dataclass(frozen=True)
class Arg:
    kind: str  # lemma | hyp | term
    name: str
    arg_type: TermAst


@dataclass(frozen=True)
class TacticApp:
    name: str
    args: tuple[Arg, ...] = ()


@dataclass(frozen=True)
class ProofStep:
    goal: TermAst
    tactics: tuple[TacticApp, ...]
    subgoals_after: int


@dataclass(frozen=True)
class ProofTrace:
    lemma_name: str
    steps: tuple[ProofStep, ...]


@dataclass(frozen=True)
class ProofPatch:
    source_lemma: str
    start_index: int
    steps: tuple[ProofStep, ...]

    @property
    def object_id(self) -> str:
        end = self.start_index + len(self.steps) - 1
        return f"{self.source_lemma}[{self.start_index}..{end}]"


Tuple4 = tuple[float, float, float, float]
Tuple3 = tuple[float, float, float]


@dataclass(frozen=True)
class PatchRow:
    tactics: Tuple4
    tactic_count: int
    arg_types: Tuple4
    arg_lemmas: Tuple4
    symbols: Tuple3
    subgoals: int


ZERO_ROW = PatchRow((0.0,) * 4, 0, (0.0,) * 4, (0.0,) * 4, (0.0,) * 3, 0)


@dataclass
class PatchMatrix:
    rows: list[PatchRow]  # unused rows zero-filled
    source_id: str = ""

    def __post_init__(self):
        if len(self.rows) != 5:
            raise ValueError("a patch matrix has exactly 5 rows")


# ---------------------------------------------------------------------------
# Trace loading


def load_trace(record: dict, index: int, known_names: set[str]) -> ProofTrace:
    """Validate and convert one proof-trace record into a ProofTrace."""
    known_names = known_names | set(BUILTINS)

    def bad(reason: str):
        raise MalformedProofRecord(index, reason)

    if not isinstance(record, dict):
        bad("record must be a JSON object")
    lemma = record.get("lemma")
    if not isinstance(lemma, str) or not lemma:
        bad("missing lemma name")
    raw_steps = record.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        bad("steps must be a nonempty list")

    steps = []
    for s_idx, raw in enumerate(raw_steps):
        if not isinstance(raw, dict):
            bad(f"step {s_idx} must be an object")
        try:
            goal = parse(raw["goal"])
        except KeyError:
            bad(f"step {s_idx} has no goal")
        except Exception as exc:
            bad(f"step {s_idx} goal does not parse: {exc}")
        if free_vars(goal):
            bad(f"step {s_idx} goal has unbound variables {sorted(free_vars(goal))}")
        for nm in iter_names(goal):
            if not nm.is_numeral and nm.ident not in known_names:
                raise UnknownName(nm.ident, nm.pos)
        subgoals = raw.get("subgoalsAfter")
        if not isinstance(subgoals, int) or subgoals < 0:
            bad(f"step {s_idx} subgoalsAfter must be a non-negative integer")
        tactics = []
        for t_idx, t in enumerate(raw.get("tactics", [])):
            if not isinstance(t, dict) or not isinstance(t.get("name"), str):
                bad(f"step {s_idx} tactic {t_idx} needs a name")
            args = []
            for a in t.get("args", []):
                kind = a.get("kind")
                if kind not in ARG_KINDS:
                    bad(f"step {s_idx} tactic {t_idx} arg kind {kind!r} invalid")
                name = a.get("name")
                if not isinstance(name, str) or not name:
                    bad(f"step {s_idx} tactic {t_idx} arg needs a name")
                if kind == "lemma" and not name.isdigit() and name not in known_names:
                    raise UnknownName(name)
                try:
                    arg_type = parse(a["type"])
                except KeyError:
                    bad(f"step {s_idx} tactic {t_idx} arg {name!r} has no type")
                except Exception as exc:
                    bad(f"step {s_idx} arg type does not parse: {exc}")
                args.append(Arg(kind, name, arg_type))
            tactics.append(TacticApp(t["name"], tuple(args)))
        steps.append(ProofStep(goal, tuple(tactics), subgoals))

    if steps[-1].subgoals_after != 0:
        bad("last step must end with 0 subgoals")
    return ProofTrace(lemma, tuple(steps))


# ---------------------------------------------------------------------------
# Patch splitting


def split_patches(proof: ProofTrace) -> list[ProofPatch]:
    """Non-overlapping 5-step chunks plus the final 5-step window when new."""
    n = len(proof.steps)
    windows = [(start, min(start + 5, n) - 1) for start in range(0, n, 5)]
    if n >= 5 and (n - 5, n - 1) not in windows:
        windows.append((n - 5, n - 1))
    return [
        ProofPatch(proof.lemma_name, start, proof.steps[start : end + 1])
        for start, end in windows
    ]


def all_patches(corpus: Corpus) -> list[ProofPatch]:
    return [p for proof in corpus.proofs for p in split_patches(proof)]


# ---------------------------------------------------------------------------
# Patch matrices


def _pad4(values: list[float], rest) -> Tuple4:
    head = values[:3] + [0.0] * (3 - len(values))
    return (head[0], head[1], head[2], float(rest))


def _arg_type_value(typ: TermAst, tables: AssignmentTable) -> float:
    if isinstance(typ, Sort):
        return float(encode_sort(typ))
    if isinstance(typ, Var):
        return 0.0  # proof-local type variable: no tree context to index it
    key = canonical_type_key(typ, {})
    if key in tables.type_values:
        return tables.type_values[key]
    for name in iter_names(typ):
        return float(encode_name(name.ident, tables, "term"))
    return 0.0


def goal_symbols(
    goal: TermAst, env: TypingEnv, tables: AssignmentTable
) -> Tuple3:
    """Term values of the first three non-variable nodes in level order."""
    tree = build_term_tree(goal, env)
    values: list[float] = []
    for _, node in tree.level_order():
        if isinstance(node, TermTypeNode) and isinstance(node.term, Var):
            continue
        values.append(node_term_value(node, tree, tables))
        if len(values) == 3:
            break
    values += [0.0] * (3 - len(values))
    return (values[0], values[1], values[2])


def _row_from_step(
    step: ProofStep,
    tables: AssignmentTable,
    tactic_table: TacticTable,
    env: TypingEnv,
) -> PatchRow:
    tactic_values = [float(encode_tactic(t.name, tactic_table)) for t in step.tactics]
    rest_tactics = aggregate_values(
        [encode_tactic(t.name, tactic_table) for t in step.tactics[3:]], "orderedList"
    )

    ordered_args = [a for t in step.tactics for a in t.args]
    type_values = [_arg_type_value(a.arg_type, tables) for a in ordered_args]
    rest_types = aggregate_values(type_values[3:], "unorderedSet")

    hyp_rank: dict[str, int] = {}
    lemma_values: list[float] = []
    for a in ordered_args:
        if a.kind == "lemma":
            lemma_values.append(float(encode_name(a.name, tables, "term")))
        elif a.kind == "hyp":
            rank = hyp_rank.setdefault(a.name, len(hyp_rank) + 1)
            lemma_values.append(float(rank))
    rest_lemmas = aggregate_values(lemma_values[3:], "orderedList")

    return PatchRow(
        tactics=_pad4(tactic_values, rest_tactics),
        tactic_count=len(step.tactics),
        arg_types=_pad4(type_values, rest_types),
        arg_lemmas=_pad4(lemma_values, rest_lemmas),
        symbols=goal_symbols(step.goal, env, tables),
        subgoals=step.subgoals_after,
    )


def patch_matrix(
    patch: ProofPatch,
    tables: AssignmentTable,
    tactic_table: TacticTable,
    env: TypingEnv,
) -> PatchMatrix:
    rows = [_row_from_step(s, tables, tactic_table, env) for s in patch.steps]
    rows += [ZERO_ROW] * (5 - len(rows))
    return PatchMatrix(rows, patch.object_id)


def flatten_patch(matrix: PatchMatrix) -> FeatureVector:
    """Row-major 5x17 flattening: 85 values per patch."""
    values: list[float] = []
    for row in matrix.rows:
        values.extend(row.tactics)
        values.append(float(row.tactic_count))
        values.extend(row.arg_types)
        values.extend(row.arg_lemmas)
        values.extend(row.symbols)
        values.append(float(row.subgoals))
    assert len(values) == PATCH_VECTOR_LENGTH
    return FeatureVector(values, matrix.source_id)


# ---------------------------------------------------------------------------
# Clustering and queries


def patch_vectors(
    corpus: Corpus, tables: AssignmentTable, tactic_table: TacticTable
) -> dict[str, FeatureVector]:
    env = TypingEnv.for_corpus(corpus)
    out: dict[str, FeatureVector] = {}
    for patch in all_patches(corpus):
        out[patch.object_id] = flatten_patch(
            patch_matrix(patch, tables, tactic_table, env)
        )
    return out


def cluster_proof_patches(
    corpus: Corpus, state: RecurrentState, config: ClusterConfig
) -> Clustering:
    """Vectorize and cluster every patch of every proof in the corpus."""
    tactic_table = TacticTable.for_dialect(corpus.dialect)
    vectors = patch_vectors(corpus, state.tables, tactic_table)
    if len(vectors) < 2:
        raise TooFewObjects("need at least 2 proof patches")
    k = cluster_count(len(vectors), config.granularity)
    return kmeans(list(vectors.values()), k, config)


def query_similar(
    query,
    corpus: Corpus,
    state: RecurrentState,
    config: ClusterConfig,
) -> list[tuple[str, float]]:
    """Other members of the query's cluster, by descending proximity.

    The query may be a ProofPatch object, a patch id such as "lemma[0..4]",
    or a definition name (term-side similarity).
    """

    def ranked(clustering: Clustering, target_id: str) -> list[tuple[str, float]]:
        cluster = clustering.assignment[target_id]
        members = [m for m in clustering.members(cluster) if m != target_id]
        return sorted(
            ((m, clustering.proximities[m]) for m in members),
            key=lambda item: (-item[1], item[0]),
        )

    if isinstance(query, ProofPatch):
        tactic_table = TacticTable.for_dialect(corpus.dialect)
        vectors = patch_vectors(corpus, state.tables, tactic_table)
        env = TypingEnv.for_corpus(corpus)
        query_vec = flatten_patch(patch_matrix(query, state.tables, tactic_table, env))
        query_vec.object_id = "query"
        pool = list(vectors.values()) + [query_vec]
        k = cluster_count(len(pool), config.granularity)
        clustering = kmeans(pool, k, config)
        return ranked(clustering, "query")

    if isinstance(query, str):
        if query in {d.name for d in corpus.definitions}:
            return ranked(state.term_clustering, query)
        if query not in {p.object_id for p in all_patches(corpus)}:
            raise UnknownName(query)
        clustering = cluster_proof_patches(corpus, state, config)
        return ranked(clustering, query)

    raise TypeError("query must be a ProofPatch, patch id, or definition name")
