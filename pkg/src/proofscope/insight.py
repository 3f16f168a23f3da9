"""Cluster explanation: correlation-based feature selection and pattern automata.

Feature selection runs a greedy forward search over the merit
s * mean|corr(feature, label)| / sqrt(s + s*(s-1) * mean|corr(feature, feature)|)
with cluster labels turned into one-vs-rest indicators (max over clusters).
A cluster of proof patches renders as an automaton of 5 consecutive states:
state i lists the ith goals, the edge i -> i+1 carries the ith tactics merged
by tactic group, and states are annotated with the selected features that
landed on their row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import Clustering
from .encoders import TacticTable
from .errors import DegenerateLabels
from .proofs import ProofPatch, ROW_WIDTH
from .syntax import pretty
from .termfeatures import FeatureVector


@dataclass
class FeatureSelection:
    selected: list[int]
    merit: float
    per_cluster_correlations: dict[tuple[int, int], float] = field(default_factory=dict)


def _safe_corr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|a_cols| x |b_cols| absolute Pearson matrix; constant columns give 0."""
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    na = np.sqrt((ac**2).sum(axis=0))
    nb = np.sqrt((bc**2).sum(axis=0))
    denom = np.outer(na, nb)
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = (ac.T @ bc) / denom
    return np.abs(np.nan_to_num(corr))


def select_features(
    vectors: list[FeatureVector], clustering: Clustering
) -> FeatureSelection:
    """Greedy forward search maximizing the correlation-based merit."""
    labels = np.array([clustering.assignment[v.object_id] for v in vectors])
    classes = sorted(set(int(c) for c in labels))
    if len(classes) < 2:
        raise DegenerateLabels("all objects share one cluster")
    X = np.array([v.values for v in vectors], dtype=float)
    indicators = np.stack([(labels == c).astype(float) for c in classes], axis=1)

    class_corr = _safe_corr(X, indicators)  # features x classes
    r_cf = class_corr.max(axis=1)
    n_features = X.shape[1]

    ff_cache: dict[tuple[int, int], float] = {}

    def ff(i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in ff_cache:
            ff_cache[key] = float(_safe_corr(X[:, [key[0]]], X[:, [key[1]]])[0, 0])
        return ff_cache[key]

    def merit(subset: list[int]) -> float:
        s = len(subset)
        mean_cf = float(np.mean(r_cf[subset]))
        if s == 1:
            return mean_cf
        pairs = [ff(a, b) for idx, a in enumerate(subset) for b in subset[idx + 1 :]]
        mean_ff = sum(pairs) / len(pairs)
        return s * mean_cf / math.sqrt(s + s * (s - 1) * mean_ff)

    selected: list[int] = []
    current = 0.0
    visited: list[float] = []
    while True:
        best_feature = None
        best_merit = current
        for f in range(n_features):
            if f in selected:
                continue
            m = merit(selected + [f])
            visited.append(m)
            if m > best_merit:
                best_merit = m
                best_feature = f
        if best_feature is None:
            break
        selected.append(best_feature)
        current = best_merit
    assert all(current >= m - 1e-12 for m in visited), "greedy merit not maximal"

    per_cluster = {
        (f, c): float(class_corr[f, ci])
        for f in selected
        for ci, c in enumerate(classes)
    }
    return FeatureSelection(selected, current, per_cluster)


# ---------------------------------------------------------------------------
# Pattern automaton

SLOT_DESCRIPTIONS = (
    "first tactic applied",
    "second tactic applied",
    "third tactic applied",
    "rest of tactics applied",
    "number of tactics",
    "first tactic argument type",
    "second tactic argument type",
    "third tactic argument type",
    "rest of tactic argument types",
    "first lemma applied",
    "second lemma applied",
    "third lemma applied",
    "rest of lemmas applied",
    "top symbol of the goal",
    "second top symbol of the goal",
    "third top symbol of the goal",
    "open subgoals",
)


@dataclass
class AutomatonState:
    index: int
    goal_labels: list[tuple[str, str]]
    annotations: list[str] = field(default_factory=list)


@dataclass
class PatternAutomaton:
    states: list[AutomatonState]  # always 5
    transitions: list[tuple[int, int, str]]

    def to_json(self) -> dict:
        return {
            "states": [
                {
                    "index": s.index,
                    "goals": [{"lemma": l, "goal": g} for l, g in s.goal_labels],
                    "annotations": s.annotations,
                }
                for s in self.states
            ],
            "transitions": [
                {"from": a, "to": b, "label": label} for a, b, label in self.transitions
            ],
        }


def feature_annotation(feature_index: int) -> tuple[int, str]:
    """(state row, human-readable description) for a patch feature index."""
    row, slot = divmod(feature_index, ROW_WIDTH)
    return row, SLOT_DESCRIPTIONS[slot]


def build_automaton(
    cluster: list[ProofPatch],
    selection: FeatureSelection | None,
    tactic_table: TacticTable,
) -> PatternAutomaton:
    """5-state automaton summarizing a cluster of proof patches."""
    patches = sorted(cluster, key=lambda p: p.object_id)
    states = [AutomatonState(i, []) for i in range(5)]
    for patch in patches:
        for i, step in enumerate(patch.steps):
            states[i].goal_labels.append((patch.source_lemma, pretty(step.goal)))

    transitions: list[tuple[int, int, str]] = []
    for i in range(4):
        by_group: dict[int, tuple[str, list[str]]] = {}
        for patch in patches:
            if i >= len(patch.steps):
                continue
            for tactic in patch.steps[i].tactics:
                gid, label = tactic_table.register(tactic.name)[:2]
                group_label, names = by_group.setdefault(gid, (label, []))
                if tactic.name not in names:
                    names.append(tactic.name)
        for gid in sorted(by_group):
            group_label, names = by_group[gid]
            label = group_label if len(names) > 1 else names[0]
            transitions.append((i, i + 1, label))

    if selection is not None:
        for f in selection.selected:
            row, description = feature_annotation(f)
            states[row].annotations.append(description)
    transitions.sort(key=lambda t: (t[0], t[2]))
    return PatternAutomaton(states, transitions)


# ---------------------------------------------------------------------------
# Rendering


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def emit_dot(automaton: PatternAutomaton) -> str:
    """Deterministic DOT digraph: one box per state, labelled edges."""
    lines = [
        "digraph proof_pattern {",
        "  rankdir=LR;",
        "  node [shape=box];",
    ]
    for state in automaton.states:
        parts = [f"State {state.index + 1}"]
        parts.extend(f"{lemma}: {goal}" for lemma, goal in state.goal_labels)
        parts.extend(f"[{note}]" for note in sorted(state.annotations))
        label = _dot_escape("\n".join(parts))
        lines.append(f'  s{state.index} [label="{label}"];')
    for a, b, label in automaton.transitions:
        lines.append(f'  s{a} -> s{b} [label="{_dot_escape(label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_text(automaton: PatternAutomaton) -> str:
    """Plain-text summary, one state per block."""
    blocks = []
    for state in automaton.states:
        lines = [f"State {state.index + 1}"]
        for lemma, goal in state.goal_labels:
            lines.append(f"  goal[{lemma}]: {goal}")
        for note in sorted(state.annotations):
            lines.append(f"  correlates: {note}")
        outgoing = [t for t in automaton.transitions if t[0] == state.index]
        for _, _, label in outgoing:
            lines.append(f"  --{label}--> State {state.index + 2}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
