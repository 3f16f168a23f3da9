"""Injective numeric encodings for keyword tokens, sorts, variables, names and tactics.

The group encoders share one shape: the jth member of group n gets
n + sum_{k=1..j} 1/(10*2^(k-1)), so members of a group sit within 0.1 of each
other while distinct groups stay at least 0.8 apart.  Keyword tokens are
negated, sorts ride on a base of 100, and clustered names live at
200 + 2*cluster + proximity.  Exact values are Fractions; tables produced by
clustering hold floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import UnassignedName, UnknownToken, VariableNotFound
from .syntax import Sort
from .termtree import TermTree

# Names whose text is a numeral are not clustered; they take a fixed value in
# a reserved band far above any cluster assignment.
NUMERAL_BASE = 1_000_000


def _geom(count: int) -> Fraction:
    return sum(
        (Fraction(1, 10 * 2 ** (j - 1)) for j in range(1, count + 1)), Fraction(0)
    )


# ---------------------------------------------------------------------------
# Keyword tokens

GALLINA_GROUPS: tuple[tuple[str, ...], ...] = (
    ("forall", "->"),
    ("fun",),
    ("let", "let fix", "let cofix"),
    ("fix", "cofix"),
    ("@",),
    ("match", "if"),
    (":=", "=>", "is"),
    ("Inductive", "CoInductive"),
    ("exists", "exists2"),
    (":", ":>", "<:"),
)

_GALLINA_VALUES: dict[str, Fraction] = {}
for _g, _members in enumerate(GALLINA_GROUPS, start=1):
    for _j, _tok in enumerate(_members, start=1):
        _GALLINA_VALUES[_tok] = -(_g + _geom(_j))


def encode_gallina(token: str) -> Fraction:
    """Negative rational for a keyword token; e.g. forall -> -1.1."""
    try:
        return _GALLINA_VALUES[token]
    except KeyError:
        raise UnknownToken(token) from None


def encode_sort(sort: Sort) -> Fraction:
    """100.1, 100.15, 100.175, ... along Set, Prop, Type(0), Type(1), ..."""
    index = {"Set": 1, "Prop": 2}.get(sort.tier, 3 + sort.level)
    return 100 + _geom(index)


def encode_variable(var: str, context: TermTree) -> int:
    """1-based first-occurrence rank of a variable in the tree traversal."""
    try:
        return context.var_order[var]
    except KeyError:
        raise VariableNotFound(var) from None


def numeral_value(ident: str) -> Fraction:
    return Fraction(NUMERAL_BASE + int(ident))


# ---------------------------------------------------------------------------
# Name and type assignments


@dataclass
class AssignmentTable:
    """Injective name -> value and type-expression -> value maps.

    Type expressions are keyed by their canonical printed form.  The round
    records which clustering iteration produced the values (0 = bootstrap).
    """

    term_values: dict[str, float] = field(default_factory=dict)
    type_values: dict[str, float] = field(default_factory=dict)
    round: int = 0

    def validate(self):
        for label, mapping in (("term", self.term_values), ("type", self.type_values)):
            if len(set(mapping.values())) != len(mapping):
                raise ValueError(f"{label} value map not injective")


def encode_name(name: str, table: AssignmentTable, kind: str = "term") -> float:
    """Stored value of a name (kind 'term') or canonical type key (kind 'type')."""
    if kind == "term" and name.isdigit():
        return float(numeral_value(name))
    mapping = table.term_values if kind == "term" else table.type_values
    try:
        return mapping[name]
    except KeyError:
        raise UnassignedName(name) from None


# ---------------------------------------------------------------------------
# Tactics

SSREFLECT_GROUPS: tuple[tuple[int, str, tuple[str, ...], bool], ...] = (
    (1, "Bookkeeping", ("move:", "move=>"), False),
    (2, "Case and Induction", ("case", "elim"), False),
    (3, "Discharge", ("apply", "exact", "congr"), False),
    (4, "Simplification", ("//", "/=", "//="), False),
    (5, "Rewrite", ("rewrite",), True),
    (6, "Forward Chaining", ("have", "suff", "wlog"), False),
    (7, "Views and Reflection", ("move/", "apply/", "elim/", "case/"), False),
)

COQ_GROUPS: tuple[tuple[int, str, tuple[str, ...], bool], ...] = (
    (1, "Applying theorems",
     ("exact", "eexact", "assumption", "eassumption", "refine", "apply",
      "eapply", "simple apply", "lapply"), False),
    (2, "Managing inductive constructors",
     ("constructor", "split", "exists", "left", "right", "econstructor",
      "esplit", "eexists", "eleft", "eright"), False),
    (3, "Managing local context",
     ("intro", "intros", "clear", "revert", "move", "rename", "set",
      "remember", "pose", "decompose"), False),
    (4, "Controlling proof flow",
     ("assert", "cut", "specialize", "generalize", "evar", "instantiate",
      "admit", "absurd", "contradiction", "contradict", "exfalso"), False),
    (5, "Case analysis and induction",
     ("destruct", "case", "ecase", "simple destruct", "induction",
      "einduction", "elim", "eelim", "simple induction", "double induction",
      "dependent induction", "functional induction", "discriminate",
      "injection", "fix", "cofix", "case_eq", "elimtype"), False),
    (6, "Rewriting expressions",
     ("rewrite", "erewrite", "cutrewrite", "replace", "reflexivity",
      "symmetry", "transitivity", "subst", "stepl", "change"), False),
    (7, "Performing computations",
     ("cbv", "compute", "vm_compute", "red", "hnf", "simpl", "unfold",
      "fold", "pattern", "conv_tactic"), False),
    (8, "Automation", ("auto", "trivial", "eauto", "autounfold", "autorewrite"), False),
    (9, "Decision procedures",
     ("tauto", "intuition", "rtauto", "firstorder", "congruence"), False),
    (10, "Equality", ("decide equality", "compare", "simplify_eq", "esimplify_eq"), False),
    (11, "Inversion",
     ("inversion", "dependent inversion", "functional inversion", "quote"), False),
    (12, "Classical tactics", ("classical_left", "classical_right"), False),
    (13, "Automatizing", ("omega", "ring", "field", "fourier"), False),
    (14, "Other", (), False),
)


@dataclass
class TacticTable:
    """Per-dialect tactic groups; unknown tactics self-register in the extension group."""

    dialect: str
    groups: list[tuple[int, str, list[str], bool]]
    extension_group: int
    dynamic_extensions: list[str] = field(default_factory=list)

    @classmethod
    def for_dialect(cls, dialect: str) -> "TacticTable":
        if dialect == "ssreflect":
            base, ext = SSREFLECT_GROUPS, 8
            groups = [(g, label, list(members), bare) for g, label, members, bare in base]
            groups.append((ext, "Other", [], False))
        elif dialect == "coq":
            groups = [(g, label, list(members), bare) for g, label, members, bare in COQ_GROUPS]
            ext = 14
        else:
            raise ValueError(f"unknown dialect {dialect!r}")
        return cls(dialect, groups, ext)

    def lookup(self, name: str) -> tuple[int, str, int, bool] | None:
        """(group id, group label, 1-based position, bare flag) or None."""
        for gid, label, members, bare in self.groups:
            if name in members:
                return gid, label, members.index(name) + 1, bare
        return None

    def register(self, name: str) -> tuple[int, str, int, bool]:
        found = self.lookup(name)
        if found is not None:
            return found
        for gid, label, members, bare in self.groups:
            if gid == self.extension_group:
                members.append(name)
                self.dynamic_extensions.append(name)
                return gid, label, len(members), bare
        raise AssertionError("extension group missing")

    def all_tactics(self) -> list[str]:
        return [name for _, _, members, _ in self.groups for name in members]


def encode_tactic(name: str, table: TacticTable) -> Fraction:
    """Value of a tactic; unknown tactics join the extension group first.

    Mutates the table on unknown input, so concurrent encoders must either
    serialize calls or pre-register the whole tactic inventory.
    """
    gid, _, position, bare = table.register(name)
    if bare:
        return Fraction(gid)
    return gid + _geom(position)


def tactic_group(name: str, table: TacticTable) -> tuple[int, str]:
    gid, label, _, _ = table.register(name)
    return gid, label


def aggregate_values(values, mode: str) -> Fraction:
    """Collapse a list of encoded values into one slot value.

    orderedList: sum of v_k / 2^k over positions, order and repetition
    sensitive.  unorderedSet: mean over the distinct values.
    """
    values = [Fraction(v) if not isinstance(v, Fraction) else v for v in values]
    if not values:
        return Fraction(0)
    if mode == "unorderedSet":
        distinct = sorted(set(values))
        return sum(distinct, Fraction(0)) / len(distinct)
    if mode == "orderedList":
        return sum(
            (v / Fraction(2**k) for k, v in enumerate(values, start=1)), Fraction(0)
        )
    raise ValueError(f"unknown aggregation mode {mode!r}")


def encode_tactic_list(tactics, table: TacticTable, mode: str) -> Fraction:
    return aggregate_values([encode_tactic(t, table) for t in tactics], mode)


# ---------------------------------------------------------------------------
# Debug dumps


def dump_tables(table: AssignmentTable, tactic_table: TacticTable) -> str:
    """key<TAB>value lines, sorted by key, for --dump-tables."""
    lines = []
    for name, value in table.term_values.items():
        lines.append(f"term:{name}\t{float(value)}")
    for key, value in table.type_values.items():
        lines.append(f"type:{key}\t{float(value)}")
    for name in tactic_table.all_tactics():
        lines.append(f"tactic:{name}\t{float(encode_tactic(name, tactic_table))}")
    return "\n".join(sorted(lines)) + "\n"
