"""10x10 term tree matrices and their 300-value flattened feature vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .encoders import AssignmentTable, encode_gallina, encode_name, encode_sort
from .errors import VariableNotFound
from .syntax import Name, Sort, TermAst, Var, iter_names
from .termtree import GallinaNode, TermTree, TreeNode, canonical_type_key, prune

MATRIX_SIZE = 10
TERM_VECTOR_LENGTH = MATRIX_SIZE * MATRIX_SIZE * 3  # 300

Cell = tuple[float, float, float]
ZERO_CELL: Cell = (0.0, 0.0, 0.0)


@dataclass
class TermFeatureMatrix:
    cells: list[list[Cell]]  # 10 rows (depth) x 10 columns (level index)
    source_name: str = ""

    def cell(self, depth: int, index: int) -> Cell:
        return self.cells[depth][index]

    def nonzero_positions(self) -> list[tuple[int, int]]:
        return [
            (d, i)
            for d in range(MATRIX_SIZE)
            for i in range(MATRIX_SIZE)
            if self.cells[d][i] != ZERO_CELL
        ]


@dataclass
class FeatureVector:
    values: list[float]
    object_id: str = ""

    def __post_init__(self):
        if len(self.values) not in (TERM_VECTOR_LENGTH, 85):
            raise ValueError(f"bad feature vector length {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")


def term_value(term: TermAst, tree: TermTree, tables: AssignmentTable) -> float:
    """Value of the term component of a term-type node."""
    if isinstance(term, Sort):
        return float(encode_sort(term))
    if isinstance(term, Var):
        try:
            return float(tree.var_order[term.ident])
        except KeyError:
            raise VariableNotFound(term.ident) from None
    if isinstance(term, Name):
        return float(encode_name(term.ident, tables, "term"))
    raise TypeError(f"not a leaf term: {term!r}")


def type_value(typ: TermAst, tree: TermTree, tables: AssignmentTable) -> float:
    """Value of the type component of a term-type node.

    Sorts and variables encode directly.  Other type expressions resolve via
    the canonical-form table; a missing entry falls back to the value of the
    type's leading name so first-round vectors stay total.
    """
    if isinstance(typ, Sort):
        return float(encode_sort(typ))
    if isinstance(typ, Var):
        try:
            return float(tree.var_order[typ.ident])
        except KeyError:
            raise VariableNotFound(typ.ident) from None
    key = canonical_type_key(typ, tree.var_order)
    if key in tables.type_values:
        return tables.type_values[key]
    for name in iter_names(typ):
        return float(encode_name(name.ident, tables, "term"))
    return 0.0


def node_term_value(node: TreeNode, tree: TermTree, tables: AssignmentTable) -> float:
    if isinstance(node, GallinaNode):
        return float(encode_gallina(node.token))
    return term_value(node.term, tree, tables)


def term_feature_matrix(
    tree: TermTree, tables: AssignmentTable, source_name: str = ""
) -> TermFeatureMatrix:
    """Build the term tree matrix: one (term, type, parent index) triple per node.

    Keyword-token nodes yield (gallina value, -1, parent index); absent
    positions stay (0, 0, 0).  Accepts pruned or unpruned trees.
    """
    cells = [[ZERO_CELL for _ in range(MATRIX_SIZE)] for _ in range(MATRIX_SIZE)]
    for (depth, index), node in prune(tree, MATRIX_SIZE).nodes.items():
        p = float(node.parent_index)
        if isinstance(node, GallinaNode):
            cells[depth][index] = (float(encode_gallina(node.token)), -1.0, p)
        else:
            cells[depth][index] = (
                term_value(node.term, tree, tables),
                type_value(node.typ, tree, tables),
                p,
            )
    return TermFeatureMatrix(cells, source_name)


def flatten(matrix: TermFeatureMatrix) -> FeatureVector:
    """Row-major flattening, triple components inline: 100 cells -> 300 values."""
    values: list[float] = []
    for row in matrix.cells:
        for cell in row:
            values.extend(cell)
    return FeatureVector(values, matrix.source_name)


def unflatten(vector: FeatureVector) -> TermFeatureMatrix:
    if len(vector.values) != TERM_VECTOR_LENGTH:
        raise ValueError("not a term feature vector")
    cells = []
    it = iter(vector.values)
    for _ in range(MATRIX_SIZE):
        cells.append([(next(it), next(it), next(it)) for _ in range(MATRIX_SIZE)])
    return TermFeatureMatrix(cells, vector.object_id)
