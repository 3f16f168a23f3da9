import pytest

from proofscope import termfeatures
from proofscope.encoders import AssignmentTable, encode_gallina, encode_sort
from proofscope.errors import UnassignedName
from proofscope.syntax import Sort, parse
from proofscope.termfeatures import (
    FeatureVector,
    TERM_VECTOR_LENGTH,
    ZERO_CELL,
    flatten,
    term_feature_matrix,
    unflatten,
)
from proofscope.termtree import TypingEnv, build_term_tree

from conftest import alpha_variant, generate_distinct_terms
from proofscope import recurrent, syntax


class TestTable1Matrix:
    def test_nonzero_positions(self, fig1_tree, fig1_tables):
        matrix = term_feature_matrix(fig1_tree, fig1_tables)
        assert matrix.nonzero_positions() == [
            (0, 0), (1, 0), (1, 1), (1, 2), (2, 0), (3, 0), (3, 1),
        ]

    def test_gallina_cell(self, fig1_tree, fig1_tables):
        matrix = term_feature_matrix(fig1_tree, fig1_tables)
        assert matrix.cell(0, 0) == (float(encode_gallina("forall")), -1.0, -1.0)
        assert matrix.cell(0, 0) == (-1.1, -1.0, -1.0)

    def test_term_type_cells_match_encoders(self, fig1_tree, fig1_tables):
        matrix = term_feature_matrix(fig1_tree, fig1_tables)
        tv, ty = fig1_tables.term_values, fig1_tables.type_values
        # bound variables inside type labels are keyed by their tree index
        assert matrix.cell(1, 0) == (1.0, ty["nat"], 0.0)
        assert matrix.cell(1, 1) == (2.0, ty["(even _i1)"], 0.0)
        assert matrix.cell(1, 2) == (tv["odd"], ty["(nat -> Prop)"], 0.0)
        assert matrix.cell(2, 0) == (tv["+"], ty["(nat -> (nat -> nat))"], 2.0)
        assert matrix.cell(3, 0) == (1.0, ty["nat"], 0.0)
        assert matrix.cell(3, 1) == (1_000_001.0, ty["nat"], 0.0)

    def test_parent_index_column(self, fig1_tree, fig1_tables):
        matrix = term_feature_matrix(fig1_tree, fig1_tables)
        parents = [matrix.cell(d, i)[2] for d, i in matrix.nonzero_positions()]
        assert parents == [-1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]


class TestCornerCases:
    def test_single_sort_node(self):
        tree = build_term_tree(Sort("Prop"), TypingEnv())
        matrix = term_feature_matrix(tree, AssignmentTable())
        assert matrix.cell(0, 0) == (
            float(encode_sort(Sort("Prop"))),
            float(encode_sort(Sort("Type", 0))),
            -1.0,
        )
        assert matrix.nonzero_positions() == [(0, 0)]

    def test_unassigned_term_name_propagates(self):
        tree = build_term_tree(parse("even 1"), TypingEnv())
        with pytest.raises(UnassignedName):
            term_feature_matrix(tree, AssignmentTable())

    def test_type_fallback_to_head_name(self):
        # `even 1` root node's type label (nat -> Prop) is absent from the
        # table, so the cell falls back to the head name value
        tree = build_term_tree(parse("even 1"), TypingEnv())
        tables = AssignmentTable({"even": 222.0, "nat": 200.0}, {}, 0)
        matrix = term_feature_matrix(tree, tables)
        assert matrix.cell(0, 0) == (222.0, 200.0, -1.0)

    def test_oversized_tree_is_pruned(self, fig1_tables):
        ast = parse("bigsum " + " ".join(str(i) for i in range(12)))
        tree = build_term_tree(ast, TypingEnv())
        matrix = term_feature_matrix(tree, fig1_tables)
        assert len(matrix.nonzero_positions()) == 11  # root + 10 leftmost args


class TestFlatten:
    def test_zero_matrix(self):
        matrix = termfeatures.TermFeatureMatrix(
            [[ZERO_CELL] * 10 for _ in range(10)]
        )
        vec = flatten(matrix)
        assert vec.values == [0.0] * TERM_VECTOR_LENGTH

    def test_row_major_order(self, fig1_tree, fig1_tables):
        matrix = term_feature_matrix(fig1_tree, fig1_tables)
        vec = flatten(matrix)
        assert len(vec.values) == 300
        assert tuple(vec.values[0:3]) == matrix.cell(0, 0)
        # cell (d, i) lands at offset (d*10 + i) * 3
        assert tuple(vec.values[(1 * 10 + 2) * 3:(1 * 10 + 2) * 3 + 3]) == matrix.cell(1, 2)

    def test_single_cell_difference_is_local(self, fig1_tree, fig1_tables):
        a = term_feature_matrix(fig1_tree, fig1_tables)
        b = term_feature_matrix(fig1_tree, fig1_tables)
        b.cells[3][1] = (9.0, 9.0, 9.0)
        diffs = [
            i for i, (x, y) in enumerate(zip(flatten(a).values, flatten(b).values))
            if x != y
        ]
        assert len(diffs) <= 3
        assert all((1 * 10 + 2) * 3 <= 0 or i // 3 == 31 for i in diffs)

    def test_unflatten_roundtrip(self, fig1_tree, fig1_tables):
        matrix = term_feature_matrix(fig1_tree, fig1_tables, "fig1")
        again = unflatten(flatten(matrix))
        assert again.cells == matrix.cells
        assert again.source_name == "fig1"

    def test_vector_length_enforced(self):
        with pytest.raises(ValueError):
            FeatureVector([0.0] * 7)


class TestInjectivityProperties:
    def test_distinct_terms_distinct_vectors(self):
        terms = generate_distinct_terms(120, seed=11)
        corpus = syntax.parse_corpus("")
        tables = recurrent.bootstrap_tables(corpus, tuple(terms))
        env = TypingEnv()
        seen = {}
        for term in terms:
            tree = build_term_tree(term, env)
            vec = tuple(flatten(term_feature_matrix(tree, tables)).values)
            assert vec not in seen, f"collision with {seen.get(vec)}"
            seen[vec] = term

    def test_alpha_equivalent_terms_identical_vectors(self):
        corpus = syntax.parse_corpus("")
        env = TypingEnv()
        terms = [t for t in generate_distinct_terms(80, seed=13)]
        renamed = [alpha_variant(t) for t in terms]
        tables = recurrent.bootstrap_tables(corpus, tuple(terms) + tuple(renamed))
        for original, variant in zip(terms, renamed):
            v1 = flatten(term_feature_matrix(build_term_tree(original, env), tables))
            v2 = flatten(term_feature_matrix(build_term_tree(variant, env), tables))
            assert v1.values == v2.values
