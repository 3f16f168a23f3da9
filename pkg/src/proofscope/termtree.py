"""Term trees with Gallina and term-type nodes, addressed by depth and level index.

A tree node is either a Gallina node (keyword token such as forall, fun, let,
fix, -> or @) or a term-type node pairing a sort, name or variable with its
type.  The level index of a node counts left to right across the whole level,
so the pair (depth, level index) addresses nodes unambiguously; the matrix
layer uses exactly that addressing.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import syntax
from .errors import MissingType
from .syntax import (
    App,
    Arrow,
    Fix,
    Forall,
    Fun,
    Let,
    Name,
    Sort,
    TermAst,
    Var,
    builtin_types,
    free_vars,
    pretty,
)

Position = tuple[int, int]


@dataclass(eq=False)
class GallinaNode:
    token: str
    parent_index: int


@dataclass(eq=False)
class TermTypeNode:
    term: TermAst  # Sort | Name | Var
    typ: TermAst
    parent_index: int


TreeNode = GallinaNode | TermTypeNode


class TypingEnv:
    """Declared types for global names; binder types are threaded during builds."""

    def __init__(self, names: dict[str, TermAst] | None = None):
        self.names: dict[str, TermAst] = dict(builtin_types())
        if names:
            self.names.update(names)

    @classmethod
    def for_corpus(cls, corpus: syntax.Corpus) -> "TypingEnv":
        return cls({d.name: d.declared_type for d in corpus.definitions})

    def lookup(self, name: str) -> TermAst:
        if name.isdigit():
            return Name("nat")
        try:
            return self.names[name]
        except KeyError:
            raise MissingType(name) from None


class _Raw:
    __slots__ = ("node", "children")

    def __init__(self, node: TreeNode, children: list["_Raw"]):
        self.node = node
        self.children = children


class _Uniquifier:
    """Rename binding sites so no two distinct sites share a name.

    User names are kept when unused; colliding sites get reserved `_v<k>`
    names, which the lexer cannot produce as variables.  This makes the
    name-based variable numbering a numbering of binding sites, so vectors
    stay identical under alpha-renaming even when the source reuses names.
    """

    def __init__(self, used: set[str]):
        self.used = set(used)
        self.counter = 0

    def fresh(self, name: str) -> str:
        if name not in self.used:
            self.used.add(name)
            return name
        while True:
            candidate = f"_v{self.counter}"
            self.counter += 1
            if candidate not in self.used:
                self.used.add(candidate)
                return candidate

    def walk(self, t: TermAst, mapping: dict[str, str]) -> TermAst:
        if isinstance(t, Var):
            return Var(mapping.get(t.ident, t.ident))
        if isinstance(t, (Sort, Name)):
            return t
        if isinstance(t, (Forall, Fun)):
            m = dict(mapping)
            binders = []
            for v, ty in t.binders:
                ty2 = self.walk(ty, m)
                nv = self.fresh(v)
                m[v] = nv
                binders.append((nv, ty2))
            return type(t)(tuple(binders), self.walk(t.body, m))
        if isinstance(t, Arrow):
            return Arrow(self.walk(t.domain, mapping), self.walk(t.codomain, mapping))
        if isinstance(t, App):
            return App(
                self.walk(t.head, mapping),
                tuple(self.walk(a, mapping) for a in t.args),
            )
        if isinstance(t, Let):
            typ = self.walk(t.typ, mapping)
            bound = self.walk(t.bound, mapping)
            m = dict(mapping)
            nv = self.fresh(t.var)
            m[t.var] = nv
            return Let(nv, typ, bound, self.walk(t.body, m))
        if isinstance(t, Fix):
            v, ty = t.binder
            ty2 = self.walk(ty, mapping)
            m = dict(mapping)
            nx = self.fresh(v)
            m[v] = nx
            ret = self.walk(t.ret, m)
            nf = self.fresh(t.name)
            m[t.name] = nf
            return Fix(nf, (nx, ty2), ret, self.walk(t.body, m))
        raise TypeError(f"not a TermAst: {t!r}")


def uniquify_binders(ast: TermAst, reserved: set[str] = frozenset()) -> TermAst:
    return _Uniquifier(free_vars(ast) | set(reserved)).walk(ast, {})


def _sort_of(s: Sort) -> Sort:
    return Sort("Type", s.level + 1) if s.tier == "Type" else Sort("Type", 0)


def _build(ast: TermAst, env: TypingEnv, scope: dict[str, TermAst]) -> _Raw:
    if isinstance(ast, Sort):
        return _Raw(TermTypeNode(ast, _sort_of(ast), 0), [])
    if isinstance(ast, Name):
        return _Raw(TermTypeNode(ast, env.lookup(ast.ident), 0), [])
    if isinstance(ast, Var):
        if ast.ident not in scope:
            raise MissingType(ast.ident)
        return _Raw(TermTypeNode(ast, scope[ast.ident], 0), [])
    if isinstance(ast, (Forall, Fun)):
        token = "forall" if isinstance(ast, Forall) else "fun"
        children = []
        inner = dict(scope)
        for v, ty in ast.binders:
            children.append(_Raw(TermTypeNode(Var(v), ty, 0), []))
            inner = dict(inner)
            inner[v] = ty
        children.append(_build(ast.body, env, inner))
        return _Raw(GallinaNode(token, 0), children)
    if isinstance(ast, Arrow):
        return _Raw(
            GallinaNode("->", 0),
            [_build(ast.domain, env, scope), _build(ast.codomain, env, scope)],
        )
    if isinstance(ast, App):
        if isinstance(ast.head, Name):
            head_node = TermTypeNode(ast.head, env.lookup(ast.head.ident), 0)
            return _Raw(head_node, [_build(a, env, scope) for a in ast.args])
        children = [_build(ast.head, env, scope)]
        children.extend(_build(a, env, scope) for a in ast.args)
        return _Raw(GallinaNode("@", 0), children)
    if isinstance(ast, Let):
        inner = dict(scope)
        inner[ast.var] = ast.typ
        return _Raw(
            GallinaNode("let", 0),
            [
                _Raw(TermTypeNode(Var(ast.var), ast.typ, 0), []),
                _build(ast.bound, env, scope),
                _build(ast.body, env, inner),
            ],
        )
    if isinstance(ast, Fix):
        v, ty = ast.binder
        fix_type = Arrow(ty, ast.ret)
        inner = dict(scope)
        inner[ast.name] = fix_type
        inner[v] = ty
        return _Raw(
            GallinaNode("fix", 0),
            [
                _Raw(TermTypeNode(Var(ast.name), fix_type, 0), []),
                _Raw(TermTypeNode(Var(v), ty, 0), []),
                _build(ast.body, env, inner),
            ],
        )
    raise TypeError(f"not a TermAst: {ast!r}")


def _ast_vars(t: TermAst):
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            yield node.ident
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


def _variable_order(root: _Raw) -> dict[str, int]:
    # depth-first pre-order; within a node the term label precedes the type label
    order: dict[str, int] = {}

    def record(ident: str):
        if ident not in order:
            order[ident] = len(order) + 1

    def walk(raw: _Raw):
        node = raw.node
        if isinstance(node, TermTypeNode):
            if isinstance(node.term, Var):
                record(node.term.ident)
            for ident in _ast_vars(node.typ):
                record(ident)
        for child in raw.children:
            walk(child)

    walk(root)
    return order


class TermTree:
    """Immutable tree addressed by (depth, level index)."""

    def __init__(
        self,
        nodes: dict[Position, TreeNode],
        var_order: dict[str, int],
        free_bindings: dict[str, TermAst] | None = None,
    ):
        self.nodes = nodes
        self.var_order = var_order
        self.free_bindings = dict(free_bindings or {})

    def root(self) -> TreeNode:
        return self.nodes[(0, 0)]

    def children(self, pos: Position) -> list[tuple[Position, TreeNode]]:
        depth, index = pos
        return [
            ((depth + 1, j), node)
            for (d, j), node in self.nodes.items()
            if d == depth + 1 and node.parent_index == index
        ]

    def level(self, depth: int) -> list[tuple[Position, TreeNode]]:
        return [(pos, node) for pos, node in self.nodes.items() if pos[0] == depth]

    def level_order(self):
        """Yield (position, node) by depth, then level index."""
        for pos in sorted(self.nodes):
            yield pos, self.nodes[pos]

    @property
    def max_depth(self) -> int:
        return max(d for d, _ in self.nodes)

    def width(self, depth: int) -> int:
        return sum(1 for d, _ in self.nodes if d == depth)


def build_term_tree(
    ast: TermAst,
    env: TypingEnv,
    initial_bindings: dict[str, TermAst] | None = None,
) -> TermTree:
    """Build the full (unpruned) term tree of a term.

    initial_bindings types any free variables of the term, used when a type
    expression is lifted out of its binding context and rebuilt standalone.
    Binding sites are renamed apart first, so variable numbering and type
    keys depend only on the term's alpha-equivalence class.
    """
    bindings = dict(initial_bindings or {})
    ast = uniquify_binders(ast, set(bindings))
    root = _build(ast, env, bindings)
    var_order = _variable_order(root)

    nodes: dict[Position, TreeNode] = {}
    level: list[tuple[_Raw, int]] = [(root, -1)]
    depth = 0
    while level:
        next_level = []
        for index, (raw, parent_index) in enumerate(level):
            raw.node.parent_index = parent_index
            nodes[(depth, index)] = raw.node
            for child in raw.children:
                next_level.append((child, index))
        level = next_level
        depth += 1
    return TermTree(nodes, var_order, bindings)


def node_position(tree: TermTree) -> dict[TreeNode, Position]:
    """Map each node object to its (depth, level index) address."""
    return {node: pos for pos, node in tree.nodes.items()}


def prune(tree: TermTree, size: int = 10) -> TermTree:
    """Keep only nodes with depth and level index below `size`."""
    kept = {
        pos: node
        for pos, node in tree.nodes.items()
        if pos[0] < size and pos[1] < size
    }
    return TermTree(kept, tree.var_order, tree.free_bindings)


class _LabelCanon:
    """Rewrite a type label into an alpha-invariant spelling.

    Variables bound outside the label become `_i<tree index>`; binders inside
    the label become `_b0`, `_b1`, ... in traversal order.  Unindexed free
    variables (standalone argument types) keep their names.
    """

    def __init__(self, var_order: dict[str, int]):
        self.var_order = var_order
        self.counter = 0

    def walk(self, t: TermAst, mapping: dict[str, str]) -> TermAst:
        if isinstance(t, Var):
            if t.ident in mapping:
                return Var(mapping[t.ident])
            idx = self.var_order.get(t.ident)
            return Var(f"_i{idx}") if idx is not None else t
        if isinstance(t, (Sort, Name)):
            return t
        if isinstance(t, (Forall, Fun)):
            m = dict(mapping)
            binders = []
            for v, ty in t.binders:
                ty2 = self.walk(ty, m)
                nv = f"_b{self.counter}"
                self.counter += 1
                m[v] = nv
                binders.append((nv, ty2))
            return type(t)(tuple(binders), self.walk(t.body, m))
        if isinstance(t, Arrow):
            return Arrow(self.walk(t.domain, mapping), self.walk(t.codomain, mapping))
        if isinstance(t, App):
            return App(
                self.walk(t.head, mapping),
                tuple(self.walk(a, mapping) for a in t.args),
            )
        if isinstance(t, Let):
            typ = self.walk(t.typ, mapping)
            bound = self.walk(t.bound, mapping)
            m = dict(mapping)
            nv = f"_b{self.counter}"
            self.counter += 1
            m[t.var] = nv
            return Let(nv, typ, bound, self.walk(t.body, m))
        if isinstance(t, Fix):
            v, ty = t.binder
            ty2 = self.walk(ty, mapping)
            m = dict(mapping)
            nx = f"_b{self.counter}"
            self.counter += 1
            m[v] = nx
            ret = self.walk(t.ret, m)
            nf = f"_b{self.counter}"
            self.counter += 1
            m[t.name] = nf
            return Fix(nf, (nx, ty2), ret, self.walk(t.body, m))
        raise TypeError(f"not a TermAst: {t!r}")


def canonical_type_key(typ: TermAst, var_order: dict[str, int]) -> str:
    return pretty(_LabelCanon(var_order).walk(typ, {}))
