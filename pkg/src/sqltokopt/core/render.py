"""Canonical compact rendering and node-level pruning."""
from __future__ import annotations

from typing import Iterable, List, Tuple

from sqltokopt.core.ast import AstNode
from sqltokopt.core.lexer import Dialect, would_merge

_TIGHT = frozenset({"Punct", "Operator"})

# Nodes whose children are operands; a parenthesised operand keeps its
# parentheses unless the operand is atomic.
_OPERATOR_PARENTS = frozenset(
    {"BinaryOp", "UnaryOp", "IsTest", "InTest", "Between", "Like", "Cast", "Attribute", "OuterJoin", "Quantified"}
)
_ATOMIC = frozenset(
    {
        "Identifier", "QuotedIdentifier", "Keyword", "String", "Number", "ColumnRef", "FuncCall", "Paren",
        "Subquery", "BindVar", "TypedLiteral", "Case", "CastCall", "Extract", "Star", "Window", "Tuple",
        "Param", "Exists",
    }
)
PRUNED_KINDS = frozenset({"Comment", "StorageClause"})


def join_compact(pieces: Iterable[Tuple[str, str]], dialect: Dialect = Dialect.ORACLE) -> str:
    """Join ``(leaf_kind, text)`` pairs with single spaces only where needed.

    A space is kept between two pieces unless one of them is punctuation or
    an operator; it is always kept when dropping it would re-lex differently.
    """
    out: List[str] = []
    prev_kind = None
    ctx: List[str] = []
    for kind, text in pieces:
        if out:
            context = "".join(ctx[-2:])
            if (prev_kind not in _TIGHT and kind not in _TIGHT) or would_merge(context, text, dialect):
                out.append(" ")
                ctx.append(" ")
        out.append(text)
        ctx.append(text)
        if len(ctx) > 4:
            del ctx[:-4]
        prev_kind = kind
    return "".join(out)


def _pieces(n: AstNode, dialect: Dialect):
    if n.kind == "DollarBody":
        tag = n.children[0].leaf_text
        inner = render(n.children[1], Dialect.POSTGRES) if len(n.children) == 3 else ""
        yield "String", f"{tag}{inner}{tag}"
        return
    if n.is_leaf:
        yield n.kind, n.leaf_text
        return
    for c in n.children:
        yield from _pieces(c, dialect)


def render(ast: AstNode, dialect: Dialect = Dialect.ORACLE) -> str:
    """Serialize a tree to its canonical compact text."""
    return join_compact(_pieces(ast, dialect), dialect)


def _prune(n: AstNode, parent_kind: str) -> AstNode:
    if n.is_leaf:
        return n
    children = []
    for c in n.children:
        if c.kind in PRUNED_KINDS:
            continue
        children.append(_prune(c, n.kind))
    n = n.with_children(children)
    if n.kind == "Paren" and len(n.children) == 3:
        inner = n.children[1]
        if inner.kind in _ATOMIC or parent_kind not in _OPERATOR_PARENTS:
            return inner
    return n


def prune_nodes(ast: AstNode) -> AstNode:
    """Drop comment and storage-clause nodes and redundant parentheses."""
    return _prune(ast, "")
