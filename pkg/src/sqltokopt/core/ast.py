"""Immutable syntax tree nodes, structural equality and fingerprints."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

LEAF_KINDS = frozenset(
    {"Keyword", "Identifier", "QuotedIdentifier", "String", "Number", "Operator", "Punct", "DollarQuote"}
)


@dataclass(frozen=True)
class AstNode:
    """A tree node; equality is structural over (kind, leaf_text, children)."""

    kind: str
    children: Tuple["AstNode", ...] = ()
    leaf_text: Optional[str] = None
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.kind, self.leaf_text, self.children)))

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_leaf(self) -> bool:
        return self.leaf_text is not None

    def walk(self) -> Iterator["AstNode"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> Iterator["AstNode"]:
        return (n for n in self.walk() if n.is_leaf)

    def find(self, kind: str) -> Iterator["AstNode"]:
        return (n for n in self.walk() if n.kind == kind)

    def first_child(self, kind: str) -> Optional["AstNode"]:
        for c in self.children:
            if c.kind == kind:
                return c
        return None

    def node_count(self) -> int:
        return sum(1 for _ in self.walk())

    def with_children(self, children) -> "AstNode":
        return AstNode(self.kind, tuple(children), self.leaf_text)


def leaf(kind: str, text: str) -> AstNode:
    return AstNode(kind, (), text)


def node(kind: str, *children: AstNode) -> AstNode:
    return AstNode(kind, tuple(children))


def structurally_equal(a: AstNode, b: AstNode) -> bool:
    return a == b


def fingerprint(n: AstNode, fold_identifiers: bool = False) -> str:
    seq = ",".join(c.kind for c in n.children)
    fp = f"{n.kind}({seq})"
    if n.is_leaf:
        text = n.leaf_text
        if fold_identifiers and n.kind == "Identifier":
            text = text.lower()
        fp += "|" + text
    return fp


def subtree_fingerprints(root: AstNode, fold_identifiers: bool = False) -> Counter:
    """One fingerprint per node, as a multiset."""
    return Counter(fingerprint(n, fold_identifiers) for n in root.walk())
