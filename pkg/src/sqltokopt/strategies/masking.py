"""Identifier masking: swap user identifiers for short aliases and back."""
from __future__ import annotations

import re
import warnings
from typing import List, Optional, Tuple

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.lexer import Dialect, TokenKind, lex
from sqltokopt.errors import LexError, NoMaskableIdentifiers
from sqltokopt.strategies.base import AliasMap, OptimizedContext, StrategyConfig, StrategyId
from sqltokopt.strategies.textual import minify_text


def _fresh_prefix(words: List[str], base: str) -> str:
    prefix = base
    while True:
        pat = re.compile(rf"{re.escape(prefix)}_[0-9]+\Z", re.IGNORECASE)
        if not any(pat.match(w) for w in words):
            return prefix
        prefix += base[-1]


def mask_text(text: str, prefix: str = "X", dialect: Dialect = Dialect.ORACLE) -> Tuple[str, AliasMap]:
    """Minify, then replace each distinct non-reserved word with an alias.

    Aliases are numbered by identifier length (longest first), ties broken
    lexicographically, so the mapping is deterministic.
    """
    minified = minify_text(text, dialect)
    tokens = lex(minified, dialect)
    words = [t.text for t in tokens if t.kind.is_word]
    prefix = _fresh_prefix(words, prefix)
    ids = sorted({t.text for t in tokens if t.kind is TokenKind.IDENTIFIER}, key=lambda w: (-len(w), w))
    if not ids:
        warnings.warn(NoMaskableIdentifiers("no maskable identifiers"), stacklevel=2)
        return minified, AliasMap(prefix)
    entries = tuple((w, f"{prefix}_{i}") for i, w in enumerate(ids, 1))
    forward = dict(entries)
    out = "".join(forward.get(t.text, t.text) if t.kind is TokenKind.IDENTIFIER else t.text for t in tokens)
    return out, AliasMap(prefix, entries)


def mask_identifiers(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    text, amap = mask_text(artifact.text, config.alias_prefix, artifact.dialect)
    return OptimizedContext.build(text, StrategyId.IDENTIFIER_MASKING, config.counter, alias_map=amap)


def demask_with_warnings(generated: str, amap: AliasMap) -> Tuple[str, List[str]]:
    """Restore identifiers; returns the text and any alias-shaped words not in the map.

    Aliases match whole word tokens case-insensitively; string literals,
    quoted identifiers and comments are left alone.  The Oracle lexer is
    used so that words inside PostgreSQL ``$$`` bodies are visible.
    """
    back = {a.upper(): o for o, a in amap.entries}
    shape = re.compile(rf"{re.escape(amap.prefix)}_[0-9]+\Z", re.IGNORECASE)
    unknown: List[str] = []
    try:
        tokens = lex(generated, Dialect.ORACLE)
    except LexError:
        return _demask_regex(generated, back, shape, unknown), unknown
    out = []
    for t in tokens:
        if t.kind.is_word:
            key = t.text.upper()
            if key in back:
                out.append(back[key])
                continue
            if shape.match(t.text) and t.text not in unknown:
                unknown.append(t.text)
        out.append(t.text)
    return "".join(out), unknown


def _demask_regex(text: str, back: dict, shape, unknown: List[str]) -> str:
    # Unlexable model output: replace outside single-quoted runs only.
    parts = re.split(r"('(?:[^']|'')*'?)", text)
    for i in range(0, len(parts), 2):
        def sub(m):
            w = m.group(0)
            if w.upper() in back:
                return back[w.upper()]
            if shape.match(w) and w not in unknown:
                unknown.append(w)
            return w
        parts[i] = re.sub(r"\b\w+\b", sub, parts[i])
    return "".join(parts)


def demask(generated: str, amap: Optional[AliasMap]) -> str:
    if not amap:
        return generated
    return demask_with_warnings(generated, amap)[0]
