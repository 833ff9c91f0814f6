"""Token-level strategies: pruning, minification, quote refactoring, DSL."""
from __future__ import annotations

import re
from typing import List, Optional, Sequence, Tuple

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.keywords import is_reserved
from sqltokopt.core.lexer import Dialect, Token, TokenKind, lex, significant, would_merge
from sqltokopt.core.physical import find_physical_clauses
from sqltokopt.errors import ReplacementCollision
from sqltokopt.strategies.base import (
    DEFAULT_DICTIONARY,
    OptimizedContext,
    StrategyConfig,
    StrategyId,
    SubstitutionDictionary,
)

_TIGHT = frozenset({TokenKind.PUNCT, TokenKind.OPERATOR})
_PLAIN_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_$#]*\Z")

# (kind, text, whitespace-before-in-source)
Piece = Tuple[Optional[TokenKind], str, bool]


def join_pieces(pieces: Sequence[Piece], dialect: Dialect = Dialect.ORACLE) -> str:
    """Join pieces, keeping one space only where the source had whitespace
    between two non-punctuation tokens, or where omitting it would re-lex."""
    out: List[str] = []
    prev_kind = None
    for kind, text, spaced in pieces:
        if out:
            tight = prev_kind in _TIGHT or kind in _TIGHT
            context = "".join(out[-3:])
            if (spaced and not tight) or would_merge(context, text, dialect):
                out.append(" ")
        out.append(text)
        prev_kind = kind
    return "".join(out)


def _pieces(tokens: Sequence[Token]) -> List[Piece]:
    out: List[Piece] = []
    spaced = False
    for t in tokens:
        if t.kind.is_trivia:
            spaced = True
            continue
        out.append((t.kind, t.text, spaced))
        spaced = False
    return out


def prune_text(text: str, dialect: Dialect = Dialect.ORACLE) -> str:
    """Drop comments and physical-storage clauses, leaving other bytes alone.

    Each removed token takes the whitespace directly after it along; a space
    is put back only if the neighbours would otherwise fuse.
    """
    tokens = lex(text, dialect)
    sig_index = [i for i, t in enumerate(tokens) if not t.kind.is_trivia]
    removed = set(i for i, t in enumerate(tokens) if t.kind.is_comment)
    if dialect is Dialect.ORACLE:
        sig = [tokens[i] for i in sig_index]
        for r in find_physical_clauses(sig):
            lo, hi = sig_index[r.start], sig_index[r.stop - 1]
            removed.update(i for i in range(lo, hi + 1))
    if not removed:
        return text
    for i in sorted(removed):
        j = i + 1
        if j < len(tokens) and tokens[j].kind is TokenKind.WHITESPACE and j not in removed:
            removed.add(j)
    out: List[str] = []
    gap = False
    last_kept = -1
    for i, t in enumerate(tokens):
        if i in removed:
            gap = True
            continue
        if gap and out and t.kind is not TokenKind.WHITESPACE and not out[-1][-1:].isspace():
            if would_merge("".join(out[-3:]), t.text, dialect):
                out.append(" ")
        out.append(t.text)
        gap = False
        if t.kind is not TokenKind.WHITESPACE:
            last_kept = i
    result = "".join(out)
    if any(i > last_kept for i in removed):
        result = result.rstrip()
    return result


def minify_text(text: str, dialect: Dialect = Dialect.ORACLE) -> str:
    return join_pieces(_pieces(lex(prune_text(text, dialect), dialect)), dialect)


def refactor_quotes_text(text: str, dialect: Dialect = Dialect.ORACLE) -> str:
    pieces = []
    for kind, tok, spaced in _pieces(lex(minify_text(text, dialect), dialect)):
        if kind is TokenKind.QUOTED_IDENTIFIER:
            inner = tok[1:-1]
            if _PLAIN_NAME.match(inner) and inner == inner.upper() and not is_reserved(inner):
                kind, tok = TokenKind.IDENTIFIER, inner
        pieces.append((kind, tok, spaced))
    return join_pieces(pieces, dialect)


def _key_tokens(keyword: str) -> List[str]:
    return [t.upper for t in significant(lex(keyword))]


def _occurs(needle: Sequence[str], hay: Sequence[Piece]) -> bool:
    n = len(needle)
    for i in range(len(hay) - n + 1):
        if all(hay[i + k][1].upper() == needle[k] for k in range(n)):
            return True
    return False


def dsl_compress_text(
    text: str, dictionary: SubstitutionDictionary = DEFAULT_DICTIONARY, dialect: Dialect = Dialect.ORACLE
) -> str:
    """Minify, then replace dictionary keywords, longest first.

    Only whole word-token sequences match; literals never do, and text
    produced by one replacement is not matched again.  A legend line naming
    the pairs that fired is prepended.
    """
    pieces = _pieces(lex(minify_text(text, dialect), dialect))
    for _, repl in dictionary:
        needle = [t.upper for t in significant(lex(repl, dialect))]
        if _occurs(needle, pieces):
            raise ReplacementCollision(repl)
    # Replacement output is tagged kind=None so later pairs skip it.
    fired = []
    for key, repl in dictionary:
        needle = _key_tokens(key)
        n = len(needle)
        out: List[Piece] = []
        i = 0
        hit = False
        while i < len(pieces):
            window = pieces[i:i + n]
            if len(window) == n and all(
                p[0] is not None and p[0].is_word and p[1].upper() == w for p, w in zip(window, needle)
            ):
                out.append((None, repl, pieces[i][2]))
                i += n
                hit = True
            else:
                out.append(pieces[i])
                i += 1
        pieces = out
        if hit:
            fired.append((key, repl))
    body = _join_dsl(pieces, dialect)
    if not fired:
        return body
    legend = "LEGEND " + ";".join(f"{k}={v}" for k, v in fired)
    return legend + "\n" + body


def _join_dsl(pieces: Sequence[Piece], dialect: Dialect) -> str:
    # Replacements end in punctuation, so they are treated as words here to
    # keep the space that separated the original keyword from its neighbours.
    return join_pieces([(k if k is not None else TokenKind.IDENTIFIER, t, s) for k, t, s in pieces], dialect)


def _ctx(text: str, sid: StrategyId, config: StrategyConfig, **kw) -> OptimizedContext:
    return OptimizedContext.build(text, sid, config.counter, **kw)


def apply_baseline(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    return _ctx(artifact.text, StrategyId.BASELINE, config)


def prune(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    return _ctx(prune_text(artifact.text, artifact.dialect), StrategyId.PRUNING, config)


def minify(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    return _ctx(minify_text(artifact.text, artifact.dialect), StrategyId.MINIFICATION, config)


def refactor_quotes(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    return _ctx(refactor_quotes_text(artifact.text, artifact.dialect), StrategyId.REFACTORING, config)


def dsl_compress(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    text = dsl_compress_text(artifact.text, config.dictionary, artifact.dialect)
    return _ctx(text, StrategyId.DSL, config)
