"""Detection of Oracle physical-storage clauses (TABLESPACE, STORAGE, ...)."""
from __future__ import annotations

from typing import List, Sequence

from sqltokopt.core.lexer import Token, TokenKind

_WITH_NUMBER = frozenset({"PCTFREE", "PCTUSED", "INITRANS", "MAXTRANS"})
_BARE = frozenset({"LOGGING", "NOLOGGING", "NOCOMPRESS", "NOCACHE"})
_GUARD = frozenset({"(", ",", "."})

PHYSICAL_KEYWORDS = _WITH_NUMBER | _BARE | {"TABLESPACE", "STORAGE", "COMPRESS", "CACHE"}


def _clause_length(sig: Sequence[Token], i: int) -> int:
    """Number of significant tokens in the clause starting at *i* (0 if none)."""
    tok = sig[i]
    word = tok.upper
    nxt = sig[i + 1] if i + 1 < len(sig) else None
    if word == "TABLESPACE":
        if nxt is not None and (nxt.kind.is_word or nxt.kind is TokenKind.QUOTED_IDENTIFIER):
            return 2
        return 0
    if word == "STORAGE":
        if nxt is None or nxt.text != "(":
            return 0
        depth = 0
        for j in range(i + 1, len(sig)):
            if sig[j].text == "(":
                depth += 1
            elif sig[j].text == ")":
                depth -= 1
                if depth == 0:
                    return j - i + 1
        return 0
    if word in _WITH_NUMBER:
        return 2 if nxt is not None and nxt.kind is TokenKind.NUMBER else 0
    if word in _BARE:
        return 1
    if word == "COMPRESS":
        return 2 if nxt is not None and nxt.kind is TokenKind.NUMBER else 1
    if word == "CACHE":
        return 0 if nxt is not None and nxt.kind is TokenKind.NUMBER else 1
    return 0


def find_physical_clauses(sig: Sequence[Token]) -> List[range]:
    """Ranges (over *sig*, a trivia-free token list) of removable clauses.

    Only CREATE/ALTER statements are scanned, and a clause keyword directly
    after ``(``, ``,`` or ``.`` is treated as a name, not a clause.
    """
    out: List[range] = []
    ddl = False
    at_start = True
    i = 0
    n = len(sig)
    while i < n:
        tok = sig[i]
        if tok.text == ";":
            at_start = True
            ddl = False
            i += 1
            continue
        if at_start:
            if tok.text == "/":
                i += 1
                continue
            ddl = tok.is_kw("CREATE", "ALTER")
            at_start = False
            i += 1
            continue
        if ddl and tok.kind.is_word and tok.upper in PHYSICAL_KEYWORDS:
            prev = sig[i - 1].text if i > 0 else ""
            if prev not in _GUARD:
                length = _clause_length(sig, i)
                if length:
                    out.append(range(i, i + length))
                    i += length
                    continue
        i += 1
    return out
