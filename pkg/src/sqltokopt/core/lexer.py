"""Lossless lexer for the Oracle and PostgreSQL subsets."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Tuple

from sqltokopt import _scan, kernels
from sqltokopt.core.keywords import reserved_words


class Dialect(enum.Enum):
    ORACLE = "oracle"
    POSTGRES = "postgres"


class TokenKind(enum.Enum):
    KEYWORD = "Keyword"
    IDENTIFIER = "Identifier"
    QUOTED_IDENTIFIER = "QuotedIdentifier"
    STRING = "StringLiteral"
    NUMBER = "Number"
    OPERATOR = "Operator"
    PUNCT = "Punct"
    LINE_COMMENT = "LineComment"
    BLOCK_COMMENT = "BlockComment"
    WHITESPACE = "Whitespace"

    @property
    def is_trivia(self) -> bool:
        return self in _TRIVIA

    @property
    def is_comment(self) -> bool:
        return self is TokenKind.LINE_COMMENT or self is TokenKind.BLOCK_COMMENT

    @property
    def is_word(self) -> bool:
        return self is TokenKind.KEYWORD or self is TokenKind.IDENTIFIER


_TRIVIA = frozenset({TokenKind.WHITESPACE, TokenKind.LINE_COMMENT, TokenKind.BLOCK_COMMENT})

_KIND_CODES = {
    _scan.WS: TokenKind.WHITESPACE,
    _scan.QIDENT: TokenKind.QUOTED_IDENTIFIER,
    _scan.STRING: TokenKind.STRING,
    _scan.NUMBER: TokenKind.NUMBER,
    _scan.OPERATOR: TokenKind.OPERATOR,
    _scan.PUNCT: TokenKind.PUNCT,
    _scan.LINE_COMMENT: TokenKind.LINE_COMMENT,
    _scan.BLOCK_COMMENT: TokenKind.BLOCK_COMMENT,
}

_DIALECT_CODES = {Dialect.ORACLE: _scan.ORACLE, Dialect.POSTGRES: _scan.POSTGRES}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: Tuple[int, int]

    @property
    def upper(self) -> str:
        return self.text.upper()

    def is_kw(self, *words: str) -> bool:
        return self.kind.is_word and self.text.upper() in words


def lex(text: str, dialect: Dialect = Dialect.ORACLE) -> List[Token]:
    """Tokenize *text*; joining the token texts reproduces it exactly.

    Raises UnterminatedString / UnterminatedComment with the offset of the
    opening delimiter.
    """
    reserved = reserved_words()
    tokens = []
    for code, start, end in kernels.scan(text, _DIALECT_CODES[dialect]):
        piece = text[start:end]
        if code == _scan.WORD:
            kind = TokenKind.KEYWORD if piece.upper() in reserved else TokenKind.IDENTIFIER
        else:
            kind = _KIND_CODES[code]
        tokens.append(Token(kind, piece, (start, end)))
    return tokens


def significant(tokens: List[Token]) -> List[Token]:
    return [t for t in tokens if not t.kind.is_trivia]


def would_merge(left: str, right: str, dialect: Dialect = Dialect.ORACLE) -> bool:
    """True if writing *right* directly after *left* changes the lexing.

    *left* may hold several tokens of context (e.g. ``1.`` before ``5``).
    """
    if not left or not right:
        return False
    code = _DIALECT_CODES[dialect]
    try:
        alone = kernels.scan(left, code)
        extra = kernels.scan(right, code)
        joined = kernels.scan(left + right, code)
    except Exception:
        return True
    k = len(alone)
    shift = len(left)
    return joined[:k] != alone or joined[k:] != [(c, s + shift, e + shift) for c, s, e in extra]
