"""Lexing, parsing, rendering, token counting and profiling."""
from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.ast import AstNode, structurally_equal, subtree_fingerprints
from sqltokopt.core.counting import count_tokens
from sqltokopt.errors import EmptyArtifact, LexError, UnterminatedComment, UnterminatedString
from sqltokopt.core.lexer import Dialect, Token, TokenKind, lex
from sqltokopt.core.parser import ParseError, ParseFailure, is_valid, parse, parse_or_raise
from sqltokopt.core.profile import plsql_ratio
from sqltokopt.core.render import prune_nodes, render

__all__ = [
    "AstNode",
    "Dialect",
    "EmptyArtifact",
    "LexError",
    "ParseError",
    "ParseFailure",
    "SqlArtifact",
    "Token",
    "TokenKind",
    "UnterminatedComment",
    "UnterminatedString",
    "count_tokens",
    "is_valid",
    "lex",
    "parse",
    "parse_or_raise",
    "plsql_ratio",
    "prune_nodes",
    "render",
    "structurally_equal",
    "subtree_fingerprints",
]
