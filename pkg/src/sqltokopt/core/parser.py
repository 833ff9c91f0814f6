"""Recursive-descent parser for the Oracle / PostgreSQL subset.

The tree keeps keywords and punctuation as leaves, so rendering is an
in-order walk.  Comments never reach the tree; in the Oracle dialect the
removable physical-storage clauses are skipped the same way.  Anything the
grammar does not model becomes a flat ``Statement`` node, so only damaged
input (unbalanced parentheses, missing projections, stray tokens between
statements, unterminated literals) produces a :class:`ParseFailure`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Union

from sqltokopt.core.ast import AstNode, leaf
from sqltokopt.errors import LexError
from sqltokopt.core.lexer import Dialect, Token, TokenKind, lex, significant
from sqltokopt.core.physical import find_physical_clauses


@dataclass(frozen=True)
class ParseFailure:
    """Parse verdict for invalid input; data, not an exception."""

    offset: int
    expected: str
    found: str = ""

    def __str__(self) -> str:
        where = f" near {self.found!r}" if self.found else " at end of input"
        return f"expected {self.expected}{where} (offset {self.offset})"


class ParseError(Exception):
    def __init__(self, failure: ParseFailure):
        super().__init__(str(failure))
        self.failure = failure


ParseResult = Union[AstNode, ParseFailure]

# Keywords that can never begin a name inside an expression.
STRUCTURAL = frozenset(
    """
    SELECT FROM WHERE AND OR NOT IN IS BETWEEN LIKE THEN ELSE END WHEN CASE AS
    ON JOIN GROUP ORDER HAVING UNION INTERSECT MINUS EXCEPT INTO VALUES SET BY
    ASC DESC LIMIT OFFSET FETCH LOOP BEGIN DECLARE EXCEPTION IF ELSIF RETURN
    RETURNING USING WITH FOR INNER LEFT RIGHT FULL CROSS NATURAL OUTER CONNECT
    START DISTINCT ALL ESCAPE CREATE TABLE INSERT UPDATE DELETE WHILE EXIT
    CONTINUE RAISE OPEN CLOSE COMMIT ROLLBACK PROCEDURE FUNCTION PACKAGE TRIGGER
    VIEW INDEX SEQUENCE GRANT REVOKE DROP ALTER TRUNCATE NULL TRUE FALSE
    """.split()
)
# Structural words that are also callable, e.g. LEFT(s, 2) or REPLACE(s, 'a', 'b').
_CALLABLE = frozenset({"LEFT", "RIGHT", "REPLACE", "MOD", "TRUNCATE"})
_COMPARE = frozenset({"=", "<>", "!=", "^=", "<", ">", "<=", ">="})
_SET_OPS = frozenset({"UNION", "INTERSECT", "MINUS", "EXCEPT"})
_JOIN_WORDS = frozenset({"JOIN", "INNER", "LEFT", "RIGHT", "FULL", "CROSS", "NATURAL"})
_CURSOR_ATTRS = frozenset({"TYPE", "ROWTYPE", "FOUND", "NOTFOUND", "ROWCOUNT", "ISOPEN"})
_TYPE_SUFFIX = frozenset({"PRECISION", "VARYING", "RAW"})
_BLOCK_END = frozenset({"END", "EXCEPTION", "ELSIF", "ELSE", "WHEN"})


class _Fail(Exception):
    def __init__(self, pos: int, expected: str):
        super().__init__(expected)
        self.pos = pos
        self.expected = expected


_LEAF_KIND = {
    TokenKind.KEYWORD: "Keyword",
    TokenKind.IDENTIFIER: "Identifier",
    TokenKind.QUOTED_IDENTIFIER: "QuotedIdentifier",
    TokenKind.STRING: "String",
    TokenKind.NUMBER: "Number",
    TokenKind.OPERATOR: "Operator",
    TokenKind.PUNCT: "Punct",
}


def _dollar_parts(text: str):
    """Split ``$tag$body$tag$`` into (tag, body), or None for other strings."""
    if not text.startswith("$"):
        return None
    end = text.index("$", 1) + 1
    tag = text[:end]
    return tag, text[end:-len(tag)]


class _Parser:
    def __init__(self, tokens: List[Token], dialect: Dialect, text_len: int, body: bool = False):
        self.toks = tokens
        self.dialect = dialect
        # PostgreSQL has no top-level PL/SQL; anonymous blocks only inside $$ bodies.
        self.pg = dialect is Dialect.POSTGRES
        self.body = body
        self.pos = 0
        self.text_len = text_len

    # -- token helpers -------------------------------------------------
    def peek(self, k: int = 0) -> Optional[Token]:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def at_kw(self, *words: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.is_kw(*words)

    def at_text(self, *texts: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind is not TokenKind.STRING and t.text in texts

    def fail(self, expected: str):
        raise _Fail(self.pos, expected)

    def take(self) -> AstNode:
        t = self.peek()
        if t is None:
            self.fail("more input")
        self.pos += 1
        if t.kind is TokenKind.KEYWORD:
            return leaf("Keyword", t.text.upper())
        return leaf(_LEAF_KIND[t.kind], t.text)

    def kw(self, *words: str) -> AstNode:
        if not self.at_kw(*words):
            self.fail(" or ".join(words))
        return self.take()

    def punct(self, text: str) -> AstNode:
        if not self.at_text(text):
            self.fail(repr(text))
        return self.take()

    def opt_kw(self, out: list, *words: str) -> bool:
        if self.at_kw(*words):
            out.append(self.take())
            return True
        return False

    def attempt(self, fn: Callable[[], AstNode]) -> Optional[AstNode]:
        saved = self.pos
        try:
            return fn()
        except _Fail:
            self.pos = saved
            return None

    def is_name_token(self, k: int = 0) -> bool:
        t = self.peek(k)
        if t is None:
            return False
        if t.kind in (TokenKind.IDENTIFIER, TokenKind.QUOTED_IDENTIFIER):
            return True
        if t.kind is TokenKind.KEYWORD:
            if t.upper not in STRUCTURAL:
                return True
            return t.upper in _CALLABLE and self.at_text("(", k=k + 1)
        return False

    def flat_until(self, kind: str, stop: Callable[[], bool], out: Optional[list] = None) -> AstNode:
        """Consume balanced tokens until *stop* holds at paren depth 0."""
        items = out if out is not None else []
        depth = 0
        while not self.at_end():
            if depth == 0 and stop():
                break
            t = self.peek()
            if t.kind is TokenKind.PUNCT and t.text == "(":
                depth += 1
            elif t.kind is TokenKind.PUNCT and t.text == ")":
                if depth == 0:
                    break
                depth -= 1
            items.append(self.take())
        if depth:
            self.fail("')'")
        return AstNode(kind, tuple(items))

    def until_semicolon(self) -> bool:
        return self.at_text(";")

    def end_statement(self, items: list):
        if self.at_text(";"):
            items.append(self.take())

    # -- script ----------------------------------------------------------
    def script(self) -> AstNode:
        stmts = []
        while not self.at_end():
            if self.at_text(";"):
                self.pos += 1
                continue
            if self.dialect is Dialect.ORACLE and self.at_text("/"):
                self.pos += 1
                continue
            stmts.append(self.statement())
            terminated = self.toks[self.pos - 1].text == ";"
            if not terminated and not self.at_end() and not self.at_text(";"):
                if not (self.dialect is Dialect.ORACLE and self.at_text("/")):
                    self.fail("';'")
        if not stmts:
            self.fail("a statement")
        if len(stmts) == 1:
            return stmts[0]
        return AstNode("Script", tuple(stmts))

    def statement(self) -> AstNode:
        if self.at_kw("SELECT", "WITH") or (self.at_text("(") and self._paren_query_ahead()):
            return self._terminated("Select", self.query())
        if self.at_kw("INSERT"):
            return self._terminated("Insert", self.insert_body())
        if self.at_kw("UPDATE"):
            return self._terminated("Update", self.update_body())
        if self.at_kw("DELETE"):
            return self._terminated("Delete", self.delete_body())
        if self.at_kw("CREATE"):
            return self.create()
        if self.at_kw("DECLARE", "BEGIN") or self.at_text("<<"):
            if self.pg and not self.body:
                if self.at_kw("BEGIN") and (
                    self.at_text(";", k=1) or self.peek(1) is None
                    or self.peek(1).upper in ("TRANSACTION", "WORK", "ISOLATION", "READ")
                ):
                    return self.generic()
                self.fail("a statement (PL/SQL block outside a $$ body)")
            return self.block(top=True)
        if self.at_kw("DO") and self.peek(1) is not None and self.peek(1).kind is TokenKind.STRING:
            items = [self.take(), self.routine_body(self.take())]
            self.end_statement(items)
            return AstNode("Do", tuple(items))
        return self.generic()

    def _terminated(self, kind: str, body: AstNode) -> AstNode:
        items = list(body.children) if body.kind == kind else [body]
        self.end_statement(items)
        return AstNode(kind, tuple(items))

    def _paren_query_ahead(self) -> bool:
        k = 0
        while self.at_text("(", k=k):
            k += 1
        return self.at_kw("SELECT", "WITH", k=k)

    def generic(self) -> AstNode:
        if self.pg and not (self.peek() is not None and self.peek().kind.is_word):
            self.fail("a statement")
        items: list = []
        self.flat_until("Statement", self.until_semicolon, items)
        if not items:
            self.fail("a statement")
        self.end_statement(items)
        return AstNode("Statement", tuple(items))

    # -- queries ---------------------------------------------------------
    def query(self) -> AstNode:
        left = self.query_term()
        while self.at_kw(*_SET_OPS):
            items = [left, self.take()]
            self.opt_kw(items, "ALL")
            items.append(self.query_term())
            left = AstNode("SetOp", tuple(items))
        if left.kind == "SetOp" and self.at_kw("ORDER"):
            left = AstNode("SetOp", left.children + (self.order_by(),))
        return left

    def query_term(self) -> AstNode:
        if self.at_text("("):
            return AstNode("Subquery", (self.take(), self.query(), self.punct(")")))
        return self.select_core()

    def select_core(self) -> AstNode:
        items: list = []
        if self.at_kw("WITH"):
            items.append(self.with_clause())
        items.append(self.kw("SELECT"))
        self.opt_kw(items, "DISTINCT", "ALL", "UNIQUE")
        items.append(self.select_list())
        if self.at_kw("BULK"):
            items.append(AstNode("Bulk", (self.take(), self.kw("COLLECT"))))
        if self.at_kw("INTO"):
            items.append(self.into_clause())
        if self.at_kw("FROM"):
            items.append(self.from_clause())
        if self.at_kw("WHERE"):
            items.append(AstNode("Where", (self.take(), self.expr())))
        if self.at_kw("START") and self.at_kw("WITH", k=1):
            items.append(AstNode("StartWith", (self.take(), self.take(), self.expr())))
        if self.at_kw("CONNECT"):
            parts = [self.take(), self.kw("BY")]
            self.opt_kw(parts, "NOCYCLE")
            parts.append(self.expr())
            items.append(AstNode("ConnectBy", tuple(parts)))
        if self.at_kw("GROUP"):
            items.append(AstNode("GroupBy", (self.take(), self.kw("BY"), *self.expr_list())))
        if self.at_kw("HAVING"):
            items.append(AstNode("Having", (self.take(), self.expr())))
        if self.at_kw("ORDER"):
            items.append(self.order_by())
        if self.at_kw("LIMIT"):
            items.append(AstNode("Limit", (self.take(), self.expr())))
        if self.at_kw("OFFSET"):
            parts = [self.take(), self.expr()]
            if self.at_kw("ROWS") or (self.peek() is not None and self.peek().upper == "ROWS"):
                parts.append(self.take())
            items.append(AstNode("Offset", tuple(parts)))
        if self.at_kw("FETCH"):
            items.append(self.flat_until("Fetch", lambda: self.at_text(";") or self.at_kw("FOR", *_SET_OPS)))
        if self.at_kw("FOR") and self.at_kw("UPDATE", k=1):
            items.append(self.flat_until("ForUpdate", lambda: self.at_text(";") or self.at_kw(*_SET_OPS)))
        return AstNode("Select", tuple(items))

    def with_clause(self) -> AstNode:
        items = [self.take()]
        while True:
            cte = [self.name()]
            if self.at_text("("):
                cte.append(self.paren_names())
            cte.append(self.kw("AS"))
            cte.append(AstNode("Subquery", (self.punct("("), self.query(), self.punct(")"))))
            items.append(AstNode("Cte", tuple(cte)))
            if not self.at_text(","):
                break
            items.append(self.take())
        return AstNode("With", tuple(items))

    def select_list(self) -> AstNode:
        items = [self.select_item()]
        while self.at_text(","):
            items.append(self.take())
            items.append(self.select_item())
        return AstNode("SelectList", tuple(items))

    def select_item(self) -> AstNode:
        if self.at_text("*"):
            return AstNode("SelectItem", (leaf("Operator", self.take().leaf_text),))
        parts = [self.expr()]
        alias = self.opt_alias(allow_as=True)
        if alias is not None:
            parts.append(alias)
        return AstNode("SelectItem", tuple(parts))

    def opt_alias(self, allow_as: bool) -> Optional[AstNode]:
        if allow_as and self.at_kw("AS"):
            as_kw = self.take()
            if not (self.is_name_token() or (self.peek() is not None and self.peek().kind is TokenKind.KEYWORD)):
                self.fail("alias")
            return AstNode("Alias", (as_kw, self.take()))
        t = self.peek()
        if t is not None and t.kind in (TokenKind.IDENTIFIER, TokenKind.QUOTED_IDENTIFIER):
            return AstNode("Alias", (self.take(),))
        return None

    def into_clause(self) -> AstNode:
        items = [self.take(), self.expr()]
        while self.at_text(","):
            items.append(self.take())
            items.append(self.expr())
        return AstNode("Into", tuple(items))

    def from_clause(self) -> AstNode:
        items = [self.take(), self.from_item()]
        while self.at_text(","):
            items.append(self.take())
            items.append(self.from_item())
        return AstNode("From", tuple(items))

    def from_item(self) -> AstNode:
        left = self.table_ref()
        while self.at_kw(*_JOIN_WORDS):
            parts = [left]
            while self.at_kw("INNER", "LEFT", "RIGHT", "FULL", "CROSS", "NATURAL", "OUTER"):
                parts.append(self.take())
            parts.append(self.kw("JOIN"))
            parts.append(self.table_ref())
            if self.at_kw("ON"):
                parts.append(AstNode("On", (self.take(), self.expr())))
            elif self.at_kw("USING"):
                parts.append(AstNode("Using", (self.take(), self.paren_names())))
            left = AstNode("Join", tuple(parts))
        return left

    def table_ref(self) -> AstNode:
        if self.at_text("("):
            parts = [AstNode("Subquery", (self.take(), self.query(), self.punct(")")))]
        else:
            parts = [self.table_name()]
        alias = self.opt_alias(allow_as=True)
        if alias is not None:
            parts.append(alias)
        return AstNode("TableRef", tuple(parts))

    def table_name(self) -> AstNode:
        if not self.is_name_token():
            self.fail("table name")
        parts = [self.take()]
        while self.at_text(".") and self.is_name_token(1):
            parts.append(self.take())
            parts.append(self.take())
        if self.at_text("@") and self.is_name_token(1):
            parts.append(self.take())
            parts.append(self.take())
        return AstNode("TableName", tuple(parts))

    def name(self) -> AstNode:
        if not self.is_name_token():
            self.fail("name")
        return self.take()

    def dotted_name(self, kind: str = "Name") -> AstNode:
        parts = [self.name()]
        while self.at_text(".") and self.is_name_token(1):
            parts.append(self.take())
            parts.append(self.take())
        return AstNode(kind, tuple(parts))

    def paren_names(self) -> AstNode:
        items = [self.punct("(")]
        items.append(self.name())
        while self.at_text(","):
            items.append(self.take())
            items.append(self.name())
        items.append(self.punct(")"))
        return AstNode("NameList", tuple(items))

    def order_by(self) -> AstNode:
        items = [self.take(), self.kw("BY")]
        while True:
            item = [self.expr()]
            self.opt_kw(item, "ASC", "DESC")
            if self.at_kw("NULLS") or (self.peek() is not None and self.peek().upper == "NULLS"):
                item.append(self.take())
                item.append(self.take())
            items.append(AstNode("OrderItem", tuple(item)))
            if not self.at_text(","):
                break
            items.append(self.take())
        return AstNode("OrderBy", tuple(items))

    # -- DML ---------------------------------------------------------------
    def insert_body(self) -> AstNode:
        items = [self.take(), self.kw("INTO"), self.table_name()]
        t = self.peek()
        if t is not None and t.kind is TokenKind.IDENTIFIER and not self.at_text("("):
            items.append(AstNode("Alias", (self.take(),)))
        if self.at_text("(") and not self._paren_query_ahead():
            items.append(self.paren_names())
        if self.at_kw("VALUES"):
            parts = [self.take(), self.paren_exprs()]
            while self.at_text(","):
                parts.append(self.take())
                parts.append(self.paren_exprs())
            items.append(AstNode("Values", tuple(parts)))
        elif self.at_kw("SELECT", "WITH") or self.at_text("("):
            items.append(self.query())
        elif self.at_kw("DEFAULT"):
            items.append(self.take())
            items.append(self.kw("VALUES"))
        else:
            self.fail("VALUES or SELECT")
        if self.at_kw("RETURNING"):
            items.append(self.returning())
        return AstNode("Insert", tuple(items))

    def returning(self) -> AstNode:
        return self.flat_until("Returning", self.until_semicolon)

    def paren_exprs(self) -> AstNode:
        items = [self.punct("("), *self.expr_list(), self.punct(")")]
        return AstNode("ExprList", tuple(items))

    def update_body(self) -> AstNode:
        items = [self.take(), self.table_ref(), self.kw("SET")]
        sets = [self.assignment()]
        while self.at_text(","):
            sets.append(self.take())
            sets.append(self.assignment())
        items.append(AstNode("SetList", tuple(sets)))
        if self.at_kw("FROM"):
            items.append(self.from_clause())
        if self.at_kw("WHERE"):
            items.append(self.where_or_current())
        if self.at_kw("RETURNING"):
            items.append(self.returning())
        return AstNode("Update", tuple(items))

    def where_or_current(self) -> AstNode:
        w = self.take()
        if self.at_kw("CURRENT") and self.peek(1) is not None and self.peek(1).upper == "OF":
            return AstNode("Where", (w, self.take(), self.take(), self.dotted_name()))
        return AstNode("Where", (w, self.expr()))

    def assignment(self) -> AstNode:
        if self.at_text("("):
            target = self.paren_names()
        else:
            target = self.column_ref()
        return AstNode("Assign", (target, self.punct_op("="), self.expr()))

    def punct_op(self, text: str) -> AstNode:
        if not self.at_text(text):
            self.fail(repr(text))
        return self.take()

    def delete_body(self) -> AstNode:
        items = [self.take()]
        self.opt_kw(items, "FROM")
        items.append(self.table_ref())
        if self.at_kw("USING"):
            items.append(self.from_clause_using())
        if self.at_kw("WHERE"):
            items.append(self.where_or_current())
        if self.at_kw("RETURNING"):
            items.append(self.returning())
        return AstNode("Delete", tuple(items))

    def from_clause_using(self) -> AstNode:
        items = [self.take(), self.from_item()]
        while self.at_text(","):
            items.append(self.take())
            items.append(self.from_item())
        return AstNode("UsingList", tuple(items))

    # -- expressions ---------------------------------------------------------
    def expr_list(self) -> list:
        items = [self.expr()]
        while self.at_text(","):
            items.append(self.take())
            items.append(self.expr())
        return items

    def expr(self) -> AstNode:
        left = self.and_expr()
        while self.at_kw("OR"):
            left = AstNode("BinaryOp", (left, self.take(), self.and_expr()))
        return left

    def and_expr(self) -> AstNode:
        left = self.not_expr()
        while self.at_kw("AND"):
            left = AstNode("BinaryOp", (left, self.take(), self.not_expr()))
        return left

    def not_expr(self) -> AstNode:
        if self.at_kw("NOT"):
            return AstNode("UnaryOp", (self.take(), self.not_expr()))
        return self.predicate()

    def predicate(self) -> AstNode:
        left = self.additive()
        t = self.peek()
        if t is None:
            return left
        if t.kind is TokenKind.OPERATOR and t.text in _COMPARE:
            op = self.take()
            if self.at_kw("ANY", "ALL", "SOME"):
                q = self.take()
                right = AstNode("Quantified", (q, self.paren_query_or_list()))
            else:
                right = self.additive()
            return AstNode("BinaryOp", (left, op, right))
        if t.is_kw("IS"):
            parts = [left, self.take()]
            self.opt_kw(parts, "NOT")
            if self.at_kw("NULL", "TRUE", "FALSE"):
                parts.append(self.take())
            else:
                self.fail("NULL")
            return AstNode("IsTest", tuple(parts))
        negated = []
        if t.is_kw("NOT") and self.at_kw("IN", "BETWEEN", "LIKE", k=1):
            negated = [self.take()]
        if self.at_kw("IN"):
            return AstNode("InTest", (left, *negated, self.take(), self.paren_query_or_list()))
        if self.at_kw("BETWEEN"):
            parts = [left, *negated, self.take(), self.additive(), self.kw("AND"), self.additive()]
            return AstNode("Between", tuple(parts))
        if self.at_kw("LIKE"):
            parts = [left, *negated, self.take(), self.additive()]
            if self.at_kw("ESCAPE"):
                parts.append(self.take())
                parts.append(self.additive())
            return AstNode("Like", tuple(parts))
        if negated:
            self.fail("IN, BETWEEN or LIKE")
        return left

    def paren_query_or_list(self) -> AstNode:
        if self.at_text("(") and self.at_kw("SELECT", "WITH", k=1):
            return AstNode("Subquery", (self.take(), self.query(), self.punct(")")))
        return self.paren_exprs()

    def additive(self) -> AstNode:
        left = self.multiplicative()
        while self.at_text("+", "-", "||"):
            left = AstNode("BinaryOp", (left, self.take(), self.multiplicative()))
        return left

    def multiplicative(self) -> AstNode:
        left = self.unary()
        while self.at_text("*", "/") or (self.at_text("%") and not self._attr_ahead()):
            left = AstNode("BinaryOp", (left, self.take(), self.unary()))
        return left

    def _attr_ahead(self) -> bool:
        nxt = self.peek(1)
        return nxt is not None and nxt.kind.is_word and nxt.upper in _CURSOR_ATTRS

    def unary(self) -> AstNode:
        if self.at_text("-", "+"):
            return AstNode("UnaryOp", (self.take(), self.unary()))
        return self.postfix()

    def postfix(self) -> AstNode:
        node = self.primary()
        while True:
            if self.at_text("::"):
                node = AstNode("Cast", (node, self.take(), self.data_type()))
            elif self.at_text("%") and self._attr_ahead():
                node = AstNode("Attribute", (node, self.take(), self.take()))
            elif self.at_text("(") and self.at_text("+", k=1) and self.at_text(")", k=2):
                if self.pg:
                    self.fail("an ANSI join instead of (+)")
                node = AstNode("OuterJoin", (node, self.take(), self.take(), self.take()))
            elif self.at_text("[") :
                node = AstNode("Subscript", (node, self.take(), self.expr(), self.punct("]")))
            else:
                return node

    def primary(self) -> AstNode:
        t = self.peek()
        if t is None:
            self.fail("expression")
        if t.kind in (TokenKind.NUMBER, TokenKind.STRING):
            return self.take()
        if t.is_kw("NULL", "TRUE", "FALSE"):
            return self.take()
        if t.kind is TokenKind.PUNCT and t.text == "(":
            if self.at_kw("SELECT", "WITH", k=1):
                return AstNode("Subquery", (self.take(), self.query(), self.punct(")")))
            open_ = self.take()
            first = self.expr()
            if self.at_text(","):
                items = [open_, first]
                while self.at_text(","):
                    items.append(self.take())
                    items.append(self.expr())
                items.append(self.punct(")"))
                return AstNode("Tuple", tuple(items))
            return AstNode("Paren", (open_, first, self.punct(")")))
        if t.is_kw("CASE"):
            return self.case_expr()
        if t.is_kw("EXISTS"):
            return AstNode("Exists", (self.take(), self.punct("("), self.query(), self.punct(")")))
        if t.is_kw("CAST") and self.at_text("(", k=1):
            return AstNode(
                "CastCall",
                (self.take(), self.take(), self.expr(), self.kw("AS"), self.data_type(), self.punct(")")),
            )
        if t.is_kw("EXTRACT") and self.at_text("(", k=1):
            parts = [self.take(), self.take(), self.take(), self.kw("FROM"), self.expr(), self.punct(")")]
            return AstNode("Extract", tuple(parts))
        if t.is_kw("DATE", "TIMESTAMP", "INTERVAL") and self.peek(1) is not None and self.peek(1).kind is TokenKind.STRING:
            parts = [self.take(), self.take()]
            while self.peek() is not None and self.peek().upper in ("DAY", "HOUR", "MINUTE", "SECOND", "MONTH", "YEAR", "TO"):
                parts.append(self.take())
            return AstNode("TypedLiteral", tuple(parts))
        if t.kind is TokenKind.OPERATOR and t.text == ":" and self.peek(1) is not None and (
            self.peek(1).kind.is_word or self.peek(1).kind is TokenKind.NUMBER
        ):
            if self.pg:
                self.fail("expression (bind variables are Oracle-only)")
            parts = [self.take(), self.take()]
            while self.at_text(".") and self.is_name_token(1):
                parts.append(self.take())
                parts.append(self.take())
            return AstNode("BindVar", tuple(parts))
        if t.kind is TokenKind.OPERATOR and t.text == "*":
            return AstNode("Star", (self.take(),))
        if t.kind is TokenKind.OPERATOR and t.text.startswith("$") and self.peek(1) is not None and self.peek(1).kind is TokenKind.NUMBER:
            return AstNode("Param", (self.take(), self.take()))
        if self.is_name_token():
            return self.name_expr()
        self.fail("expression")

    def column_ref(self) -> AstNode:
        parts = [self.name()]
        while self.at_text("."):
            if self.is_name_token(1):
                parts.append(self.take())
                parts.append(self.take())
            elif self.at_text("*", k=1):
                parts.append(self.take())
                parts.append(self.take())
                break
            else:
                break
        return AstNode("ColumnRef", tuple(parts))

    def name_expr(self) -> AstNode:
        ref = self.column_ref()
        if not self.at_text("(") or (self.at_text("+", k=1) and self.at_text(")", k=2)):
            return ref
        items = [ref, self.take()]
        self.opt_kw(items, "DISTINCT", "ALL")
        if self.at_text("*"):
            items.append(AstNode("Star", (self.take(),)))
        elif not self.at_text(")"):
            items.append(self.argument())
            while self.at_text(","):
                items.append(self.take())
                items.append(self.argument())
        items.append(self.punct(")"))
        call = AstNode("FuncCall", tuple(items))
        if self.at_kw("OVER") or (self.peek() is not None and self.peek().upper == "OVER" and self.at_text("(", k=1)):
            over = [self.take(), self.punct("(")]
            self.flat_until("OverSpec", lambda: False, over)
            over.append(self.punct(")"))
            call = AstNode("Window", (call, *over))
        return call

    def argument(self) -> AstNode:
        if self.is_name_token() and self.at_text("=>", k=1):
            return AstNode("NamedArg", (self.take(), self.take(), self.expr()))
        return self.expr()

    def case_expr(self) -> AstNode:
        items = [self.take()]
        if not self.at_kw("WHEN"):
            items.append(self.expr())
        while self.at_kw("WHEN"):
            items.append(AstNode("When", (self.take(), self.expr(), self.kw("THEN"), self.expr())))
        if not items[1:] or items[-1].kind != "When":
            self.fail("WHEN")
        if self.at_kw("ELSE"):
            items.append(AstNode("Else", (self.take(), self.expr())))
        items.append(self.kw("END"))
        return AstNode("Case", tuple(items))

    def data_type(self) -> AstNode:
        t = self.peek()
        if t is None or not (t.kind.is_word or t.kind is TokenKind.QUOTED_IDENTIFIER):
            self.fail("data type")
        parts = [self.take()]
        while self.at_text(".") and self.peek(1) is not None and self.peek(1).kind.is_word:
            parts.append(self.take())
            parts.append(self.take())
        if self.at_text("%") and self._attr_ahead():
            parts.append(self.take())
            parts.append(self.take())
            return AstNode("DataType", tuple(parts))
        while self.peek() is not None and self.peek().kind.is_word and self.peek().upper in _TYPE_SUFFIX:
            parts.append(self.take())
        if self.at_text("("):
            args = [self.take()]
            while not self.at_text(")"):
                t = self.peek()
                if t is None or not (t.kind in (TokenKind.NUMBER, TokenKind.OPERATOR) or t.kind.is_word or t.text == ","):
                    self.fail("type argument")
                args.append(self.take())
            args.append(self.take())
            parts.append(AstNode("TypeArgs", tuple(args)))
        if self.at_kw("WITH") and (self.at_kw("TIME", k=1) or (self.peek(1) is not None and self.peek(1).upper == "LOCAL")):
            parts.append(self.take())
            if self.peek() is not None and self.peek().upper == "LOCAL":
                parts.append(self.take())
            parts.append(self.kw("TIME"))
            parts.append(self.kw("ZONE"))
        while self.at_text("[") and self.at_text("]", k=1):
            parts.append(self.take())
            parts.append(self.take())
        return AstNode("DataType", tuple(parts))

    # -- DDL ---------------------------------------------------------------
    def create(self) -> AstNode:
        saved = self.pos
        head = [self.take()]
        if self.at_kw("OR") and self.at_kw("REPLACE", k=1):
            head.append(self.take())
            head.append(self.take())
        while self.peek() is not None and self.peek().upper in ("EDITIONABLE", "NONEDITIONABLE", "FORCE", "NOFORCE"):
            head.append(self.take())
        if self.at_kw("GLOBAL") and self.at_kw("TEMPORARY", k=1):
            head.append(self.take())
            head.append(self.take())
        elif self.at_kw("TEMPORARY"):
            head.append(self.take())
        if self.at_kw("UNIQUE") or (self.peek() is not None and self.peek().upper == "BITMAP"):
            if self.at_kw("INDEX", k=1):
                head.append(self.take())
        if self.at_kw("TABLE"):
            return self.create_table(head)
        if self.at_kw("INDEX"):
            return self.create_index(head)
        if self.at_kw("VIEW"):
            return self.create_view(head)
        if self.at_kw("SEQUENCE"):
            head.append(self.take())
            head.append(self.dotted_name())
            items = head[:]
            opts: list = []
            self.flat_until("SequenceOptions", self.until_semicolon, opts)
            if opts:
                items.append(AstNode("SequenceOptions", tuple(opts)))
            self.end_statement(items)
            return AstNode("CreateSequence", tuple(items))
        if self.at_kw("PROCEDURE", "FUNCTION"):
            return self.create_routine(head)
        if self.at_kw("PACKAGE"):
            return self.create_package(head)
        if self.at_kw("TRIGGER"):
            return self.create_trigger(head)
        self.pos = saved
        return self.generic()

    def create_table(self, head: list) -> AstNode:
        items = head + [self.take(), self.table_name()]
        if self.at_text("("):
            cols = [self.take()]
            while True:
                cols.append(self.table_element())
                if self.at_text(","):
                    cols.append(self.take())
                    continue
                break
            cols.append(self.punct(")"))
            items.append(AstNode("ColumnList", tuple(cols)))
        if self.at_kw("AS"):
            items.append(self.take())
            items.append(self.query())
        elif not self.at_text(";") and not self.at_end():
            opts: list = []
            self.flat_until("TableOptions", self.until_semicolon, opts)
            if opts:
                items.append(AstNode("TableOptions", tuple(opts)))
        self.end_statement(items)
        return AstNode("CreateTable", tuple(items))

    def _element_stop(self) -> bool:
        return self.at_text(",")

    def table_element(self) -> AstNode:
        if self.at_kw("CONSTRAINT", "PRIMARY", "UNIQUE", "FOREIGN", "CHECK"):
            node = self.flat_until("TableConstraint", self._element_stop)
            if not node.children:
                self.fail("constraint")
            return node
        parts = [self.name(), self.data_type()]
        rest: list = []
        self.flat_until("ColumnConstraint", self._element_stop, rest)
        if rest:
            parts.append(AstNode("ColumnConstraint", tuple(rest)))
        return AstNode("ColumnDef", tuple(parts))

    def create_index(self, head: list) -> AstNode:
        items = head + [self.take(), self.dotted_name(), self.kw("ON"), self.table_name(), self.paren_exprs()]
        if not self.at_text(";") and not self.at_end():
            opts: list = []
            self.flat_until("IndexOptions", self.until_semicolon, opts)
            if opts:
                items.append(AstNode("IndexOptions", tuple(opts)))
        self.end_statement(items)
        return AstNode("CreateIndex", tuple(items))

    def create_view(self, head: list) -> AstNode:
        items = head + [self.take(), self.dotted_name()]
        if self.at_text("("):
            items.append(self.paren_names())
        items.append(self.kw("AS"))
        items.append(self.query())
        if self.at_kw("WITH"):
            opts: list = []
            self.flat_until("ViewOptions", self.until_semicolon, opts)
            items.append(AstNode("ViewOptions", tuple(opts)))
        self.end_statement(items)
        return AstNode("CreateView", tuple(items))

    def params(self) -> AstNode:
        items = [self.take()]
        if not self.at_text(")"):
            while True:
                p: list = []
                self.flat_until("Param", self._element_stop, p)
                if not p:
                    self.fail("parameter")
                items.append(AstNode("Param", tuple(p)))
                if not self.at_text(","):
                    break
                items.append(self.take())
        items.append(self.punct(")"))
        return AstNode("ParamList", tuple(items))

    def signature(self, head: list, routine_kw: AstNode) -> list:
        """CREATE ... PROCEDURE|FUNCTION name (params) [RETURN(S) type] [options]."""
        sig = head + [routine_kw, self.dotted_name()]
        if self.at_text("("):
            sig.append(self.params())
        if self.at_kw("RETURN"):
            if self.pg:
                self.fail("RETURNS")
            sig.append(AstNode("Returns", (self.take(), self.data_type())))
        elif self.at_kw("RETURNS"):
            r = [self.take()]
            if self.at_kw("TABLE"):
                r.append(self.take())
                r.append(self.params())
            else:
                self.opt_kw(r, "SETOF")
                r.append(self.data_type())
            sig.append(AstNode("Returns", tuple(r)))
        return sig

    def create_routine(self, head: list) -> AstNode:
        routine_kw = self.take()
        kind = "CreateProcedure" if routine_kw.leaf_text == "PROCEDURE" else "CreateFunction"
        items = self.signature(head, routine_kw)
        opts: list = []
        while not self.at_end() and not self.at_text(";") and not self.at_kw("IS", "AS"):
            if self.at_kw("LANGUAGE"):
                opts.append(self.take())
                opts.append(self.take())
                continue
            t = self.peek()
            if t.kind in (TokenKind.PUNCT, TokenKind.STRING):
                self.fail("IS or AS")
            opts.append(self.take())
        if opts:
            items.append(AstNode("RoutineOptions", tuple(opts)))
        if self.at_kw("IS", "AS"):
            as_kw = self.take()
            t = self.peek()
            if t is not None and t.kind is TokenKind.STRING:
                # PostgreSQL: AS $$ body $$ [LANGUAGE x] [options]
                items.append(as_kw)
                items.append(self.routine_body(self.take()))
                tail: list = []
                self.flat_until("RoutineOptions", self.until_semicolon, tail)
                if tail:
                    items.append(AstNode("RoutineOptions", tuple(tail)))
            else:
                if self.pg:
                    self.fail("a $$ routine body")
                items.append(as_kw)
                items.append(self.routine_block())
        self.end_statement(items)
        return AstNode(kind, tuple(items))

    def routine_body(self, body_leaf: AstNode) -> AstNode:
        parts = _dollar_parts(body_leaf.leaf_text)
        if parts is None:
            return body_leaf
        tag, inner = parts
        if not inner.strip():
            return AstNode("DollarBody", (leaf("DollarQuote", tag), leaf("DollarQuote", tag)))
        result = _parse(inner, Dialect.POSTGRES, body=True)
        if isinstance(result, ParseFailure):
            raise _Fail(self.pos - 1, f"valid routine body ({result.expected})")
        return AstNode("DollarBody", (leaf("DollarQuote", tag), result, leaf("DollarQuote", tag)))

    def routine_block(self) -> AstNode:
        """Oracle body after IS/AS: declarations, BEGIN ... END [name]."""
        items: list = []
        decls = self.declarations(stop=("BEGIN",))
        if decls is not None:
            items.append(decls)
        items.extend(self.begin_end())
        return AstNode("Block", tuple(items))

    def begin_end(self) -> list:
        items = [self.kw("BEGIN"), self.stmt_list()]
        if self.at_kw("EXCEPTION"):
            items.append(self.exception_section())
        items.append(self.kw("END"))
        if self.is_name_token() and not self.at_kw("IF", "LOOP"):
            items.append(self.take())
        if self.at_text(";"):
            items.append(self.take())
        return items

    def declarations(self, stop) -> Optional[AstNode]:
        decls = []
        while not self.at_end() and not self.at_kw(*stop):
            decls.append(self.declaration())
        if not decls:
            return None
        return AstNode("Declarations", tuple(decls))

    def declaration(self) -> AstNode:
        if self.at_kw("PROCEDURE", "FUNCTION"):
            return self.subprogram()
        if self.at_kw("CURSOR"):
            node = self.attempt(self.cursor_decl)
            if node is not None:
                return node
        if self.at_kw("TYPE", "PRAGMA") or (self.peek() is not None and self.peek().upper == "SUBTYPE"):
            return self._flat_decl("TypeDecl")
        node = self.attempt(self.variable_decl)
        if node is not None:
            return node
        return self._flat_decl("Declaration")

    def _flat_decl(self, kind: str) -> AstNode:
        items: list = []
        self.flat_until(kind, self.until_semicolon, items)
        if not items:
            self.fail("declaration")
        items.append(self.punct(";"))
        return AstNode(kind, tuple(items))

    def cursor_decl(self) -> AstNode:
        items = [self.take(), self.name()]
        if self.at_text("("):
            items.append(self.params())
        items.append(self.kw("IS", "FOR"))
        items.append(self.query())
        items.append(self.punct(";"))
        return AstNode("CursorDecl", tuple(items))

    def variable_decl(self) -> AstNode:
        items = [self.name()]
        if self.at_kw("EXCEPTION"):
            items.append(self.take())
            items.append(self.punct(";"))
            return AstNode("ExceptionDecl", tuple(items))
        self.opt_kw(items, "CONSTANT")
        items.append(self.data_type())
        if self.at_kw("NOT") and self.at_kw("NULL", k=1):
            items.append(self.take())
            items.append(self.take())
        if self.at_text(":=", "=") or self.at_kw("DEFAULT"):
            items.append(self.take())
            items.append(self.expr())
        items.append(self.punct(";"))
        return AstNode("VariableDecl", tuple(items))

    def subprogram(self) -> AstNode:
        routine_kw = self.take()
        items = [routine_kw, self.name()]
        if self.at_text("("):
            items.append(self.params())
        if self.at_kw("RETURN"):
            items.append(AstNode("Returns", (self.take(), self.data_type())))
        opts: list = []
        while not self.at_end() and not self.at_text(";") and not self.at_kw("IS", "AS"):
            t = self.peek()
            if t.kind is TokenKind.PUNCT:
                self.fail("IS, AS or ';'")
            opts.append(self.take())
        if opts:
            items.append(AstNode("RoutineOptions", tuple(opts)))
        if self.at_text(";"):
            items.append(self.take())
            return AstNode("SubprogramSpec", tuple(items))
        items.append(self.kw("IS", "AS"))
        items.append(self.routine_block())
        return AstNode("Subprogram", tuple(items))

    def create_package(self, head: list) -> AstNode:
        items = head + [self.take()]
        body = False
        if self.at_kw("BODY"):
            items.append(self.take())
            body = True
        items.append(self.dotted_name())
        opts: list = []
        while not self.at_end() and not self.at_kw("IS", "AS"):
            if self.peek().kind is TokenKind.PUNCT:
                self.fail("IS or AS")
            opts.append(self.take())
        if opts:
            items.append(AstNode("RoutineOptions", tuple(opts)))
        items.append(self.kw("IS", "AS"))
        decls = self.declarations(stop=("BEGIN", "END"))
        if decls is not None:
            items.append(decls)
        if self.at_kw("BEGIN"):
            items.append(self.kw("BEGIN"))
            items.append(self.stmt_list())
        items.append(self.kw("END"))
        if self.is_name_token():
            items.append(self.take())
        self.end_statement(items)
        return AstNode("CreatePackageBody" if body else "CreatePackage", tuple(items))

    def create_trigger(self, head: list) -> AstNode:
        items = head + [self.take(), self.dotted_name()]
        header: list = []
        self.flat_until(
            "TriggerHeader",
            lambda: self.at_text(";") or self.at_kw("DECLARE", "BEGIN"),
            header,
        )
        if not header:
            self.fail("trigger timing")
        items.append(AstNode("TriggerHeader", tuple(header)))
        if self.at_kw("DECLARE", "BEGIN"):
            if self.pg:
                self.fail("EXECUTE FUNCTION")
            items.append(self.block(top=False))
        else:
            self.end_statement(items)
        return AstNode("CreateTrigger", tuple(items))

    # -- PL/SQL blocks ---------------------------------------------------------
    def block(self, top: bool) -> AstNode:
        items: list = []
        if self.at_text("<<"):
            items.append(self.label())
        if self.at_kw("DECLARE"):
            items.append(self.take())
            decls = self.declarations(stop=("BEGIN",))
            if decls is not None:
                items.append(decls)
        items.extend(self.begin_end())
        return AstNode("PlsqlBlock", tuple(items))

    def label(self) -> AstNode:
        return AstNode("Label", (self.take(), self.name(), self.punct_op(">>")))

    def exception_section(self) -> AstNode:
        items = [self.take()]
        if not self.at_kw("WHEN"):
            self.fail("WHEN")
        while self.at_kw("WHEN"):
            h = [self.take(), self.dotted_name()]
            while self.at_kw("OR"):
                h.append(self.take())
                h.append(self.dotted_name())
            h.append(self.kw("THEN"))
            h.append(self.stmt_list())
            items.append(AstNode("Handler", tuple(h)))
        return AstNode("ExceptionSection", tuple(items))

    def stmt_list(self) -> AstNode:
        stmts = []
        while not self.at_end() and not self.at_kw(*_BLOCK_END):
            stmts.append(self.plsql_statement())
        return AstNode("StatementList", tuple(stmts))

    def _semi(self, items: list) -> AstNode:
        items.append(self.punct(";"))
        return items

    def plsql_statement(self) -> AstNode:
        t = self.peek()
        if t.kind is TokenKind.OPERATOR and t.text == "<<":
            lab = self.label()
            inner = self.plsql_statement()
            return AstNode("Labeled", (lab, inner))
        if t.is_kw("NULL") and self.at_text(";", k=1):
            return AstNode("NullStatement", (self.take(), self.take()))
        if t.is_kw("IF"):
            return self.if_statement()
        if t.is_kw("LOOP"):
            return AstNode("Loop", tuple(self.loop_tail([])))
        if t.is_kw("WHILE"):
            return AstNode("While", tuple(self.loop_tail([self.take(), self.expr()])))
        if t.is_kw("FOR"):
            return self.for_loop()
        if t.is_kw("EXIT", "CONTINUE"):
            items = [self.take()]
            if self.is_name_token():
                items.append(self.take())
            if self.at_kw("WHEN"):
                items.append(self.take())
                items.append(self.expr())
            return AstNode("Exit", tuple(self._semi(items)))
        if t.is_kw("RETURN"):
            items = [self.take()]
            if not self.at_text(";"):
                if self.peek() is not None and self.peek().upper in ("QUERY", "NEXT"):
                    items.append(self.take())
                    if self.at_kw("SELECT", "WITH"):
                        items.append(self.query())
                    elif not self.at_text(";"):
                        items.append(self.expr())
                else:
                    items.append(self.expr())
            return AstNode("Return", tuple(self._semi(items)))
        if t.is_kw("SELECT", "WITH"):
            body = self.query()
            return AstNode("SqlStatement", (body, self.punct(";")))
        if t.is_kw("INSERT"):
            return AstNode("SqlStatement", (self.insert_body(), self.punct(";")))
        if t.is_kw("UPDATE"):
            return AstNode("SqlStatement", (self.update_body(), self.punct(";")))
        if t.is_kw("DELETE"):
            return AstNode("SqlStatement", (self.delete_body(), self.punct(";")))
        if t.is_kw("DECLARE", "BEGIN"):
            return self.block(top=False)
        if t.is_kw("RAISE", "COMMIT", "ROLLBACK", "SAVEPOINT", "EXECUTE", "OPEN", "FETCH", "CLOSE", "PERFORM"):
            return self._flat_stmt(t.upper.capitalize())
        if self.is_name_token() or (t.kind is TokenKind.OPERATOR and t.text == ":"):
            node = self.attempt(self.assign_or_call)
            if node is not None:
                return node
        return self._flat_stmt("Statement")

    def _flat_stmt(self, kind: str) -> AstNode:
        items: list = []
        self.flat_until(kind, self.until_semicolon, items)
        if not items:
            self.fail("statement")
        items.append(self.punct(";"))
        return AstNode(kind, tuple(items))

    def assign_or_call(self) -> AstNode:
        target = self.postfix()
        if self.at_text(":="):
            items = [target, self.take(), self.expr()]
            return AstNode("Assignment", tuple(self._semi(items)))
        if target.kind in ("FuncCall", "ColumnRef"):
            return AstNode("CallStatement", tuple(self._semi([target])))
        self.fail("':='")

    def if_statement(self) -> AstNode:
        items = [self.take(), self.expr(), self.kw("THEN"), self.stmt_list()]
        while self.at_kw("ELSIF"):
            items.append(AstNode("Elsif", (self.take(), self.expr(), self.kw("THEN"), self.stmt_list())))
        if self.at_kw("ELSE"):
            items.append(AstNode("ElseBranch", (self.take(), self.stmt_list())))
        items.append(self.kw("END"))
        items.append(self.kw("IF"))
        return AstNode("If", tuple(self._semi(items)))

    def loop_tail(self, items: list) -> list:
        items += [self.kw("LOOP"), self.stmt_list(), self.kw("END"), self.kw("LOOP")]
        if self.is_name_token():
            items.append(self.take())
        return self._semi(items)

    def for_loop(self) -> AstNode:
        items = [self.take(), self.name(), self.kw("IN")]
        self.opt_kw(items, "REVERSE")
        if self.at_kw("SELECT", "WITH"):
            items.append(self.query())
        elif self.at_text("(") and self.at_kw("SELECT", "WITH", k=1):
            items.append(AstNode("Subquery", (self.take(), self.query(), self.punct(")"))))
        else:
            low = self.additive()
            if self.at_text(".."):
                items.append(AstNode("Range", (low, self.take(), self.additive())))
            else:
                items.append(low)
        return AstNode("For", tuple(self.loop_tail(items)))


def _prepare(text: str, dialect: Dialect):
    tokens = lex(text, dialect)
    sig = significant(tokens)
    if dialect is Dialect.ORACLE:
        drop = set()
        for r in find_physical_clauses(sig):
            drop.update(r)
        if drop:
            sig = [t for i, t in enumerate(sig) if i not in drop]
    return sig


def parse(text: str, dialect: Dialect = Dialect.ORACLE) -> ParseResult:
    """Parse *text*; returns the root node or a :class:`ParseFailure`."""
    return _parse(text, dialect)


def _parse(text: str, dialect: Dialect, body: bool = False) -> ParseResult:
    try:
        sig = _prepare(text, dialect)
    except LexError as exc:
        return ParseFailure(exc.offset, "terminated literal or comment", text[exc.offset:exc.offset + 2])
    p = _Parser(sig, dialect, len(text), body)
    try:
        return p.script()
    except _Fail as fail:
        if fail.pos < len(sig):
            tok = sig[fail.pos]
            return ParseFailure(tok.span[0], fail.expected, tok.text)
        return ParseFailure(len(text), fail.expected, "")
    except RecursionError:
        return ParseFailure(0, "shallower nesting", "")


def parse_or_raise(text: str, dialect: Dialect = Dialect.ORACLE) -> AstNode:
    result = parse(text, dialect)
    if isinstance(result, ParseFailure):
        raise ParseError(result)
    return result


def is_valid(text: str, dialect: Dialect = Dialect.POSTGRES) -> bool:
    return not isinstance(parse(text, dialect), ParseFailure)
