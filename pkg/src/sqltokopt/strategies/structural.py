"""Strategies that need the parse tree or the statement profile."""
from __future__ import annotations

from typing import Iterable, List, Optional, Tuple

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.ast import AstNode
from sqltokopt.core.counting import count_tokens
from sqltokopt.core.lexer import Dialect, lex, significant
from sqltokopt.core.parser import ParseFailure, parse
from sqltokopt.core.profile import plsql_ratio
from sqltokopt.core.render import join_compact, prune_nodes, render
from sqltokopt.errors import EmptyArtifact, NothingToDistill, ParseRequired
from sqltokopt.strategies.base import MetadataVector, OptimizedContext, StrategyConfig, StrategyId
from sqltokopt.strategies.textual import dsl_compress_text, minify_text, refactor_quotes_text

BODY_MARKER = "/*BODY OMITTED*/"

_OBJECT_KINDS = {
    "CreateTable": "TABLE",
    "CreateIndex": "INDEX",
    "CreateView": "VIEW",
    "CreateSequence": "SEQUENCE",
    "CreateProcedure": "PROCEDURE",
    "CreateFunction": "FUNCTION",
    "CreatePackage": "PACKAGE",
    "CreatePackageBody": "PACKAGE_BODY",
    "CreateTrigger": "TRIGGER",
    "Select": "QUERY",
    "SetOp": "QUERY",
    "Insert": "DML",
    "Update": "DML",
    "Delete": "DML",
    "PlsqlBlock": "BLOCK",
    "Do": "BLOCK",
}
_LEADING_KINDS = {
    "SELECT": "QUERY",
    "WITH": "QUERY",
    "INSERT": "DML",
    "UPDATE": "DML",
    "DELETE": "DML",
    "MERGE": "DML",
    "DECLARE": "BLOCK",
    "BEGIN": "BLOCK",
}


def _statements(root: AstNode) -> Tuple[AstNode, ...]:
    return root.children if root.kind == "Script" else (root,)


def _statement_kind(stmt: AstNode) -> str:
    if stmt.kind in _OBJECT_KINDS:
        return _OBJECT_KINDS[stmt.kind]
    first = next(stmt.leaves(), None)
    return first.leaf_text.upper() if first is not None else "UNKNOWN"


def _pieces(nodes: Iterable[AstNode]):
    for n in nodes:
        for lf in n.leaves():
            yield lf.kind, lf.leaf_text


def _text(*nodes: AstNode) -> str:
    return join_compact(_pieces(nodes))


def _object_name(stmt: AstNode) -> Optional[str]:
    for c in stmt.children:
        if c.kind in ("Name", "TableName"):
            return _text(c)
    return None


def _referenced_tables(stmt: AstNode) -> List[str]:
    own = stmt.first_child("TableName") if stmt.kind == "CreateTable" else None
    seen: List[str] = []

    def add(name: str):
        if name and name not in seen:
            seen.append(name)

    for n in stmt.walk():
        if n.kind == "TableName" and n is not own:
            add(_text(n))
        elif n.kind in ("ColumnConstraint", "TableConstraint", "TriggerHeader"):
            kids = n.children
            for i, c in enumerate(kids):
                if c.is_leaf and c.leaf_text.upper() in ("REFERENCES", "ON"):
                    j = i + 1
                    parts = []
                    while j < len(kids) and kids[j].is_leaf and (
                        kids[j].kind in ("Identifier", "QuotedIdentifier") or kids[j].leaf_text == "."
                    ):
                        parts.append(kids[j])
                        j += 1
                    add(_text(*parts))
    return seen


def _ratio(artifact: SqlArtifact) -> float:
    try:
        return plsql_ratio(artifact)
    except EmptyArtifact:
        return 0.0


def _has_handlers(artifact: SqlArtifact) -> bool:
    sig = significant(lex(artifact.text, artifact.dialect))
    return any(a.is_kw("EXCEPTION") and b.is_kw("WHEN") for a, b in zip(sig, sig[1:]))


def extract_metadata(artifact: SqlArtifact) -> MetadataVector:
    """Summarize the object; fields that cannot be determined are left unset."""
    pct = _ratio(artifact)
    exc = _has_handlers(artifact)
    root = parse(artifact.text, artifact.dialect)
    if isinstance(root, ParseFailure):
        sig = significant(lex(artifact.text, artifact.dialect))
        kind = "UNKNOWN"
        if sig:
            kind = _LEADING_KINDS.get(sig[0].upper, sig[0].upper)
            if sig[0].is_kw("CREATE"):
                words = [t.upper for t in sig[1:6] if t.kind.is_word]
                for w in ("TABLE", "INDEX", "VIEW", "SEQUENCE", "PROCEDURE", "FUNCTION", "PACKAGE", "TRIGGER"):
                    if w in words:
                        kind = w
                        break
        return MetadataVector(kind, plsql_percentage=pct, has_exception_handlers=exc)
    stmts = _statements(root)
    kinds = {_statement_kind(s) for s in stmts}
    kind = kinds.pop() if len(kinds) == 1 else "SCRIPT"
    name = _object_name(stmts[0]) if len(stmts) == 1 else None
    cols = None
    if len(stmts) == 1 and stmts[0].kind == "CreateTable":
        col_list = stmts[0].first_child("ColumnList")
        if col_list is not None:
            cols = sum(1 for c in col_list.children if c.kind == "ColumnDef")
    refs: List[str] = []
    for s in stmts:
        for r in _referenced_tables(s):
            if r not in refs:
                refs.append(r)
    return MetadataVector(kind, name, tuple(refs), cols, pct, exc)


def augment_metadata(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    header = extract_metadata(artifact).serialize()
    body = minify_text(artifact.text, artifact.dialect)
    return OptimizedContext.build(header + "\n" + body, StrategyId.METADATA, config.counter)


def _marker_or_body(body: List[AstNode]) -> List[Tuple[str, str]]:
    """The body marker, unless the body itself is cheaper than the marker."""
    rendered = _text(*body) if body else ""
    if body and count_tokens(rendered) < count_tokens(BODY_MARKER):
        return list(_pieces(body))
    return [("Comment", BODY_MARKER)]


def _routine_header(stmt: AstNode) -> List[Tuple[str, str]]:
    kids = list(stmt.children)
    for i, c in enumerate(kids):
        if c.is_leaf and c.leaf_text.upper() in ("IS", "AS"):
            return list(_pieces(kids[: i + 1])) + _marker_or_body(kids[i + 1:])
    return list(_pieces(kids))


def _distill_table(stmt: AstNode) -> Optional[List[Tuple[str, str]]]:
    kids = list(stmt.children)
    col_list = stmt.first_child("ColumnList")
    if col_list is None:
        return None
    head = kids[: kids.index(col_list)]
    cols = []
    for c in col_list.children:
        if c.kind == "ColumnDef":
            keep = [k for k in c.children if k.kind in ("Identifier", "QuotedIdentifier", "DataType")]
            cols.append(keep)
    if not cols:
        return None
    out = list(_pieces(head)) + [("Punct", "(")]
    for i, col in enumerate(cols):
        if i:
            out.append(("Punct", ","))
        out.extend(_pieces(col))
    out.append(("Punct", ")"))
    if kids[-1].is_leaf and kids[-1].leaf_text == ";":
        out.append(("Punct", ";"))
    return out


def _distill_package(stmt: AstNode) -> List[Tuple[str, str]]:
    kids = list(stmt.children)
    out: List[Tuple[str, str]] = []
    decls = stmt.first_child("Declarations")
    for c in kids:
        if c is decls:
            for d in c.children:
                if d.kind == "SubprogramSpec":
                    out.extend(_pieces([d]))
                elif d.kind == "Subprogram":
                    out.extend(_routine_header(d))
                    out.append(("Punct", ";"))
        elif c.kind in ("Block", "StatementList"):
            continue
        else:
            out.extend(_pieces([c]))
    return out


def distill_text(text: str, dialect: Dialect = Dialect.ORACLE) -> str:
    """Keep table columns (name and type) and routine signatures only."""
    root = parse(text, dialect)
    if isinstance(root, ParseFailure):
        raise NothingToDistill(f"input does not parse: {root}")
    pieces: List[Tuple[str, str]] = []
    for stmt in _statements(root):
        kept = None
        if stmt.kind == "CreateTable":
            kept = _distill_table(stmt)
        elif stmt.kind in ("CreateProcedure", "CreateFunction", "CreateTrigger"):
            kept = _routine_header(stmt) if stmt.kind != "CreateTrigger" else _trigger_header(stmt)
        elif stmt.kind in ("CreatePackage", "CreatePackageBody"):
            kept = _distill_package(stmt)
        if kept:
            pieces.extend(kept)
    if not pieces:
        raise NothingToDistill("no table or routine definition to keep")
    return join_compact(pieces, dialect)


def _trigger_header(stmt: AstNode) -> List[Tuple[str, str]]:
    kids = list(stmt.children)
    for i, c in enumerate(kids):
        if c.kind == "PlsqlBlock":
            return list(_pieces(kids[:i])) + _marker_or_body(kids[i:])
    return list(_pieces(kids))


def distill(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    return OptimizedContext.build(distill_text(artifact.text, artifact.dialect), StrategyId.DISTILLATION, config.counter)


def ast_minify_text(text: str, dialect: Dialect = Dialect.ORACLE) -> str:
    root = parse(text, dialect)
    if isinstance(root, ParseFailure):
        raise ParseRequired(root)
    return render(prune_nodes(root), dialect)


def ast_minify(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    text = ast_minify_text(artifact.text, artifact.dialect)
    return OptimizedContext.build(text, StrategyId.AST_MINIFICATION, config.counter)


def route(p: float) -> StrategyId:
    """The adaptive rule: mostly procedural -> DSL, pure SQL -> refactoring."""
    if p > 80:
        return StrategyId.DSL
    if p == 0:
        return StrategyId.REFACTORING
    return StrategyId.MINIFICATION


def route_adaptive(artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()) -> OptimizedContext:
    target = route(_ratio(artifact))
    if target is StrategyId.DSL:
        text = dsl_compress_text(artifact.text, config.dictionary, artifact.dialect)
    elif target is StrategyId.REFACTORING:
        text = refactor_quotes_text(artifact.text, artifact.dialect)
    else:
        text = minify_text(artifact.text, artifact.dialect)
    return OptimizedContext.build(text, StrategyId.ADAPTIVE, config.counter, routed_to=target)
