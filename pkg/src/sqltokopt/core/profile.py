"""PL/SQL share of an Oracle artifact."""
from __future__ import annotations

from typing import List, Sequence

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.errors import EmptyArtifact
from sqltokopt.core.lexer import Dialect, Token, lex, significant

_ROUTINES = frozenset({"PROCEDURE", "FUNCTION", "TRIGGER"})
_CREATE_MODIFIERS = frozenset({"OR", "REPLACE", "EDITIONABLE", "NONEDITIONABLE"})


def _routine_kind(sig: Sequence[Token], i: int) -> str:
    """Classify the CREATE statement at *i*: 'routine', 'package_body', 'trigger' or ''."""
    j = i + 1
    while j < len(sig) and sig[j].upper in _CREATE_MODIFIERS:
        j += 1
    if j >= len(sig):
        return ""
    word = sig[j].upper
    if word in ("PROCEDURE", "FUNCTION"):
        return "routine"
    if word == "TRIGGER":
        return "trigger"
    if word == "PACKAGE" and j + 1 < len(sig) and sig[j + 1].upper == "BODY":
        return "package_body"
    return ""


def _scan_region(sig: Sequence[Token], i: int, stack: List[str], mask: List[bool]) -> int:
    """Mark tokens from *i* as procedural until *stack* empties; return next index."""
    n = len(sig)
    pending_routine = False
    paren = 0
    while i < n:
        tok = sig[i]
        mask[i] = True
        word = tok.upper if tok.kind.is_word else ""
        text = tok.text
        if text == "(":
            paren += 1
        elif text == ")":
            paren = max(0, paren - 1)
        elif text == ";":
            pending_routine = False
        elif word in ("PROCEDURE", "FUNCTION"):
            pending_routine = True
        elif word in ("IS", "AS") and pending_routine and paren == 0:
            stack.append("ROUTINE")
            pending_routine = False
        elif word == "DECLARE":
            stack.append("DECLARE")
        elif word == "BEGIN":
            if stack and stack[-1] in ("ROUTINE", "DECLARE", "PKG"):
                stack[-1] = "BEGIN"
            else:
                stack.append("BEGIN")
        elif word == "CASE":
            stack.append("CASE")
        elif word == "END":
            nxt = sig[i + 1].upper if i + 1 < n else ""
            if nxt in ("IF", "LOOP"):
                i += 1
                mask[i] = True
            else:
                if stack:
                    stack.pop()
                if not stack:
                    i += 1
                    # optional label / CASE keyword, then the terminator
                    if i < n and sig[i].kind.is_word and sig[i].text != ";":
                        mask[i] = True
                        i += 1
                    if i < n and sig[i].text == ";":
                        mask[i] = True
                        i += 1
                    return i
        i += 1
    return i


def procedural_mask(sig: Sequence[Token]) -> List[bool]:
    """For each significant token, whether it lies in a procedural region."""
    mask = [False] * len(sig)
    n = len(sig)
    i = 0
    at_start = True
    while i < n:
        tok = sig[i]
        if tok.text in (";", "/"):
            at_start = True
            i += 1
            continue
        if at_start and tok.is_kw("DECLARE", "BEGIN"):
            i = _scan_region(sig, i, [], mask)
            at_start = True
            continue
        if at_start and tok.is_kw("CREATE"):
            kind = _routine_kind(sig, i)
            if kind:
                j = i + 1
                paren = 0
                while j < n:
                    t = sig[j]
                    if t.text == "(":
                        paren += 1
                    elif t.text == ")":
                        paren -= 1
                    elif paren == 0 and kind != "trigger" and t.is_kw("IS", "AS"):
                        j += 1
                        break
                    elif paren == 0 and kind == "trigger" and t.is_kw("DECLARE", "BEGIN"):
                        break
                    elif paren == 0 and t.text == ";":
                        break
                    j += 1
                if j < n and sig[j].text != ";":
                    stack = ["PKG"] if kind == "package_body" else (["ROUTINE"] if kind == "routine" else [])
                    i = _scan_region(sig, j, stack, mask)
                    at_start = True
                    continue
                i = j
                continue
        at_start = False
        i += 1
    return mask


def plsql_ratio(artifact: SqlArtifact) -> float:
    """Percentage of significant tokens inside procedural regions."""
    sig = significant(lex(artifact.text, artifact.dialect))
    if not sig:
        raise EmptyArtifact(f"artifact {artifact.id!r} has no tokens")
    mask = procedural_mask(sig)
    return 100.0 * sum(mask) / len(sig)
