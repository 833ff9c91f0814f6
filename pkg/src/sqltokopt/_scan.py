"""Pure-Python scanning kernels.

These mirror ``_scan_c.pyx`` exactly; :mod:`sqltokopt.kernels` picks one of
the two at import time.  Token kinds are small integers so the compiled
kernel can return plain tuples.
"""
import re

from sqltokopt.errors import UnterminatedComment, UnterminatedString

WS = 0
WORD = 1
QIDENT = 2
STRING = 3
NUMBER = 4
OPERATOR = 5
PUNCT = 6
LINE_COMMENT = 7
BLOCK_COMMENT = 8

ORACLE = 0
POSTGRES = 1

_TWO_CHAR_OPS = frozenset([":=", "=>", "||", "<=", ">=", "<>", "!=", "^=", "..", "::", "**", "<<", ">>"])
_PUNCT = frozenset("(),;.[]{}")
_Q_CLOSE = {"(": ")", "[": "]", "{": "}", "<": ">"}
_COUNT_RE = re.compile(r"\w+|[^\w\s]")


def _is_word_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_word_part(c: str) -> bool:
    return c.isalnum() or c in "_$#"


def _is_digit(c: str) -> bool:
    return "0" <= c <= "9"


def _scan_quoted(text: str, start: int, quote: str) -> int:
    # returns end offset (exclusive); doubled quote is an escape
    n = len(text)
    i = start + 1
    while i < n:
        if text[i] == quote:
            if i + 1 < n and text[i + 1] == quote:
                i += 2
                continue
            return i + 1
        i += 1
    raise UnterminatedString(start)


def _scan_q_quote(text: str, start: int, body: int) -> int:
    # body points at the delimiter character after q'
    n = len(text)
    if body >= n:
        raise UnterminatedString(start)
    opener = text[body]
    closer = _Q_CLOSE.get(opener, opener)
    i = body + 1
    while i + 1 < n:
        if text[i] == closer and text[i + 1] == "'":
            return i + 2
        i += 1
    raise UnterminatedString(start)


def _dollar_tag_end(text: str, start: int) -> int:
    """Return the end of a ``$tag$`` opener at *start*, or -1."""
    n = len(text)
    i = start + 1
    if i < n and text[i] == "$":
        return i + 1
    if i < n and _is_word_start(text[i]):
        i += 1
        while i < n and (text[i].isalnum() or text[i] == "_"):
            i += 1
        if i < n and text[i] == "$":
            return i + 1
    return -1


def scan(text: str, dialect: int) -> list:
    """Split *text* into ``(kind, start, end)`` triples covering every char."""
    out = []
    n = len(text)
    i = 0
    while i < n:
        c = text[i]
        start = i
        if c.isspace():
            i += 1
            while i < n and text[i].isspace():
                i += 1
            kind = WS
        elif c == "-" and i + 1 < n and text[i + 1] == "-":
            i += 2
            while i < n and text[i] != "\n" and text[i] != "\r":
                i += 1
            kind = LINE_COMMENT
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            end = text.find("*/", i + 2)
            if end < 0:
                raise UnterminatedComment(start)
            i = end + 2
            kind = BLOCK_COMMENT
        elif c == "'":
            i = _scan_quoted(text, i, "'")
            kind = STRING
        elif c == '"':
            i = _scan_quoted(text, i, '"')
            kind = QIDENT
        elif (
            dialect == ORACLE
            and c in "qQ"
            and i + 1 < n
            and text[i + 1] == "'"
        ):
            i = _scan_q_quote(text, i, i + 2)
            kind = STRING
        elif (
            dialect == ORACLE
            and c in "nN"
            and i + 2 < n
            and text[i + 1] in "qQ"
            and text[i + 2] == "'"
        ):
            i = _scan_q_quote(text, i, i + 3)
            kind = STRING
        elif dialect == POSTGRES and c == "$" and _dollar_tag_end(text, i) > 0:
            body = _dollar_tag_end(text, i)
            tag = text[i:body]
            end = text.find(tag, body)
            if end < 0:
                raise UnterminatedString(start)
            i = end + len(tag)
            kind = STRING
        elif _is_word_start(c):
            i += 1
            while i < n and _is_word_part(text[i]):
                i += 1
            kind = WORD
        elif _is_digit(c):
            i += 1
            while i < n and _is_digit(text[i]):
                i += 1
            if i + 1 < n and text[i] == "." and _is_digit(text[i + 1]):
                i += 2
                while i < n and _is_digit(text[i]):
                    i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and _is_digit(text[j]):
                    i = j + 1
                    while i < n and _is_digit(text[i]):
                        i += 1
            kind = NUMBER
        elif c in _PUNCT and not (c == "." and i + 1 < n and text[i + 1] == "."):
            i += 1
            kind = PUNCT
        elif text[i:i + 2] in _TWO_CHAR_OPS:
            i += 2
            kind = OPERATOR
        else:
            i += 1
            kind = OPERATOR
        out.append((kind, start, i))
    return out


def count_tokens(text: str) -> int:
    """Word runs cost ceil(len/4); every other visible character costs 1."""
    total = 0
    for m in _COUNT_RE.finditer(text):
        s = m.group()
        if s[0].isalnum() or s[0] == "_":
            total += (len(s) + 3) // 4
        else:
            total += 1
    return total
