# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled scanning kernels; behaviour matches ``_scan.py`` exactly."""
from cpython.unicode cimport (
    Py_UNICODE_ISALNUM,
    Py_UNICODE_ISALPHA,
    Py_UNICODE_ISSPACE,
)

from sqltokopt.errors import UnterminatedComment, UnterminatedString

DEF WS = 0
DEF WORD = 1
DEF QIDENT = 2
DEF STRING = 3
DEF NUMBER = 4
DEF OPERATOR = 5
DEF PUNCT = 6
DEF LINE_COMMENT = 7
DEF BLOCK_COMMENT = 8
DEF ORACLE = 0
DEF POSTGRES = 1


cdef inline bint _word_start(Py_UCS4 c):
    return Py_UNICODE_ISALPHA(c) or c == u'_'


cdef inline bint _word_part(Py_UCS4 c):
    return Py_UNICODE_ISALNUM(c) or c == u'_' or c == u'$' or c == u'#'


cdef inline bint _digit(Py_UCS4 c):
    return u'0' <= c <= u'9'


cdef inline bint _punct(Py_UCS4 c):
    return (c == u'(' or c == u')' or c == u',' or c == u';' or c == u'.'
            or c == u'[' or c == u']' or c == u'{' or c == u'}')


cdef bint _two_char_op(Py_UCS4 a, Py_UCS4 b):
    if b == u'=':
        return a == u':' or a == u'<' or a == u'>' or a == u'!' or a == u'^'
    if a == u'=' and b == u'>':
        return True
    if a == u'<' and b == u'>':
        return True
    if a == b:
        return a == u'|' or a == u'.' or a == u':' or a == u'*' or a == u'<' or a == u'>'
    return False


cdef Py_ssize_t _scan_quoted(str text, Py_ssize_t start, Py_UCS4 quote) except -1:
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i = start + 1
    while i < n:
        if text[i] == quote:
            if i + 1 < n and text[i + 1] == quote:
                i += 2
                continue
            return i + 1
        i += 1
    raise UnterminatedString(start)


cdef Py_ssize_t _scan_q_quote(str text, Py_ssize_t start, Py_ssize_t body) except -1:
    cdef Py_ssize_t n = len(text)
    cdef Py_UCS4 opener, closer
    cdef Py_ssize_t i
    if body >= n:
        raise UnterminatedString(start)
    opener = text[body]
    if opener == u'(':
        closer = u')'
    elif opener == u'[':
        closer = u']'
    elif opener == u'{':
        closer = u'}'
    elif opener == u'<':
        closer = u'>'
    else:
        closer = opener
    i = body + 1
    while i + 1 < n:
        if text[i] == closer and text[i + 1] == u"'":
            return i + 2
        i += 1
    raise UnterminatedString(start)


cdef Py_ssize_t _dollar_tag_end(str text, Py_ssize_t start):
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i = start + 1
    if i < n and text[i] == u'$':
        return i + 1
    if i < n and _word_start(text[i]):
        i += 1
        while i < n and (Py_UNICODE_ISALNUM(text[i]) or text[i] == u'_'):
            i += 1
        if i < n and text[i] == u'$':
            return i + 1
    return -1


def scan(str text, int dialect):
    cdef list out = []
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i = 0, start, j, body, end
    cdef Py_UCS4 c
    cdef int kind
    while i < n:
        c = text[i]
        start = i
        if Py_UNICODE_ISSPACE(c):
            i += 1
            while i < n and Py_UNICODE_ISSPACE(text[i]):
                i += 1
            kind = WS
        elif c == u'-' and i + 1 < n and text[i + 1] == u'-':
            i += 2
            while i < n and text[i] != u'\n' and text[i] != u'\r':
                i += 1
            kind = LINE_COMMENT
        elif c == u'/' and i + 1 < n and text[i + 1] == u'*':
            end = text.find(u"*/", i + 2)
            if end < 0:
                raise UnterminatedComment(start)
            i = end + 2
            kind = BLOCK_COMMENT
        elif c == u"'":
            i = _scan_quoted(text, i, u"'")
            kind = STRING
        elif c == u'"':
            i = _scan_quoted(text, i, u'"')
            kind = QIDENT
        elif dialect == ORACLE and (c == u'q' or c == u'Q') and i + 1 < n and text[i + 1] == u"'":
            i = _scan_q_quote(text, i, i + 2)
            kind = STRING
        elif (dialect == ORACLE and (c == u'n' or c == u'N') and i + 2 < n
              and (text[i + 1] == u'q' or text[i + 1] == u'Q') and text[i + 2] == u"'"):
            i = _scan_q_quote(text, i, i + 3)
            kind = STRING
        elif dialect == POSTGRES and c == u'$' and _dollar_tag_end(text, i) > 0:
            body = _dollar_tag_end(text, i)
            tag = text[i:body]
            end = text.find(tag, body)
            if end < 0:
                raise UnterminatedString(start)
            i = end + (body - i)
            kind = STRING
        elif _word_start(c):
            i += 1
            while i < n and _word_part(text[i]):
                i += 1
            kind = WORD
        elif _digit(c):
            i += 1
            while i < n and _digit(text[i]):
                i += 1
            if i + 1 < n and text[i] == u'.' and _digit(text[i + 1]):
                i += 2
                while i < n and _digit(text[i]):
                    i += 1
            if i < n and (text[i] == u'e' or text[i] == u'E'):
                j = i + 1
                if j < n and (text[j] == u'+' or text[j] == u'-'):
                    j += 1
                if j < n and _digit(text[j]):
                    i = j + 1
                    while i < n and _digit(text[i]):
                        i += 1
            kind = NUMBER
        elif _punct(c) and not (c == u'.' and i + 1 < n and text[i + 1] == u'.'):
            i += 1
            kind = PUNCT
        elif i + 1 < n and _two_char_op(c, text[i + 1]):
            i += 2
            kind = OPERATOR
        else:
            i += 1
            kind = OPERATOR
        out.append((kind, start, i))
    return out


def count_tokens(str text):
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t run = 0
    cdef Py_UCS4 c
    for c in text:
        if Py_UNICODE_ISALNUM(c) or c == u'_':
            run += 1
            continue
        if run:
            total += (run + 3) // 4
            run = 0
        if not Py_UNICODE_ISSPACE(c):
            total += 1
    if run:
        total += (run + 3) // 4
    return total
