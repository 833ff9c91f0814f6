import re
import warnings
from collections import Counter

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sqltokopt.core import SqlArtifact, TokenKind, count_tokens, lex, parse, plsql_ratio, prune_nodes
from sqltokopt.core.ast import structurally_equal
from sqltokopt.errors import LexError
from sqltokopt.strategies import (
    BODY_MARKER,
    DEFAULT_DICTIONARY,
    OUTPUT_CONSTRAINTS,
    AliasMap,
    NoMaskableIdentifiers,
    NothingToDistill,
    ParseRequired,
    ReplacementCollision,
    StrategyConfig,
    StrategyId,
    SubstitutionDictionary,
    apply_strategy,
    ast_minify,
    augment_metadata,
    constrained_system_prompt,
    demask,
    demask_with_warnings,
    distill,
    dsl_compress,
    extract_metadata,
    mask_identifiers,
    minify,
    prune,
    refactor_quotes,
    route_adaptive,
)
from sqltokopt.errors import InvalidDictionary

A = SqlArtifact

FRAGMENTS = st.sampled_from(
    [
        "SELECT", "FROM", "WHERE", "a", "b_col", "user_id", "USER", "t1", "\"QUOTED\"", "\"Mixed\"",
        "'lit'", "'a  b'", "'-- not'", "42", "1.5", ",", "(", ")", ";", "=", "||", ":=", ".",
        "-- note\n", "/* c */", "TABLESPACE users", "PCTFREE 10", "NOLOGGING", "STORAGE (INITIAL 1)",
        "CREATE TABLE", "BEGIN", "END", "X_1", "  ", "\n", "\t",
    ]
)
loose_sql = st.lists(FRAGMENTS, max_size=30).map(" ".join)

PROGRAMS = [
    "SELECT a, b FROM t WHERE c = 'x' -- trailing\n",
    "CREATE TABLE emp (id NUMBER(10) PRIMARY KEY, name VARCHAR2(50)) TABLESPACE users PCTFREE 10 NOLOGGING;",
    "CREATE OR REPLACE PROCEDURE p(a IN NUMBER) IS\n  v NUMBER; -- local\nBEGIN\n  v := a * 2;\n"
    "  IF v > 1 THEN UPDATE t SET x = v; END IF;\nEXCEPTION WHEN OTHERS THEN NULL;\nEND;",
    'SELECT "USER_NAME", "weird col" FROM "APP_USERS" /* c */ WHERE x = q\'[it\'s]\'',
    "SELECT ((a)) + (b * c) FROM t",
    "BEGIN\n  NULL;\nEND;",
]


def lexable(text):
    try:
        lex(text)
    except LexError:
        return False
    return True


def literals(text):
    return Counter(t.text for t in lex(text) if t.kind is TokenKind.STRING)


class TestStrategyId:
    def test_twelve(self):
        assert len(StrategyId) == 12

    @pytest.mark.parametrize("sid", list(StrategyId))
    def test_parse_names(self, sid):
        assert StrategyId.parse(sid.cli_name) is sid
        assert StrategyId.parse(sid.label) is sid

    def test_aliases(self):
        assert StrategyId.parse("pruning") is StrategyId.PRUNING
        assert StrategyId.parse("masking") is StrategyId.IDENTIFIER_MASKING
        with pytest.raises(ValueError):
            StrategyId.parse("nope")


class TestBaselinePrune:
    def test_baseline_identity(self):
        text = "SELECT 1 /* c */ TABLESPACE x"
        assert apply_strategy(StrategyId.BASELINE, A(text)).prompt_text == text

    def test_tablespace_example(self):
        out = prune(A("CREATE TABLE t (a INT) TABLESPACE users PCTFREE 10;")).prompt_text
        assert out == "CREATE TABLE t (a INT) ;"

    def test_literal_dash(self):
        assert prune(A("SELECT '-- keep' FROM d")).prompt_text == "SELECT '-- keep' FROM d"

    def test_leading_comment(self):
        assert prune(A("/* c */ SELECT 1")).prompt_text == "SELECT 1"

    def test_comment_between_words_keeps_separation(self):
        assert prune(A("SELECT a/*x*/FROM t")).prompt_text == "SELECT a FROM t"

    def test_clause_not_outside_ddl(self):
        text = "SELECT logging FROM t"
        assert prune(A(text)).prompt_text == text

    def test_input_tokens_match(self):
        ctx = prune(A(PROGRAMS[1]))
        assert ctx.input_tokens == count_tokens(ctx.prompt_text)


class TestMinify:
    def test_whitespace_example(self):
        assert minify(A("SELECT  a ,\n  b\tFROM t")).prompt_text == "SELECT a,b FROM t"

    def test_literal_spaces(self):
        assert minify(A("SELECT 'a  b'")).prompt_text == "SELECT 'a  b'"

    def test_no_fusion(self):
        out = minify(A("SELECT a - -b, 1 . 5 FROM t")).prompt_text
        assert [t.text for t in lex(out) if not t.kind.is_trivia] == [
            "SELECT", "a", "-", "-", "b", ",", "1", ".", "5", "FROM", "t"
        ]

    @pytest.mark.parametrize("text", PROGRAMS)
    def test_semantic_safety(self, text):
        assert structurally_equal(parse(minify(A(text)).prompt_text), parse(text))


class TestDsl:
    def test_paper_example(self):
        d = SubstitutionDictionary([("CREATE OR REPLACE", "CR:")])
        out = dsl_compress(A("CREATE OR REPLACE PROCEDURE p IS BEGIN NULL; END;"), StrategyConfig(dictionary=d))
        assert out.prompt_text == "LEGEND CREATE OR REPLACE=CR:\nCR: PROCEDURE p IS BEGIN NULL;END;"

    def test_empty_dictionary_is_minify(self):
        text = PROGRAMS[2]
        out = dsl_compress(A(text), StrategyConfig(dictionary=SubstitutionDictionary([])))
        assert out.prompt_text == minify(A(text)).prompt_text

    def test_default_dictionary_order(self):
        keys = [k for k, _ in DEFAULT_DICTIONARY]
        assert keys == sorted(keys, key=lambda k: (-len(k), k))
        assert keys[0] == "EXCEPTION WHEN OTHERS THEN"

    def test_longest_first(self):
        out = dsl_compress(A("CREATE PACKAGE BODY pk IS END pk;")).prompt_text
        assert out.splitlines()[1] == "CREATE PKB: pk IS END pk;"

    def test_literals_not_replaced(self):
        out = dsl_compress(A("SELECT 'PROCEDURE' FROM t")).prompt_text
        assert out == "SELECT 'PROCEDURE' FROM t"

    def test_collision(self):
        with pytest.raises(ReplacementCollision):
            dsl_compress(A("BEGIN x := CR:y; END;"))

    @pytest.mark.parametrize(
        "pairs",
        [
            [("A", "x"), ("A", "y")],
            [("A", "x"), ("B", "x")],
            [("PROCEDURE", "PROC")],
        ],
    )
    def test_invalid_dictionary(self, pairs):
        with pytest.raises(InvalidDictionary):
            SubstitutionDictionary(pairs)

    def test_sorted_regardless_of_input_order(self):
        d = SubstitutionDictionary([("B", "b:"), ("AA", "a:"), ("A", "c:")])
        assert [k for k, _ in d] == ["AA", "A", "B"]


class TestMetadata:
    def test_table(self):
        m = extract_metadata(A("CREATE TABLE t (a INT, b INT)"))
        assert (m.object_kind, m.object_name, m.column_count, m.plsql_percentage) == ("TABLE", "t", 2, 0)

    def test_query(self):
        m = extract_metadata(A("SELECT 1"))
        assert m.object_kind == "QUERY" and m.column_count is None

    def test_exception_handlers(self):
        assert extract_metadata(A(PROGRAMS[2])).has_exception_handlers
        assert not extract_metadata(A(PROGRAMS[0])).has_exception_handlers

    def test_plsql_matches_profile(self):
        for text in PROGRAMS:
            assert extract_metadata(A(text)).plsql_percentage == plsql_ratio(A(text))

    def test_refs(self):
        m = extract_metadata(A("CREATE TABLE c (id INT REFERENCES p(id)); INSERT INTO s.x SELECT * FROM p"))
        assert m.referenced_tables == ("p", "s.x")

    def test_serialization_example(self):
        out = augment_metadata(A("CREATE TABLE t (a INT)")).prompt_text
        assert out == "META kind=TABLE name=t cols=1 plsql=0 exc=false\nCREATE TABLE t(a INT)"

    def test_deterministic(self):
        assert augment_metadata(A(PROGRAMS[2])) == augment_metadata(A(PROGRAMS[2]))


class TestRefactorQuotes:
    def test_strip(self):
        out = refactor_quotes(A('SELECT "USER_NAME" FROM "APP_USERS"')).prompt_text
        assert out == "SELECT USER_NAME FROM APP_USERS"

    @pytest.mark.parametrize("quoted", ['"SELECT"', '"weird col"', '"Mixed"', '"1ABC"'])
    def test_kept(self, quoted):
        assert quoted in refactor_quotes(A(f"SELECT {quoted} FROM t")).prompt_text

    def test_no_fusion_after_strip(self):
        assert refactor_quotes(A('SELECT"ABC"FROM t')).prompt_text == "SELECT ABC FROM t"


class TestDistill:
    def test_procedure(self):
        body = "\n".join(f"  v := v + {i};" for i in range(100))
        text = f"CREATE PROCEDURE p(a IN NUMBER) IS v NUMBER; BEGIN\n{body}\nEND;"
        assert distill(A(text)).prompt_text == "CREATE PROCEDURE p(a IN NUMBER)IS " + BODY_MARKER

    def test_table(self):
        assert distill(A("CREATE TABLE t (a INT PRIMARY KEY) TABLESPACE u")).prompt_text == "CREATE TABLE t(a INT)"

    def test_drops_index_grant_block(self):
        text = "CREATE TABLE t (a INT); CREATE INDEX i ON t(a); GRANT SELECT ON t TO u; BEGIN NULL; END;"
        assert distill(A(text)).prompt_text == "CREATE TABLE t(a INT);"

    def test_nothing(self):
        with pytest.raises(NothingToDistill):
            distill(A("SELECT 1 FROM dual"))

    def test_tiny_body_not_inflated(self):
        text = "CREATE PROCEDURE p IS BEGIN NULL; END;"
        assert count_tokens(distill(A(text)).prompt_text) <= count_tokens(text)

    @pytest.mark.parametrize("text", PROGRAMS[1:3])
    def test_monotone(self, text):
        assert distill(A(text)).input_tokens <= count_tokens(text)


class TestAstMinify:
    def test_parens(self):
        assert ast_minify(A("SELECT ((a)) FROM t")).prompt_text == "SELECT a FROM t"

    def test_canonical(self):
        text = PROGRAMS[0]
        minified = minify(A(text)).prompt_text
        assert ast_minify(A(text)).prompt_text == ast_minify(A(minified)).prompt_text

    def test_unparseable(self):
        with pytest.raises(ParseRequired):
            ast_minify(A("SELECT FROM"))

    @pytest.mark.parametrize("text", PROGRAMS)
    def test_safety(self, text):
        out = ast_minify(A(text)).prompt_text
        assert structurally_equal(parse(out), prune_nodes(parse(text)))


class TestRouting:
    @pytest.mark.parametrize(
        "text,branch,fn",
        [
            ('SELECT "A" FROM t', StrategyId.REFACTORING, refactor_quotes),
            ("BEGIN NULL; NULL; END;", StrategyId.DSL, dsl_compress),
            (PROGRAMS[2], StrategyId.MINIFICATION, minify),
        ],
    )
    def test_branch(self, text, branch, fn):
        ctx = route_adaptive(A(text))
        assert ctx.routed_to is branch
        assert ctx.strategy is StrategyId.ADAPTIVE
        assert ctx.prompt_text == fn(A(text)).prompt_text


class TestMasking:
    def test_example(self):
        ctx = mask_identifiers(A("SELECT user_name FROM app_users"))
        assert ctx.prompt_text == "SELECT X_2 FROM X_1"
        assert ctx.alias_map.forward() == {"app_users": "X_1", "user_name": "X_2"}
        assert demask("SELECT X_2 FROM X_1", ctx.alias_map) == "SELECT user_name FROM app_users"

    def test_no_identifiers(self):
        with pytest.warns(NoMaskableIdentifiers):
            ctx = mask_identifiers(A("SELECT 1"))
        assert ctx.prompt_text == "SELECT 1" and len(ctx.alias_map) == 0

    def test_empty_map_identity(self):
        assert demask("SELECT X_1", AliasMap("X")) == "SELECT X_1"

    def test_user_trap(self):
        text = "SELECT USER, USER_ID, user_id_2 FROM users WHERE USER_ID = USER"
        ctx = mask_identifiers(A(text))
        assert demask(ctx.prompt_text, ctx.alias_map) == minify(A(text)).prompt_text
        assert "USER" not in {t.text for t in lex(ctx.prompt_text)}

    def test_fresh_prefix(self):
        ctx = mask_identifiers(A("SELECT X_1, x_7 FROM t"))
        assert ctx.alias_map.prefix == "XX"

    def test_literal_untouched(self):
        amap = AliasMap("X", (("t", "X_1"),))
        assert demask("SELECT 'X_1' FROM X_1", amap) == "SELECT 'X_1' FROM t"

    def test_dollar_body(self):
        amap = AliasMap("X", (("tbl", "X_1"),))
        assert demask("DO $$ BEGIN DELETE FROM x_1; END $$", amap) == "DO $$ BEGIN DELETE FROM tbl; END $$"

    def test_unknown_alias_warning(self):
        amap = AliasMap("X", (("tbl", "X_1"),))
        assert demask_with_warnings("SELECT X_9 FROM X_1", amap) == ("SELECT X_9 FROM tbl", ["X_9"])

    def test_unlexable_output(self):
        amap = AliasMap("X", (("tbl", "X_1"),))
        assert demask("SELECT 'X_1' FROM X_1 WHERE a = 'open", amap) == "SELECT 'X_1' FROM tbl WHERE a = 'open"

    def test_alias_map_json(self):
        amap = mask_identifiers(A("SELECT a FROM t")).alias_map
        assert AliasMap.from_json(amap.to_json()) == amap

    def test_bijection(self):
        with pytest.raises(ValueError):
            AliasMap("X", (("a", "X_1"), ("b", "X_1")))


class TestConstraints:
    def test_empty_base(self):
        assert constrained_system_prompt("") == OUTPUT_CONSTRAINTS

    def test_idempotent(self):
        once = constrained_system_prompt("base")
        assert constrained_system_prompt(once) == once
        assert once.count("#OUTPUT-CONSTRAINTS v1") == 1

    def test_prompt_restricted_tokens(self):
        text = PROGRAMS[2]
        ctx = apply_strategy(StrategyId.PROMPT_RESTRICTED, A(text))
        assert ctx.input_tokens == apply_strategy(StrategyId.BASELINE, A(text)).input_tokens
        assert ctx.system_prompt_constraints

    def test_hybrid(self):
        for text in PROGRAMS:
            h = apply_strategy(StrategyId.HYBRID, A(text))
            assert h.prompt_text == route_adaptive(A(text)).prompt_text and h.system_prompt_constraints


class TestContextInvariants:
    @pytest.mark.parametrize("sid", list(StrategyId))
    def test_alias_map_iff_masking(self, sid):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ctx = apply_strategy(sid, A(PROGRAMS[1]))
        assert (ctx.alias_map is not None) == (sid is StrategyId.IDENTIFIER_MASKING)
        assert ctx.input_tokens == count_tokens(ctx.prompt_text)
        assert ctx.strategy is sid

    @pytest.mark.parametrize("sid", [s for s in StrategyId if s not in (StrategyId.BASELINE, StrategyId.DISTILLATION)])
    @pytest.mark.parametrize("text", PROGRAMS)
    def test_literal_immunity(self, sid, text):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ctx = apply_strategy(sid, A(text))
        assert literals(ctx.prompt_text) == literals(text)


@settings(max_examples=150, deadline=None)
@given(loose_sql)
def test_idempotence_and_monotonicity(text):
    assume(lexable(text))
    for f in (prune, minify, refactor_quotes):
        once = f(A(text)).prompt_text
        assert f(A(once)).prompt_text == once
    p = prune(A(text)).prompt_text
    m = minify(A(text)).prompt_text
    assert count_tokens(p) <= count_tokens(text)
    assert count_tokens(m) <= count_tokens(p)
    assert literals(p) == literals(text) == literals(m)
    assert not any(t.kind.is_comment for t in lex(p))


@settings(max_examples=150, deadline=None)
@given(loose_sql)
def test_minify_preserves_significant_tokens(text):
    assume(lexable(text))
    m = minify(A(text)).prompt_text
    p = prune(A(text)).prompt_text
    sig = lambda s: [(t.kind, t.text) for t in lex(s) if not t.kind.is_trivia]
    assert sig(m) == sig(p)


@settings(max_examples=150, deadline=None)
@given(loose_sql)
def test_mask_round_trip(text):
    assume(lexable(text))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ctx = mask_identifiers(A(text))
    minified = minify(A(text)).prompt_text
    assert demask(ctx.prompt_text, ctx.alias_map) == minified
    pat = re.compile(rf"{ctx.alias_map.prefix}_[0-9]+", re.IGNORECASE)
    assert not any(pat.fullmatch(t.text) for t in lex(minified))
