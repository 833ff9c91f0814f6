import csv
import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqltokopt.core import SqlArtifact, lex, plsql_ratio
from sqltokopt.core.lexer import significant
from sqltokopt.core.lexer import Dialect
from sqltokopt.core.parser import is_valid
from sqltokopt.core.physical import find_physical_clauses
from sqltokopt.errors import (
    BudgetUnsatisfiable,
    CacheMiss,
    ConfigError,
    DuplicateId,
    GenerationFailed,
    InvalidReference,
    MalformedRecord,
)
from sqltokopt.gateway import BackendKind, GenerationResult, MockBackend, ReplayBackend, ReplayCache, sql_payload
from sqltokopt.metrics import StrategyReport
from sqltokopt.pipeline import (
    FALLBACK,
    BudgetConfig,
    BudgetExceeded,
    Dials,
    MigrationCase,
    MigrationContext,
    Objective,
    QualityGates,
    RunSettings,
    StructuralProfile,
    build_prompt,
    default_reserve,
    emit_report,
    enforce_budget,
    generate_synthetic_corpus,
    ladder,
    load_corpus,
    load_settings,
    migrate,
    parse_corpus,
    profile_artifact,
    render,
    run_case,
    run_experiment,
    save_corpus,
    select_strategy,
    settings_from_mapping,
    strip_fences,
)
from sqltokopt.pipeline.report import DELTA_COLUMNS, REPORT_COLUMNS, report_rows
from sqltokopt.strategies import BODY_MARKER, OptimizedContext, StrategyId, minify

import tables

ORACLE_PROC = """CREATE OR REPLACE PROCEDURE bump(p_id IN NUMBER) IS
  v_total NUMBER := 0;
BEGIN
  -- refresh
  UPDATE accounts SET total = total + 1 WHERE id = p_id;
  COMMIT;
END bump;
/"""

PG_TABLE = "CREATE TABLE t (a INT, b TEXT);"


def _line(**kw):
    return json.dumps(kw)


# -- corpus -------------------------------------------------------------------
def test_corpus_two_lines_in_order(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(
        _line(id="q2", input_db_query="SELECT 1 FROM dual", output_db_query="SELECT 1;") + "\n"
        + _line(id="q1", input_db_query="SELECT 2 FROM dual", output_db_query="SELECT 2;") + "\n\n"
    )
    cases = load_corpus(path)
    assert [c.id for c in cases] == ["q2", "q1"]


def test_corpus_missing_field():
    with pytest.raises(MalformedRecord) as exc:
        parse_corpus([_line(id="q1", input_db_query="SELECT 1")])
    assert exc.value.line == 1


def test_corpus_bad_json_reports_line():
    good = _line(id="a", input_db_query="SELECT 1", output_db_query="SELECT 1;")
    with pytest.raises(MalformedRecord) as exc:
        parse_corpus([good, "{not json"])
    assert exc.value.line == 2


def test_corpus_duplicate_id():
    row = _line(id="q1", input_db_query="SELECT 1", output_db_query="SELECT 1;")
    with pytest.raises(DuplicateId):
        parse_corpus([row, row])


def test_corpus_rejects_unparseable_reference():
    with pytest.raises(InvalidReference) as exc:
        parse_corpus([_line(id="q1", input_db_query="SELECT 1", output_db_query="BEGIN NULL; END;")])
    assert exc.value.line == 1


def test_corpus_rejects_empty_text():
    with pytest.raises(MalformedRecord):
        parse_corpus([_line(id="q1", input_db_query="  ", output_db_query="SELECT 1;")])


def test_corpus_round_trip(tmp_path):
    cases = generate_synthetic_corpus(3, 5)
    save_corpus(cases, tmp_path / "c.jsonl")
    assert load_corpus(tmp_path / "c.jsonl") == cases


# -- budget -------------------------------------------------------------------
def _ctx(n):
    return OptimizedContext("x", StrategyId.BASELINE, n)


def test_budget_overshoot():
    assert enforce_budget(_ctx(500), BudgetConfig(1000, 600)) == BudgetExceeded(100)


@pytest.mark.parametrize("n", [300, 400])
def test_budget_passes(n):
    assert enforce_budget(_ctx(n), BudgetConfig(1000, 600)) is True


def test_default_reserve_rounds_up():
    # "SELECT a" is 3 tokens; 3 * 1.1 = 3.3 -> 4
    assert default_reserve("SELECT a") == 4
    assert enforce_budget(_ctx(3), BudgetConfig(7), "SELECT a") is True
    assert enforce_budget(_ctx(4), BudgetConfig(7), "SELECT a") == BudgetExceeded(1)


@pytest.mark.parametrize("args", [(0,), (10, 10), (10, 0), (-5, None)])
def test_budget_config_validation(args):
    with pytest.raises(ValueError):
        BudgetConfig(*args)


# -- selection ----------------------------------------------------------------
def _profile(p=0.0, ddl=True, objective=Objective.BALANCED):
    return StructuralProfile(p, False, False, ddl, objective)


@pytest.mark.parametrize(
    "profile,expected",
    [
        (_profile(0, True, Objective.SEMANTIC_CRITICAL), StrategyId.PRUNING),
        (_profile(90, False, Objective.SEMANTIC_CRITICAL), StrategyId.PRUNING),
        (_profile(40, False, Objective.BALANCED), StrategyId.ADAPTIVE),
        (_profile(0, True, Objective.BALANCED), StrategyId.ADAPTIVE),
        (_profile(0, True, Objective.COST_CRITICAL), StrategyId.DISTILLATION),
        (_profile(0, False, Objective.COST_CRITICAL), StrategyId.ADAPTIVE),
        (_profile(90, False, Objective.COST_CRITICAL), StrategyId.ADAPTIVE),
    ],
)
def test_select_strategy_table(profile, expected):
    assert select_strategy(profile) is expected


@given(
    st.floats(min_value=0, max_value=100, allow_nan=False),
    st.booleans(), st.booleans(), st.booleans(), st.sampled_from(list(Objective)),
)
def test_select_strategy_never_risky_on_procedural(p, long_ids, physical, ddl, objective):
    choice = select_strategy(StructuralProfile(p, long_ids, physical, ddl, objective))
    if p > 0:
        assert choice not in (StrategyId.DISTILLATION, StrategyId.IDENTIFIER_MASKING)
    if objective is Objective.SEMANTIC_CRITICAL:
        assert choice is StrategyId.PRUNING


@pytest.mark.parametrize("sid", list(StrategyId))
def test_ladder_terminates_at_baseline(sid):
    rungs = ladder(sid)
    assert rungs[0] is sid
    assert rungs[-1] is StrategyId.BASELINE
    assert len(rungs) - 1 <= 3
    assert len(set(rungs)) == len(rungs)


def test_ladder_orders():
    assert ladder(StrategyId.DISTILLATION) == (
        StrategyId.DISTILLATION, StrategyId.ADAPTIVE, StrategyId.PRUNING, StrategyId.BASELINE)
    assert ladder(StrategyId.PRUNING) == (StrategyId.PRUNING, StrategyId.BASELINE)
    assert FALLBACK[StrategyId.IDENTIFIER_MASKING] is StrategyId.ADAPTIVE


def test_profile_of_ddl_with_storage():
    art = SqlArtifact("CREATE TABLE customer_account_history_items (a NUMBER) TABLESPACE users;")
    prof = profile_artifact(art, Objective.COST_CRITICAL)
    assert prof == StructuralProfile(0.0, True, True, True, Objective.COST_CRITICAL)


def test_profile_of_procedure():
    prof = profile_artifact(SqlArtifact(ORACLE_PROC))
    assert prof.plsql_percentage > 0
    assert not prof.is_ddl_only
    assert not prof.has_physical_params


# -- run_case -----------------------------------------------------------------
class FixedBackend:
    """Answers distillation prompts with *lossy*, everything else by echo."""

    kind = BackendKind.MOCK

    def __init__(self, lossy):
        self.lossy = lossy
        self.requests = []

    def generate(self, request):
        self.requests.append(request)
        text = self.lossy if BODY_MARKER in request.prompt else sql_payload(request.prompt)
        return GenerationResult(text, len(text) // 4, BackendKind.MOCK, request.key)


class CountingMock(MockBackend):
    def __init__(self):
        super().__init__()
        self.calls = 0

    def generate(self, request):
        self.calls += 1
        return super().generate(request)


def test_run_case_mock_baseline_identity():
    case = MigrationCase("c1", PG_TABLE, PG_TABLE)
    out = run_case(case, StrategyId.BASELINE, MockBackend())
    ev = out.evaluation
    assert ev.parse_valid and ev.exact
    assert ev.semantic_match == 1.0 and ev.codebleu == 1.0
    assert out.final is StrategyId.BASELINE and out.attempts == (StrategyId.BASELINE,)


def test_run_case_masking_round_trip():
    src = "CREATE TABLE orders (order_id INT, customer_name TEXT);"
    expected = minify(SqlArtifact(src)).prompt_text
    case = MigrationCase("c1", src, expected)
    out = run_case(case, StrategyId.IDENTIFIER_MASKING, MockBackend())
    assert out.output_text == expected
    assert out.final is StrategyId.IDENTIFIER_MASKING
    assert out.evaluation.semantic_match == 1.0


def test_run_case_distillation_falls_back():
    src = "CREATE TABLE t (a INT, b INT);\nCREATE PROCEDURE p(x IN NUMBER) IS BEGIN UPDATE t SET a = x; END;"
    ref = "CREATE TABLE t (a INT, b INT);"
    backend = FixedBackend("CREATE TABLE t (a INT);")
    out = run_case(MigrationCase("d1", src, ref), StrategyId.DISTILLATION, backend, gates=QualityGates(0.85))
    assert out.attempts[0] is StrategyId.DISTILLATION
    assert out.final is not StrategyId.DISTILLATION
    assert out.requested is StrategyId.DISTILLATION
    assert len(out.attempts) <= 4
    # the distilled reply alone would fail the gate
    first = run_case(MigrationCase("d1", src, ref), StrategyId.DISTILLATION, backend, gates=None)
    assert first.evaluation.semantic_match < 0.85


def test_run_case_without_gates_keeps_strategy():
    src = "SELECT a FROM t"
    out = run_case(MigrationCase("c", src, "SELECT b FROM u;"), StrategyId.MINIFICATION, MockBackend(), gates=None)
    assert out.final is StrategyId.MINIFICATION
    assert out.attempts == (StrategyId.MINIFICATION,)


def test_run_case_raw_strategy_error_is_generation_failure():
    case = MigrationCase("c", "SELECT a FROM t", "SELECT a FROM t;")
    with pytest.raises(GenerationFailed):
        run_case(case, StrategyId.DISTILLATION, MockBackend(), gates=None)


def test_run_case_gated_skips_inapplicable_strategy():
    case = MigrationCase("c", "SELECT a FROM t;", "SELECT a FROM t;")
    out = run_case(case, StrategyId.DISTILLATION, MockBackend())
    assert out.attempts[0] is StrategyId.DISTILLATION
    assert out.final is StrategyId.ADAPTIVE


def test_budget_unsatisfiable_issues_no_request():
    backend = CountingMock()
    case = MigrationCase("c", PG_TABLE, PG_TABLE)
    with pytest.raises(BudgetUnsatisfiable):
        run_case(case, StrategyId.BASELINE, backend, budget=BudgetConfig(10, 5))
    assert backend.calls == 0


def test_budget_gates_each_rung():
    backend = CountingMock()
    src = "SELECT a FROM t; -- " + "x " * 40
    case = MigrationCase("c", src, "SELECT a FROM t;")
    # the pruned prompt fits next to the fixed reserve, the raw text does not
    out = run_case(case, StrategyId.PRUNING, backend, budget=BudgetConfig(40, 20))
    assert out.final is StrategyId.PRUNING and backend.calls == 1
    with pytest.raises(BudgetUnsatisfiable):
        run_case(case, StrategyId.BASELINE, backend, budget=BudgetConfig(40, 20))
    assert backend.calls == 1


def test_fences_stripped_and_flagged():
    assert strip_fences("```sql\nSELECT 1;\n```") == ("SELECT 1;", True)
    assert strip_fences("```\nSELECT 1;\n```\n") == ("SELECT 1;", True)
    assert strip_fences("SELECT 1;") == ("SELECT 1;", False)

    class Fenced(MockBackend):
        def generate(self, request):
            r = super().generate(request)
            return GenerationResult("```sql\n" + r.text + "\n```", r.output_tokens, r.backend, r.cache_key)

    out = run_case(MigrationCase("c", PG_TABLE, PG_TABLE), StrategyId.BASELINE, Fenced())
    assert out.fence_stripped and out.evaluation.exact


def test_cache_miss_propagates(tmp_path):
    backend = ReplayBackend(ReplayCache(tmp_path / "empty.jsonl"))
    with pytest.raises(CacheMiss):
        run_case(MigrationCase("c", PG_TABLE, PG_TABLE), StrategyId.BASELINE, backend)


def test_context_lines_prefix_prompt():
    ctx = OptimizedContext.build("SELECT 1", StrategyId.BASELINE)
    mc = MigrationContext("target pg 15", None, "t(a int)\n u(b int)")
    out = build_prompt(ctx, mc)
    assert out.prompt_text == "SPEC target pg 15\nSCHEMA t(a int) u(b int)\nSELECT 1"
    assert out.input_tokens > ctx.input_tokens
    assert sql_payload(out.prompt_text) == "SELECT 1"


def test_custom_validator_replaces_parser():
    settings = RunSettings(validator=lambda text: False)
    out = run_case(MigrationCase("c", PG_TABLE, PG_TABLE), StrategyId.BASELINE, MockBackend(), settings=settings)
    assert not out.evaluation.parse_valid


# -- migrate (no reference) ------------------------------------------------------
def test_migrate_walks_ladder_on_invalid_syntax():
    res = migrate(ORACLE_PROC, StrategyId.ADAPTIVE, MockBackend())
    assert res.attempts == (StrategyId.ADAPTIVE, StrategyId.PRUNING, StrategyId.BASELINE)
    assert not res.parse_valid


def test_migrate_accepts_first_valid_reply():
    res = migrate("SELECT a FROM t WHERE b = 1", StrategyId.MINIFICATION, MockBackend())
    assert res.attempts == (StrategyId.MINIFICATION,)
    assert res.parse_valid and res.text == "SELECT a FROM t WHERE b=1"


# -- run_experiment -------------------------------------------------------------
@pytest.fixture(scope="module")
def corpus():
    return generate_synthetic_corpus(11, 12)


def test_experiment_shape(corpus):
    result = run_experiment(corpus, list(StrategyId), MockBackend())
    assert len(result.reports) == 12 and len(result.deltas) == 11
    assert [r.strategy for r in result.reports] == list(StrategyId)
    assert StrategyId.BASELINE not in [d.strategy for d in result.deltas]
    assert len(result.outcomes) == 12 * len(corpus)
    # no fallback in experiment mode
    assert all(o.final is o.requested for o in result.outcomes)


def test_experiment_deterministic_across_worker_counts(corpus):
    a = run_experiment(corpus, list(StrategyId), MockBackend(), workers=1)
    b = run_experiment(list(reversed(corpus)), list(StrategyId), MockBackend(), workers=8)
    assert a.reports == b.reports and a.deltas == b.deltas


def test_experiment_records_failures_as_invalid(corpus):
    result = run_experiment(corpus, [StrategyId.BASELINE, StrategyId.DISTILLATION], MockBackend())
    failed = [o for o in result.outcomes if o.error]
    assert failed
    assert all(not o.evaluation.parse_valid and o.evaluation.output_tokens == 0 for o in failed)


def test_experiment_collects_missing_keys(tmp_path, corpus):
    backend = ReplayBackend(ReplayCache(tmp_path / "none.jsonl"))
    result = run_experiment(corpus[:3], [StrategyId.BASELINE], backend)
    assert len(result.missing_keys) == 3
    assert result.deltas == []


# -- reports ------------------------------------------------------------------
@pytest.fixture(scope="module")
def published():
    data = tables.load()
    reports = [tables.report(r) for r in data["results_100"]]
    from sqltokopt.metrics import delta_from_baseline

    deltas = [delta_from_baseline(r, reports[0]) for r in reports[1:]]
    return reports, deltas


def test_csv_has_header_plus_rows(published):
    reports, _ = published
    text = render(report_rows(reports), REPORT_COLUMNS, "csv")
    lines = text.splitlines()
    assert len(lines) == 13
    assert next(csv.reader(io.StringIO(lines[0]))) == list(REPORT_COLUMNS)


def test_json_keys(published):
    reports, _ = published
    rows = json.loads(render(report_rows(reports), REPORT_COLUMNS, "json"))
    assert len(rows) == 12
    assert all(list(r) == list(REPORT_COLUMNS) for r in rows)
    assert rows[0]["Strategy"] == "Original"


def test_text_table_te_two_decimals(published):
    reports, _ = published
    text = render(report_rows(reports), REPORT_COLUMNS, "text-table")
    original = next(l for l in text.splitlines() if l.startswith("Original"))
    assert original.split()[-1] == "0.90"


def test_emit_report_all_formats(tmp_path, published):
    reports, deltas = published
    for fmt in ("json", "csv", "text-table"):
        emit_report(reports, deltas, fmt, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["deltas.csv", "deltas.json", "deltas.txt", "strategies.csv", "strategies.json", "strategies.txt"]
    header = (tmp_path / "deltas.csv").read_text().splitlines()[0]
    assert header.split(",") == list(DELTA_COLUMNS)
    pruning = (tmp_path / "deltas.csv").read_text().splitlines()[1].split(",")
    assert pruning[0] == "Pruning" and pruning[1] == "-1.19" and pruning[-1] == "+1.11"


def test_emit_report_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], [], "csv", tmp_path)


def test_report_rounds_half_up():
    r = StrategyReport(StrategyId.BASELINE, 1.005, 2.0, 100, 0, 0, 0, 0.125)
    row = report_rows([r])[0]
    assert row["AvgInTokens"] == 1.01 and row["TE"] == 0.13


# -- config -------------------------------------------------------------------
def test_load_settings(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text(
        "[strategies]\nalias_prefix = \"A\"\ndictionary = { \"PROCEDURE\" = \"PRC\", \"FUNCTION\" = \"FNC\" }\n"
        "[metrics]\nalpha = 0.7\nbeta = 0.3\n"
        "[gates]\nmin_semantic_match = 0.9\n"
        "[budget]\nmax_total_tokens = 4000\n"
        "[backend]\nkind = \"replay\"\ncache = \"c.jsonl\"\nmodel = \"m\"\n"
    )
    s = load_settings(path)
    assert s.alias_prefix == "A" and s.alpha == 0.7 and s.min_semantic_match == 0.9
    assert s.max_total_tokens == 4000 and s.backend == "replay" and s.model == "m"
    assert dict(s.dictionary) == {"PROCEDURE": "PRC", "FUNCTION": "FNC"}
    assert s.override(model=None, alpha=0.5).model == "m"


@pytest.mark.parametrize(
    "data",
    [
        {"nope": {}},
        {"metrics": {"gamma": 1}},
        {"metrics": {"alpha": 0.9, "beta": 0.9}},
        {"strategies": {"dictionary": {"SELECT": "S", "FROM": "S"}}},
    ],
)
def test_bad_settings(data):
    with pytest.raises(ConfigError):
        settings_from_mapping(data)


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[metrics\nalpha=")
    with pytest.raises(ConfigError):
        load_settings(path)


# -- synthetic corpus ------------------------------------------------------------
def test_synthetic_deterministic():
    assert generate_synthetic_corpus(1, 10) == generate_synthetic_corpus(1, 10)
    assert generate_synthetic_corpus(1, 10) != generate_synthetic_corpus(2, 10)
    assert [c.id for c in generate_synthetic_corpus(1, 3)] == ["syn-1-0000", "syn-1-0001", "syn-1-0002"]


def test_synthetic_plsql_ratio_zero():
    for case in generate_synthetic_corpus(5, 60, Dials(plsql_ratio=0.0)):
        assert plsql_ratio(SqlArtifact(case.input_db_query)) == 0


def test_synthetic_storage_density_one():
    checked = 0
    for case in generate_synthetic_corpus(5, 80, Dials(storage_density=1.0)):
        text = case.input_db_query.upper()
        if any(k in text for k in ("CREATE TABLE", "CREATE INDEX", "CREATE SEQUENCE")):
            checked += 1
            assert find_physical_clauses(significant(lex(case.input_db_query))), case.id
    assert checked > 10


def test_synthetic_references_parse():
    for case in generate_synthetic_corpus(9, 120, Dials(plsql_ratio=0.7)):
        assert is_valid(case.output_db_query, Dialect.POSTGRES), case.id


def test_synthetic_identifier_length_dial():
    for case in generate_synthetic_corpus(4, 30, Dials(identifier_length=(20, 24))):
        if "FROM dual" in case.input_db_query:
            continue  # names nothing of its own
        prof = profile_artifact(SqlArtifact(case.input_db_query))
        assert prof.has_long_identifiers, case.id


def test_dials_validate():
    with pytest.raises(ValueError):
        Dials(plsql_ratio=1.5)
    with pytest.raises(ValueError):
        Dials(identifier_length=(5, 2))
