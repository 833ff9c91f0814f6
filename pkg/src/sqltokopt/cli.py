"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 usage error.  Only the payload goes
to stdout; summaries and diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import List, Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.counting import count_tokens
from sqltokopt.core.lexer import Dialect
from sqltokopt.errors import (
    GatewayError,
    InvalidDictionary,
    MetricError,
    PipelineError,
    SqlCoreError,
    StrategyError,
)
from sqltokopt.gateway import HttpBackend, MockBackend, RecordingBackend, ReplayBackend, ReplayCache
from sqltokopt.pipeline import (
    FORMATS,
    BudgetConfig,
    Dials,
    MigrationContext,
    Objective,
    QualityGates,
    RunSettings,
    Settings,
    emit_report,
    generate_synthetic_corpus,
    load_corpus,
    load_settings,
    MigrationCase,
    migrate,
    profile_artifact,
    run_case,
    run_experiment,
    save_corpus,
    select_strategy,
)
from sqltokopt.pipeline.report import REPORT_COLUMNS, render, report_rows
from sqltokopt.strategies import StrategyConfig, StrategyId, SubstitutionDictionary, apply_strategy, route

DOMAIN_ERRORS = (SqlCoreError, StrategyError, MetricError, GatewayError, PipelineError, InvalidDictionary, OSError)


class UsageError(Exception):
    pass


def _strategy(name: str) -> StrategyId:
    try:
        return StrategyId.parse(name)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _strategy_list(value: str) -> List[StrategyId]:
    if value.strip().lower() == "all":
        return list(StrategyId)
    out = [_strategy(v) for v in value.split(",") if v.strip()]
    if not out:
        raise argparse.ArgumentTypeError("empty strategy list")
    return out


def _objective(value: str) -> Objective:
    try:
        return Objective(value)
    except ValueError:
        choices = ", ".join(o.value for o in Objective)
        raise argparse.ArgumentTypeError(f"objective must be one of: {choices}") from None


def _fraction(value: str) -> float:
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("must be within [0, 1]")
    return v


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_dictionary(path: str) -> tuple:
    """A TOML (or JSON) file of ``keyword = "replacement"`` pairs."""
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError:
        try:
            data = json.loads(raw)
        except json.JSONDecodeError:
            raise InvalidDictionary(f"{path}: neither TOML nor JSON") from None
    pairs = list(data.items()) if isinstance(data, dict) else [tuple(p) for p in data]
    return SubstitutionDictionary(pairs).pairs


# -- shared options -----------------------------------------------------------
def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML settings file")
    p.add_argument("--dict", dest="dict_path", help="substitution dictionary file (TOML or JSON)")
    p.add_argument("--alias-prefix")


def _model_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("mock", "replay", "http"))
    p.add_argument("--cache", help="replay cache (JSON Lines)")
    p.add_argument("--url", help="chat-completion endpoint for the http backend")
    p.add_argument("--api-key-env", help="environment variable holding the API key")
    p.add_argument("--timeout", type=float)
    p.add_argument("--max-in-flight", type=int)
    p.add_argument("--model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--system-prompt-file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--min-semantic-match", type=float)
    p.add_argument("--no-require-parse", dest="require_parse", action="store_const", const=False)
    p.add_argument("--max-total-tokens", type=int)
    p.add_argument("--output-reserve", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--spec-notes", help="file appended to the prompt as specification notes")
    p.add_argument("--rules", help="file appended to the prompt as migration rules")
    p.add_argument("--schema", help="file appended to the prompt as schema context")


def _settings(args) -> Settings:
    s = load_settings(args.config)
    values = {
        "alias_prefix": args.alias_prefix,
        "dictionary": _load_dictionary(args.dict_path) if args.dict_path else None,
    }
    for name in ("backend", "cache", "url", "api_key_env", "timeout", "max_in_flight", "model", "temperature",
                 "alpha", "beta", "min_semantic_match", "require_parse", "max_total_tokens", "output_reserve",
                 "workers"):
        values[name] = getattr(args, name, None)
    if getattr(args, "system_prompt_file", None):
        values["system_prompt"] = _read(args.system_prompt_file)
    s = s.override(**values)
    if abs(s.alpha + s.beta - 1.0) > 1e-9:
        raise UsageError("--alpha and --beta must sum to 1")
    return s


def _strategy_config(s: Settings) -> StrategyConfig:
    return StrategyConfig(s.substitution_dictionary(), s.alias_prefix)


def _run_settings(s: Settings) -> RunSettings:
    return RunSettings(s.model, s.temperature, s.system_prompt, s.alpha, s.beta, _strategy_config(s))


def _budget(s: Settings) -> Optional[BudgetConfig]:
    if s.max_total_tokens is None:
        return None
    try:
        return BudgetConfig(s.max_total_tokens, s.output_reserve)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _context(args) -> Optional[MigrationContext]:
    parts = [getattr(args, n, None) for n in ("spec_notes", "rules", "schema")]
    if not any(parts):
        return None
    return MigrationContext(*[_read(p) if p else None for p in parts])


def _backend(s: Settings):
    if s.backend == "mock":
        return MockBackend()
    if s.backend == "replay":
        if not s.cache:
            raise UsageError("the replay backend needs --cache")
        if not Path(s.cache).exists():
            raise UsageError(f"cache file not found: {s.cache}")
        return ReplayBackend(ReplayCache(s.cache))
    if s.backend == "http":
        if not s.url:
            raise UsageError("the http backend needs --url")
        return HttpBackend(s.url, s.api_key_env, s.timeout, max_in_flight=s.max_in_flight)
    raise UsageError(f"unknown backend {s.backend!r}")


def _saved(before: int, after: int) -> str:
    pct = 0.0 if before == 0 else 100.0 * (before - after) / before
    return f"in={before} out={after} saved={pct:.2f}%"


# -- subcommands --------------------------------------------------------------
def cmd_optimize(args) -> int:
    s = _settings(args)
    source = _read(args.input)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ctx = apply_strategy(args.strategy, SqlArtifact(source, Dialect.ORACLE, args.input), _strategy_config(s))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write(ctx.prompt_text, args.out)
    if ctx.alias_map is not None:
        sidecar = args.map or _sidecar_path(args)
        Path(sidecar).write_text(json.dumps(ctx.alias_map.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"alias map: {sidecar}", file=sys.stderr)
    if ctx.routed_to is not None:
        print(f"routed to: {ctx.routed_to.short_name}", file=sys.stderr)
    print(_saved(count_tokens(source), ctx.input_tokens), file=sys.stderr)
    return 0


def _sidecar_path(args) -> str:
    base = args.out if args.out and args.out != "-" else args.input
    if base == "-":
        return "aliases.json"
    return str(Path(base).with_suffix(Path(base).suffix + ".aliases.json"))


def cmd_migrate(args) -> int:
    s = _settings(args)
    source = _read(args.input)
    strategy = args.strategy
    if strategy is None:
        strategy = select_strategy(profile_artifact(SqlArtifact(source, Dialect.ORACLE), args.objective))
    if args.reference:
        return _migrate_gated(args, s, source, strategy)
    result = migrate(source, strategy, _backend(s), _context(args), _budget(s), s.require_parse, _run_settings(s))
    _write(result.text if result.text.endswith("\n") else result.text + "\n", args.out)
    ladder = ">".join(a.short_name for a in result.attempts)
    print(
        f"strategy={result.final.short_name} attempts={ladder} valid={str(result.parse_valid).lower()} "
        f"in={result.input_tokens} out={result.output_tokens}",
        file=sys.stderr,
    )
    if not result.parse_valid and s.require_parse:
        print("error: no rung produced PostgreSQL that parses", file=sys.stderr)
        return 1
    return 0


def _migrate_gated(args, s: Settings, source: str, strategy: StrategyId) -> int:
    """With a reference at hand both quality gates apply and the metrics are reported."""
    case = MigrationCase(Path(args.input).stem, source, _read(args.reference))
    gates = QualityGates(s.min_semantic_match, s.require_parse)
    outcome = run_case(case, strategy, _backend(s), _context(args), _budget(s), gates, _run_settings(s))
    text = outcome.output_text
    _write(text if text.endswith("\n") else text + "\n", args.out)
    ev = outcome.evaluation
    ladder = ">".join(a.short_name for a in outcome.attempts)
    print(
        f"strategy={outcome.final.short_name} attempts={ladder} valid={str(ev.parse_valid).lower()} "
        f"sm={ev.semantic_match:.4f} codebleu={ev.codebleu:.4f} in={ev.input_tokens} out={ev.output_tokens}",
        file=sys.stderr,
    )
    if not gates.passes(ev):
        print("error: no rung passed the quality gates", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    s = _settings(args)
    corpus = load_corpus(args.corpus)
    backend = _backend(s)
    result = run_experiment(corpus, args.strategies, backend, _context(args), _budget(s), _run_settings(s), s.workers)
    missing = result.missing_keys
    if missing:
        for key in missing:
            print(f"missing cache key: {key}", file=sys.stderr)
        print(f"error: {len(missing)} prompt(s) have no recorded response", file=sys.stderr)
        return 1
    for fmt in args.formats:
        for path in emit_report(result.reports, result.deltas, fmt, args.report_dir):
            print(f"wrote {path}", file=sys.stderr)
    failed = [o for o in result.outcomes if o.error]
    for o in failed:
        print(f"case failed: {o.evaluation.case_id} [{o.requested.short_name}] {o.error}", file=sys.stderr)
    _write(render(report_rows(result.reports), REPORT_COLUMNS, "text-table"), None)
    return 0


def cmd_route(args) -> int:
    source = _read(args.input)
    profile = profile_artifact(SqlArtifact(source, Dialect.ORACLE, args.input))
    lines = [
        f"plsql_percentage: {profile.plsql_percentage:.2f}",
        f"has_long_identifiers: {str(profile.has_long_identifiers).lower()}",
        f"has_physical_params: {str(profile.has_physical_params).lower()}",
        f"is_ddl_only: {str(profile.is_ddl_only).lower()}",
        f"eq11: {route(profile.plsql_percentage).short_name}",
    ]
    objectives = [args.objective] if args.objective is not None else list(Objective)
    for obj in objectives:
        lines.append(f"{obj.value}: {select_strategy(profile.with_objective(obj)).short_name}")
    _write("\n".join(lines) + "\n", None)
    return 0


def cmd_corpus_gen(args) -> int:
    try:
        dials = Dials(args.plsql_ratio, args.comment_density, args.storage_density,
                      (args.min_ident, args.max_ident), args.quoted_density)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    cases = generate_synthetic_corpus(args.seed, args.count, dials)
    if args.out and args.out != "-":
        save_corpus(cases, args.out)
    else:
        _write("".join(c.to_json() + "\n" for c in cases), None)
    print(f"generated {len(cases)} cases (seed {args.seed})", file=sys.stderr)
    return 0


def cmd_record(args) -> int:
    s = _settings(args)
    if s.backend == "replay":
        raise UsageError("record needs a generating backend (mock or http)")
    if not s.cache:
        raise UsageError("record needs --cache")
    cache = ReplayCache(s.cache)
    before = len(cache)
    backend = RecordingBackend(_backend(s), cache)
    corpus = load_corpus(args.corpus)
    result = run_experiment(corpus, args.strategies, backend, _context(args), _budget(s), _run_settings(s), s.workers)
    for o in result.outcomes:
        if o.error:
            print(f"case failed: {o.evaluation.case_id} [{o.requested.short_name}] {o.error}", file=sys.stderr)
    print(f"recorded {len(cache) - before} new response(s); cache holds {len(cache)}", file=sys.stderr)
    return 0


# -- parser -------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqltokopt", description="Token-optimized Oracle to PostgreSQL migration")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("optimize", help="apply one strategy to an Oracle file")
    p.add_argument("input", help="Oracle SQL file, or - for stdin")
    p.add_argument("--strategy", type=_strategy, default=StrategyId.BASELINE)
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--map", help="alias map sidecar path (identifier masking)")
    _common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("migrate", help="optimize, generate and demask one file")
    p.add_argument("input")
    p.add_argument("--strategy", type=_strategy, help="default: chosen from the objective")
    p.add_argument("--objective", type=_objective, default=Objective.BALANCED)
    p.add_argument("--reference", help="expected PostgreSQL; enables the semantic gate")
    p.add_argument("--out")
    _common(p)
    _model_opts(p)
    p.set_defaults(func=cmd_migrate)

    p = sub.add_parser("evaluate", help="measure strategies over a corpus and write reports")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategies", type=_strategy_list, default=list(StrategyId), help="comma list or 'all'")
    p.add_argument("--report-dir", required=True)
    p.add_argument("--formats", type=lambda v: [f.strip() for f in v.split(",")], default=list(FORMATS))
    _common(p)
    _model_opts(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("route", help="print the structural profile and strategy choices")
    p.add_argument("input")
    p.add_argument("--objective", type=_objective, help="report only this objective")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("corpus-gen", help="write a synthetic corpus as JSON Lines")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--plsql-ratio", type=_fraction, default=Dials.plsql_ratio)
    p.add_argument("--comment-density", type=_fraction, default=Dials.comment_density)
    p.add_argument("--storage-density", type=_fraction, default=Dials.storage_density)
    p.add_argument("--quoted-density", type=_fraction, default=Dials.quoted_density)
    p.add_argument("--min-ident", type=int, default=Dials.identifier_length[0])
    p.add_argument("--max-ident", type=int, default=Dials.identifier_length[1])
    p.add_argument("--out")
    p.set_defaults(func=cmd_corpus_gen)

    p = sub.add_parser("record", help="run a corpus through a backend and store responses for replay")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategies", type=_strategy_list, default=list(StrategyId))
    _common(p)
    _model_opts(p)
    p.set_defaults(func=cmd_record)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "formats", None):
        bad = [f for f in args.formats if f not in FORMATS]
        if bad:
            parser.error(f"unknown format(s): {', '.join(bad)}")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
