"""Per-case migration with quality gates and fallback; whole experiments."""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.counting import count_tokens
from sqltokopt.core.lexer import Dialect
from sqltokopt.core.parser import is_valid
from sqltokopt.errors import (
    BudgetUnsatisfiable,
    CacheMiss,
    GatewayError,
    GenerationFailed,
    LexError,
    StrategyError,
)
from sqltokopt.gateway import Backend, GenerationRequest, DEFAULT_MODEL
from sqltokopt.metrics import (
    CaseEvaluation,
    DeltaReport,
    StrategyReport,
    codebleu,
    delta_from_baseline,
    semantic_match,
)
from sqltokopt.pipeline.corpus import MigrationCase
from sqltokopt.pipeline.selection import BudgetConfig, BudgetExceeded, enforce_budget, next_rung
from sqltokopt.strategies import (
    DEFAULT_SYSTEM_PROMPT,
    OptimizedContext,
    StrategyConfig,
    StrategyId,
    apply_strategy,
    demask,
    system_prompt_for,
)

DEFAULT_GATE = 0.85


@dataclass(frozen=True)
class MigrationContext:
    """Optional specification bundle sent alongside the code.

    Each present field becomes one prompt line ahead of the code, with
    newlines folded, so code strategies never rewrite prose.
    """

    specification_notes: Optional[str] = None
    migration_rules: Optional[str] = None
    schema_context: Optional[str] = None

    def header_lines(self) -> List[str]:
        out = []
        for tag, value in (("SPEC", self.specification_notes), ("RULES", self.migration_rules),
                           ("SCHEMA", self.schema_context)):
            if value and value.strip():
                out.append(f"{tag} " + " ".join(value.split()))
        return out


@dataclass(frozen=True)
class QualityGates:
    min_semantic_match: float = DEFAULT_GATE
    require_parse: bool = True

    def passes(self, ev: CaseEvaluation) -> bool:
        return (ev.parse_valid or not self.require_parse) and ev.semantic_match >= self.min_semantic_match


@dataclass(frozen=True)
class RunSettings:
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    alpha: float = 0.5
    beta: float = 0.5
    strategy_config: StrategyConfig = StrategyConfig()
    # Replaces the built-in Postgres parser as the VSR judge, e.g. a live database check.
    validator: Optional[Callable[[str], bool]] = None


@dataclass(frozen=True)
class CaseOutcome:
    evaluation: CaseEvaluation
    requested: StrategyId
    final: StrategyId
    attempts: Tuple[StrategyId, ...]
    fence_stripped: bool = False
    output_text: str = ""
    error: Optional[str] = None
    missing_key: Optional[str] = None


_FENCE_OPEN = re.compile(r"\A\s*```[A-Za-z0-9_+-]*[ \t]*\n?")
_FENCE_CLOSE = re.compile(r"\n?```\s*\Z")


def strip_fences(text: str) -> Tuple[str, bool]:
    """Remove a leading and trailing triple-backtick fence pair."""
    opened = _FENCE_OPEN.match(text)
    if not opened:
        return text, False
    body = text[opened.end():]
    body = _FENCE_CLOSE.sub("", body)
    return body.strip(), True


def build_prompt(ctx: OptimizedContext, context: Optional[MigrationContext], counter=None) -> OptimizedContext:
    lines = context.header_lines() if context else []
    if not lines:
        return ctx
    text = "\n".join(lines + [ctx.prompt_text])
    return replace(ctx, prompt_text=text, input_tokens=count_tokens(text, counter))


def evaluate_output(
    case_id: str, output: str, reference: str, input_tokens: int, output_tokens: int,
    alpha: float = 0.5, beta: float = 0.5, validator: Optional[Callable[[str], bool]] = None,
) -> CaseEvaluation:
    valid = validator(output) if validator is not None else is_valid(output, Dialect.POSTGRES)
    return CaseEvaluation(
        case_id,
        parse_valid=bool(valid),
        exact=output == reference,
        semantic_match=semantic_match(output, reference),
        codebleu=codebleu(output, reference, alpha, beta),
        input_tokens=input_tokens,
        output_tokens=output_tokens,
    )


def _generate(case_id, source, strategy, context, backend, budget, settings):
    """Optimize, check the budget, call the model and clean the reply."""
    artifact = SqlArtifact(source, Dialect.ORACLE, case_id)
    try:
        ctx = apply_strategy(strategy, artifact, settings.strategy_config)
    except (StrategyError, LexError) as exc:
        raise _Skip(f"{strategy.value}: {exc}") from None
    ctx = build_prompt(ctx, context, settings.strategy_config.counter)
    if budget is not None:
        verdict = enforce_budget(ctx, budget, source)
        if isinstance(verdict, BudgetExceeded):
            if strategy is StrategyId.BASELINE:
                raise BudgetUnsatisfiable(f"{case_id}: baseline exceeds budget by {verdict.overshoot} tokens")
            raise _Skip(f"{strategy.value}: over budget by {verdict.overshoot}")
    if not ctx.prompt_text:
        raise _Skip(f"{strategy.value}: empty prompt")
    request = GenerationRequest(
        ctx.prompt_text, system_prompt_for(ctx, settings.system_prompt), settings.model_name, settings.temperature
    )
    result = backend.generate(request)
    text = demask(result.text, ctx.alias_map)
    text, fenced = strip_fences(text)
    return ctx, text, fenced, result.output_tokens


def _attempt(case, strategy, context, backend, budget, settings):
    """One rung.  Returns (outcome fields) or raises _Skip to fall through."""
    ctx, text, fenced, out_tokens = _generate(
        case.id, case.input_db_query, strategy, context, backend, budget, settings
    )
    ev = evaluate_output(case.id, text, case.output_db_query, ctx.input_tokens, out_tokens,
                         settings.alpha, settings.beta, settings.validator)
    return ev, text, fenced


class _Skip(Exception):
    pass


def run_case(
    case: MigrationCase,
    strategy: StrategyId,
    backend: Backend,
    context: Optional[MigrationContext] = None,
    budget: Optional[BudgetConfig] = None,
    gates: Optional[QualityGates] = QualityGates(),
    settings: RunSettings = RunSettings(),
) -> CaseOutcome:
    """Migrate one case.  With *gates* set, a failing rung is retried one step
    down the fallback ladder; ``gates=None`` measures the raw strategy."""
    attempts: List[StrategyId] = []
    current: Optional[StrategyId] = strategy
    last_skip = None
    last = None
    while current is not None:
        attempts.append(current)
        try:
            ev, text, fenced = _attempt(case, current, context, backend, budget, settings)
        except _Skip as skip:
            last_skip = str(skip)
            if gates is None:
                raise GenerationFailed(f"{case.id}: {last_skip}") from None
            current = next_rung(current)
            continue
        except CacheMiss:
            raise
        except GatewayError as exc:
            raise GenerationFailed(f"{case.id}: {exc}") from exc
        last = CaseOutcome(ev, strategy, current, tuple(attempts), fenced, text)
        if gates is None or gates.passes(ev):
            return last
        current = next_rung(current)
    if last is not None:
        return last
    raise GenerationFailed(f"{case.id}: every rung failed ({last_skip})")


@dataclass(frozen=True)
class Migration:
    text: str
    requested: StrategyId
    final: StrategyId
    attempts: Tuple[StrategyId, ...]
    parse_valid: bool
    input_tokens: int
    output_tokens: int
    fence_stripped: bool = False


def migrate(
    source: str,
    strategy: StrategyId,
    backend: Backend,
    context: Optional[MigrationContext] = None,
    budget: Optional[BudgetConfig] = None,
    require_parse: bool = True,
    settings: RunSettings = RunSettings(),
) -> Migration:
    """Translate one artifact with no reference at hand.

    Only the syntax gate applies; an unparseable reply moves one rung down
    the ladder.  The last reply is returned even if every rung fails it.
    """
    attempts: List[StrategyId] = []
    current: Optional[StrategyId] = strategy
    last = None
    last_skip = None
    while current is not None:
        attempts.append(current)
        try:
            ctx, text, fenced, out_tokens = _generate("input", source, current, context, backend, budget, settings)
        except _Skip as skip:
            last_skip = str(skip)
            current = next_rung(current)
            continue
        except CacheMiss:
            raise
        except GatewayError as exc:
            raise GenerationFailed(str(exc)) from exc
        valid = settings.validator(text) if settings.validator is not None else is_valid(text, Dialect.POSTGRES)
        last = Migration(text, strategy, current, tuple(attempts), bool(valid), ctx.input_tokens, out_tokens, fenced)
        if valid or not require_parse:
            return last
        current = next_rung(current)
    if last is not None:
        return last
    raise GenerationFailed(f"every rung failed ({last_skip})")


@dataclass
class ExperimentResult:
    reports: List[StrategyReport]
    deltas: List[DeltaReport]
    outcomes: List[CaseOutcome] = field(default_factory=list)

    @property
    def missing_keys(self) -> List[str]:
        keys = []
        for o in self.outcomes:
            if o.missing_key and o.missing_key not in keys:
                keys.append(o.missing_key)
        return keys


def _failed(case: MigrationCase, strategy: StrategyId, message: str, missing_key=None, settings=RunSettings()):
    try:
        ctx = apply_strategy(strategy, SqlArtifact(case.input_db_query, Dialect.ORACLE, case.id),
                             settings.strategy_config)
        in_tokens = ctx.input_tokens
    except Exception:
        in_tokens = 0
    ev = CaseEvaluation(case.id, False, False, 0.0, 0.0, in_tokens, 0)
    return CaseOutcome(ev, strategy, strategy, (strategy,), error=message, missing_key=missing_key)


def _run_measured(case, strategy, backend, context, budget, settings) -> CaseOutcome:
    try:
        return run_case(case, strategy, backend, context, budget, None, settings)
    except CacheMiss as miss:
        return _failed(case, strategy, str(miss), miss.key, settings)
    except (GenerationFailed, BudgetUnsatisfiable) as exc:
        return _failed(case, strategy, str(exc), None, settings)


def run_experiment(
    corpus: Sequence[MigrationCase],
    strategies: Sequence[StrategyId],
    backend: Backend,
    context: Optional[MigrationContext] = None,
    budget: Optional[BudgetConfig] = None,
    settings: RunSettings = RunSettings(),
    workers: int = 4,
) -> ExperimentResult:
    """Measure each raw strategy over the corpus (no fallback).

    Per-case failures count as invalid output instead of aborting; missing
    replay entries are collected on the result.
    """
    cases = sorted(corpus, key=lambda c: c.id)
    reports: List[StrategyReport] = []
    outcomes: List[CaseOutcome] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for sid in strategies:
            rows = list(pool.map(lambda c: _run_measured(c, sid, backend, context, budget, settings), cases))
            outcomes.extend(rows)
            reports.append(StrategyReport.from_evaluations(sid, [o.evaluation for o in rows]))
    result = ExperimentResult(reports, [], outcomes)
    base = next((r for r in reports if r.strategy is StrategyId.BASELINE), None)
    # An incomplete replay run may leave the baseline all zeros; the caller
    # reports the missing keys instead of deltas.
    if base is not None and not result.missing_keys:
        result.deltas = [delta_from_baseline(r, base) for r in reports if r.strategy is not StrategyId.BASELINE]
    return result
