"""Evaluation metrics: VSR, EM, SM, CodeBLEU, token efficiency, deltas."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, fields
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, List, Optional, Sequence

from sqltokopt.core.ast import subtree_fingerprints
from sqltokopt.core.lexer import Dialect, TokenKind, lex
from sqltokopt.core.parser import ParseFailure, parse
from sqltokopt.errors import (
    BaselineMismatch,
    EmptyEvaluationSet,
    EmptyReference,
    LexError,
    ZeroTokenDenominator,
)
from sqltokopt.strategies.base import StrategyId

Adjudicator = Callable[[str, str], float]
UNPARSEABLE_PENALTY = 0.5


def round_half_up(value: float, places: int = 2) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class CaseEvaluation:
    case_id: str
    parse_valid: bool
    exact: bool
    semantic_match: float
    codebleu: float
    input_tokens: int
    output_tokens: int

    def __post_init__(self):
        for name in ("semantic_match", "codebleu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")


def _require(evals: Sequence[CaseEvaluation]) -> None:
    if not evals:
        raise EmptyEvaluationSet("no cases to evaluate")


def vsr(evals: Sequence[CaseEvaluation]) -> float:
    _require(evals)
    return 100.0 * sum(e.parse_valid for e in evals) / len(evals)


def em(evals: Sequence[CaseEvaluation]) -> float:
    _require(evals)
    return 100.0 * sum(e.exact for e in evals) / len(evals)


def _tokens(text: str) -> List[str]:
    """Non-whitespace tokens; keywords upper-cased.  Unlexable text is split
    on word/non-word boundaries instead."""
    try:
        toks = lex(text, Dialect.POSTGRES)
    except LexError:
        return [w.upper() if w.isalpha() else w for w in re.findall(r"\w+|[^\w\s]", text)]
    return [t.upper if t.kind is TokenKind.KEYWORD else t.text for t in toks if t.kind is not TokenKind.WHITESPACE]


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def token_similarity_fallback(generated: str, reference: str) -> float:
    """Default adjudicator for unparseable output: symmetric LCS ratio over
    tokens, times the unparseable penalty."""
    g, r = _tokens(generated), _tokens(reference)
    if not g and not r:
        return UNPARSEABLE_PENALTY
    return UNPARSEABLE_PENALTY * 2.0 * lcs_length(g, r) / (len(g) + len(r))


def dice(a: Counter, b: Counter) -> float:
    total = sum(a.values()) + sum(b.values())
    if total == 0:
        return 1.0
    return 2.0 * sum((a & b).values()) / total


def semantic_match(generated: str, reference: str, adjudicator: Optional[Adjudicator] = None) -> float:
    """Dice coefficient over subtree fingerprints (identifiers case-folded).

    Output that does not parse goes to *adjudicator*.
    """
    g = parse(generated, Dialect.POSTGRES)
    r = parse(reference, Dialect.POSTGRES)
    if isinstance(g, ParseFailure) or isinstance(r, ParseFailure):
        return (adjudicator or token_similarity_fallback)(generated, reference)
    return dice(subtree_fingerprints(g, fold_identifiers=True), subtree_fingerprints(r, fold_identifiers=True))


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], reference: Sequence[str], max_order: int = 4) -> float:
    """Unsmoothed BLEU with brevity penalty.  The order is capped by the
    shorter sequence so short statements are not scored zero by default."""
    if not candidate or not reference:
        return 0.0
    order = min(max_order, len(candidate), len(reference))
    log_sum = 0.0
    for n in range(1, order + 1):
        cand = _ngrams(candidate, n)
        matched = sum((cand & _ngrams(reference, n)).values())
        if matched == 0:
            return 0.0
        log_sum += math.log(matched / sum(cand.values()))
    c, r = len(candidate), len(reference)
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(log_sum / order)


def keyword_match(candidate: Sequence[str], reference: Sequence[str], keywords: Counter = None) -> Optional[float]:
    ref_kw = keywords if keywords is not None else Counter()
    total = sum(ref_kw.values())
    if total == 0:
        return None
    cand_kw = Counter(t for t in candidate if t in ref_kw)
    return sum((cand_kw & ref_kw).values()) / total


def _keyword_counts(text: str) -> Counter:
    try:
        return Counter(t.upper for t in lex(text, Dialect.POSTGRES) if t.kind is TokenKind.KEYWORD)
    except LexError:
        return Counter()


def codebleu(generated: str, reference: str, alpha: float = 0.5, beta: float = 0.5) -> float:
    """alpha * n-gram BLEU + beta * reference-keyword recall, clamped to [0,1]."""
    if abs(alpha + beta - 1.0) > 1e-9:
        raise ValueError("alpha + beta must be 1")
    ref = _tokens(reference)
    if not ref:
        raise EmptyReference("reference has no tokens")
    cand = _tokens(generated)
    b = bleu(cand, ref)
    k = keyword_match(cand, ref, _keyword_counts(reference))
    score = alpha * b + beta * (b if k is None else k)
    return min(1.0, max(0.0, score))


def token_efficiency(sm: float, avg_in: float, avg_out: float) -> float:
    denom = avg_in + avg_out
    if denom <= 0:
        raise ZeroTokenDenominator("average input + output tokens is zero")
    return 1000.0 * sm / denom


@dataclass(frozen=True)
class StrategyReport:
    strategy: StrategyId
    avg_in_tokens: float
    avg_out_tokens: float
    vsr_pct: float
    em_pct: float
    sm_pct: float
    codebleu_pct: float
    te: float

    @classmethod
    def from_averages(
        cls, strategy: StrategyId, avg_in: float, avg_out: float, vsr_pct: float, em_pct: float,
        sm_pct: float, codebleu_pct: float,
    ) -> "StrategyReport":
        te = token_efficiency(sm_pct / 100.0, avg_in, avg_out)
        return cls(strategy, avg_in, avg_out, vsr_pct, em_pct, sm_pct, codebleu_pct, te)

    @classmethod
    def from_evaluations(cls, strategy: StrategyId, evals: Sequence[CaseEvaluation]) -> "StrategyReport":
        _require(evals)
        n = len(evals)
        return cls.from_averages(
            strategy,
            sum(e.input_tokens for e in evals) / n,
            sum(e.output_tokens for e in evals) / n,
            vsr(evals),
            em(evals),
            100.0 * sum(e.semantic_match for e in evals) / n,
            100.0 * sum(e.codebleu for e in evals) / n,
        )

    def te_consistent(self, tol: float = 1e-9) -> bool:
        return abs(self.te - token_efficiency(self.sm_pct / 100.0, self.avg_in_tokens, self.avg_out_tokens)) <= tol


@dataclass(frozen=True)
class DeltaReport:
    strategy: StrategyId
    d_in_pct: float
    d_out_pct: float
    d_vsr_pp: float
    d_em_pp: float
    d_sm_pp: float
    d_codebleu_pp: float
    d_te_pct: float

    def rounded(self, places: int = 2) -> "DeltaReport":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        return DeltaReport(**{k: v if k == "strategy" else round_half_up(v, places) for k, v in values.items()})


def _rel(value: float, base: float) -> float:
    if base == 0:
        raise ZeroTokenDenominator("baseline value is zero")
    return 100.0 * (value - base) / base


def delta_from_baseline(report: StrategyReport, baseline: StrategyReport) -> DeltaReport:
    """Token and TE deltas are relative percent; quality deltas are points."""
    if baseline.strategy is not StrategyId.BASELINE:
        raise BaselineMismatch(f"baseline row is {baseline.strategy.value}")
    return DeltaReport(
        report.strategy,
        _rel(report.avg_in_tokens, baseline.avg_in_tokens),
        _rel(report.avg_out_tokens, baseline.avg_out_tokens),
        report.vsr_pct - baseline.vsr_pct,
        report.em_pct - baseline.em_pct,
        report.sm_pct - baseline.sm_pct,
        report.codebleu_pct - baseline.codebleu_pct,
        _rel(report.te, baseline.te),
    )
