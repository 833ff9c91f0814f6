"""Structural profiling, budget checks and the strategy-selection policy."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.core.counting import count_tokens
from sqltokopt.core.lexer import TokenKind, lex, significant
from sqltokopt.core.parser import ParseFailure, parse
from sqltokopt.core.physical import find_physical_clauses
from sqltokopt.core.profile import plsql_ratio
from sqltokopt.errors import EmptyArtifact
from sqltokopt.strategies.base import OptimizedContext, StrategyId

LONG_IDENTIFIER = 20
RESERVE_FACTOR = 1.1


class Objective(enum.Enum):
    SEMANTIC_CRITICAL = "semantic-critical"
    BALANCED = "balanced"
    COST_CRITICAL = "cost-critical"


@dataclass(frozen=True)
class StructuralProfile:
    plsql_percentage: float
    has_long_identifiers: bool
    has_physical_params: bool
    is_ddl_only: bool
    objective: Objective = Objective.BALANCED

    def with_objective(self, objective: Objective) -> "StructuralProfile":
        return StructuralProfile(
            self.plsql_percentage, self.has_long_identifiers, self.has_physical_params, self.is_ddl_only, objective
        )


_DDL = frozenset({"CreateTable", "CreateIndex", "CreateSequence", "CreateView"})


def _ddl_only(text: str, dialect) -> bool:
    root = parse(text, dialect)
    if isinstance(root, ParseFailure):
        return False
    stmts = root.children if root.kind == "Script" else (root,)
    return all(s.kind in _DDL for s in stmts)


def profile_artifact(artifact: SqlArtifact, objective: Objective = Objective.BALANCED) -> StructuralProfile:
    """Raises LexError on unlexable input."""
    sig = significant(lex(artifact.text, artifact.dialect))
    try:
        p = plsql_ratio(artifact)
    except EmptyArtifact:
        p = 0.0
    long_ids = any(
        t.kind in (TokenKind.IDENTIFIER, TokenKind.QUOTED_IDENTIFIER) and len(t.text.strip('"')) >= LONG_IDENTIFIER
        for t in sig
    )
    physical = bool(find_physical_clauses(sig))
    return StructuralProfile(p, long_ids, physical, _ddl_only(artifact.text, artifact.dialect), objective)


def select_strategy(profile: StructuralProfile) -> StrategyId:
    if profile.objective is Objective.SEMANTIC_CRITICAL:
        return StrategyId.PRUNING
    if profile.objective is Objective.COST_CRITICAL and profile.is_ddl_only and profile.plsql_percentage == 0:
        return StrategyId.DISTILLATION
    return StrategyId.ADAPTIVE


FALLBACK: Dict[StrategyId, StrategyId] = {
    StrategyId.DISTILLATION: StrategyId.ADAPTIVE,
    StrategyId.DSL: StrategyId.ADAPTIVE,
    StrategyId.IDENTIFIER_MASKING: StrategyId.ADAPTIVE,
    StrategyId.HYBRID: StrategyId.ADAPTIVE,
    StrategyId.ADAPTIVE: StrategyId.PRUNING,
    StrategyId.PRUNING: StrategyId.BASELINE,
}


def next_rung(strategy: StrategyId) -> Optional[StrategyId]:
    """One step down the ladder; strategies without an entry drop to Pruning."""
    if strategy is StrategyId.BASELINE:
        return None
    return FALLBACK.get(strategy, StrategyId.PRUNING)


def ladder(strategy: StrategyId) -> Tuple[StrategyId, ...]:
    out = [strategy]
    while (nxt := next_rung(out[-1])) is not None:
        out.append(nxt)
    return tuple(out)


@dataclass(frozen=True)
class BudgetConfig:
    max_total_tokens: int
    output_reserve: Optional[int] = None

    def __post_init__(self):
        if self.max_total_tokens <= 0:
            raise ValueError("max_total_tokens must be positive")
        if self.output_reserve is not None and not 0 < self.output_reserve < self.max_total_tokens:
            raise ValueError("output_reserve must be positive and below max_total_tokens")


@dataclass(frozen=True)
class BudgetExceeded:
    overshoot: int


def default_reserve(source_text: str) -> int:
    return math.ceil(count_tokens(source_text) * RESERVE_FACTOR)


def enforce_budget(
    context: OptimizedContext, budget: BudgetConfig, source_text: str = ""
) -> Union[bool, BudgetExceeded]:
    """True when input plus the output reserve fits; otherwise the overshoot."""
    reserve = budget.output_reserve if budget.output_reserve is not None else default_reserve(source_text)
    total = context.input_tokens + reserve
    if total <= budget.max_total_tokens:
        return True
    return BudgetExceeded(total - budget.max_total_tokens)
