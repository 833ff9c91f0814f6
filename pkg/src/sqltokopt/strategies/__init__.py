"""The twelve prompt-side optimization strategies."""
from __future__ import annotations

from dataclasses import replace

from sqltokopt.core.artifact import SqlArtifact
from sqltokopt.errors import NoMaskableIdentifiers, NothingToDistill, ParseRequired, ReplacementCollision
from sqltokopt.strategies.base import (
    DEFAULT_DICTIONARY,
    AliasMap,
    MetadataVector,
    OptimizedContext,
    StrategyConfig,
    StrategyId,
    SubstitutionDictionary,
)
from sqltokopt.strategies.masking import demask, demask_with_warnings, mask_identifiers
from sqltokopt.strategies.prompts import (
    CONSTRAINT_SENTINEL,
    DEFAULT_SYSTEM_PROMPT,
    OUTPUT_CONSTRAINTS,
    constrained_system_prompt,
)
from sqltokopt.strategies.structural import (
    BODY_MARKER,
    ast_minify,
    augment_metadata,
    distill,
    extract_metadata,
    route,
    route_adaptive,
)
from sqltokopt.strategies.textual import apply_baseline, dsl_compress, minify, prune, refactor_quotes


def _prompt_restricted(artifact: SqlArtifact, config: StrategyConfig) -> OptimizedContext:
    return OptimizedContext.build(
        artifact.text, StrategyId.PROMPT_RESTRICTED, config.counter, system_prompt_constraints=True
    )


def _hybrid(artifact: SqlArtifact, config: StrategyConfig) -> OptimizedContext:
    ctx = route_adaptive(artifact, config)
    return replace(ctx, strategy=StrategyId.HYBRID, system_prompt_constraints=True)


_DISPATCH = {
    StrategyId.BASELINE: apply_baseline,
    StrategyId.PRUNING: prune,
    StrategyId.MINIFICATION: minify,
    StrategyId.DSL: dsl_compress,
    StrategyId.METADATA: augment_metadata,
    StrategyId.REFACTORING: refactor_quotes,
    StrategyId.DISTILLATION: distill,
    StrategyId.ADAPTIVE: route_adaptive,
    StrategyId.AST_MINIFICATION: ast_minify,
    StrategyId.IDENTIFIER_MASKING: mask_identifiers,
    StrategyId.PROMPT_RESTRICTED: _prompt_restricted,
    StrategyId.HYBRID: _hybrid,
}


def apply_strategy(
    strategy: StrategyId, artifact: SqlArtifact, config: StrategyConfig = StrategyConfig()
) -> OptimizedContext:
    return _DISPATCH[strategy](artifact, config)


def system_prompt_for(ctx: OptimizedContext, base: str = DEFAULT_SYSTEM_PROMPT) -> str:
    return constrained_system_prompt(base) if ctx.system_prompt_constraints else base


__all__ = [
    "AliasMap",
    "BODY_MARKER",
    "CONSTRAINT_SENTINEL",
    "DEFAULT_DICTIONARY",
    "DEFAULT_SYSTEM_PROMPT",
    "MetadataVector",
    "NoMaskableIdentifiers",
    "NothingToDistill",
    "OUTPUT_CONSTRAINTS",
    "OptimizedContext",
    "ParseRequired",
    "ReplacementCollision",
    "StrategyConfig",
    "StrategyId",
    "SubstitutionDictionary",
    "apply_baseline",
    "apply_strategy",
    "ast_minify",
    "augment_metadata",
    "constrained_system_prompt",
    "demask",
    "demask_with_warnings",
    "distill",
    "dsl_compress",
    "extract_metadata",
    "mask_identifiers",
    "minify",
    "prune",
    "refactor_quotes",
    "route",
    "route_adaptive",
    "system_prompt_for",
]
