"""Corpus handling, selection policy, experiment runs and reports."""
from sqltokopt.pipeline.config import Settings, load_settings, settings_from_mapping
from sqltokopt.pipeline.corpus import MigrationCase, load_corpus, parse_corpus, save_corpus
from sqltokopt.pipeline.report import FORMATS, emit_report, render
from sqltokopt.pipeline.runner import (
    CaseOutcome,
    ExperimentResult,
    Migration,
    MigrationContext,
    QualityGates,
    RunSettings,
    build_prompt,
    migrate,
    run_case,
    run_experiment,
    strip_fences,
)
from sqltokopt.pipeline.selection import (
    FALLBACK,
    BudgetConfig,
    BudgetExceeded,
    Objective,
    StructuralProfile,
    default_reserve,
    enforce_budget,
    ladder,
    next_rung,
    profile_artifact,
    select_strategy,
)
from sqltokopt.pipeline.synthetic import Dials, generate_synthetic_corpus

__all__ = [
    "FALLBACK",
    "FORMATS",
    "BudgetConfig",
    "BudgetExceeded",
    "CaseOutcome",
    "Dials",
    "ExperimentResult",
    "Migration",
    "MigrationCase",
    "MigrationContext",
    "Objective",
    "QualityGates",
    "RunSettings",
    "Settings",
    "StructuralProfile",
    "build_prompt",
    "default_reserve",
    "emit_report",
    "enforce_budget",
    "generate_synthetic_corpus",
    "migrate",
    "ladder",
    "load_corpus",
    "load_settings",
    "next_rung",
    "parse_corpus",
    "profile_artifact",
    "render",
    "run_case",
    "run_experiment",
    "save_corpus",
    "select_strategy",
    "settings_from_mapping",
    "strip_fences",
]
