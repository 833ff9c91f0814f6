"""Strategy identifiers and the value types strategies produce."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Tuple

from sqltokopt.core.counting import TokenCounter, count_tokens
from sqltokopt.core.lexer import Dialect, lex, significant
from sqltokopt.errors import InvalidDictionary


class StrategyId(enum.Enum):
    BASELINE = "Baseline"
    PRUNING = "Pruning"
    MINIFICATION = "Minification"
    DSL = "Dsl"
    METADATA = "Metadata"
    REFACTORING = "Refactoring"
    DISTILLATION = "Distillation"
    ADAPTIVE = "Adaptive"
    AST_MINIFICATION = "AstMinification"
    IDENTIFIER_MASKING = "IdentifierMasking"
    PROMPT_RESTRICTED = "PromptRestricted"
    HYBRID = "Hybrid"

    @property
    def cli_name(self) -> str:
        return _CLI_NAMES[self]

    @property
    def short_name(self) -> str:
        """Compact alias used in routing summaries."""
        return _SHORT_NAMES[self]

    @property
    def label(self) -> str:
        """Row label used in reports."""
        return _LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "StrategyId":
        """Accept the CLI name, a short alias, the enum value or the report label."""
        key = name.strip().lower().replace("_", "-")
        for sid in cls:
            if key in (sid.cli_name, sid.value.lower(), sid.label.lower()):
                return sid
        if key in _ALIASES:
            return _ALIASES[key]
        raise ValueError(f"unknown strategy {name!r}")


_CLI_NAMES = {
    StrategyId.BASELINE: "baseline",
    StrategyId.PRUNING: "context-pruning",
    StrategyId.MINIFICATION: "minification",
    StrategyId.DSL: "semantic-compression",
    StrategyId.METADATA: "metadata-augmentation",
    StrategyId.REFACTORING: "context-refactoring",
    StrategyId.DISTILLATION: "schema-distillation",
    StrategyId.ADAPTIVE: "adaptive-routing",
    StrategyId.AST_MINIFICATION: "ast-minification",
    StrategyId.IDENTIFIER_MASKING: "identifier-masking",
    StrategyId.PROMPT_RESTRICTED: "output-constraint-enforcement",
    StrategyId.HYBRID: "hybrid-optimization",
}

_SHORT_NAMES = {
    StrategyId.BASELINE: "baseline",
    StrategyId.PRUNING: "pruning",
    StrategyId.MINIFICATION: "minification",
    StrategyId.DSL: "dsl",
    StrategyId.METADATA: "metadata",
    StrategyId.REFACTORING: "refactoring",
    StrategyId.DISTILLATION: "distillation",
    StrategyId.ADAPTIVE: "adaptive",
    StrategyId.AST_MINIFICATION: "ast",
    StrategyId.IDENTIFIER_MASKING: "masking",
    StrategyId.PROMPT_RESTRICTED: "prompt-restricted",
    StrategyId.HYBRID: "hybrid",
}

_LABELS = {
    StrategyId.BASELINE: "Original",
    StrategyId.PRUNING: "Pruning",
    StrategyId.MINIFICATION: "Minification",
    StrategyId.DSL: "DSL",
    StrategyId.METADATA: "Metadata",
    StrategyId.REFACTORING: "Context Refactoring",
    StrategyId.DISTILLATION: "Distillation",
    StrategyId.ADAPTIVE: "Adaptive",
    StrategyId.AST_MINIFICATION: "AST-Based Minification",
    StrategyId.IDENTIFIER_MASKING: "Identifier Masking",
    StrategyId.PROMPT_RESTRICTED: "Prompt Restricted",
    StrategyId.HYBRID: "Hybrid Optimization",
}

_ALIASES = {
    "original": StrategyId.BASELINE,
    "pruning": StrategyId.PRUNING,
    "prune": StrategyId.PRUNING,
    "minify": StrategyId.MINIFICATION,
    "dsl": StrategyId.DSL,
    "metadata": StrategyId.METADATA,
    "refactoring": StrategyId.REFACTORING,
    "refactor": StrategyId.REFACTORING,
    "distillation": StrategyId.DISTILLATION,
    "distill": StrategyId.DISTILLATION,
    "adaptive": StrategyId.ADAPTIVE,
    "ast": StrategyId.AST_MINIFICATION,
    "masking": StrategyId.IDENTIFIER_MASKING,
    "mask": StrategyId.IDENTIFIER_MASKING,
    "prompt-restricted": StrategyId.PROMPT_RESTRICTED,
    "constraints": StrategyId.PROMPT_RESTRICTED,
    "hybrid": StrategyId.HYBRID,
}


class SubstitutionDictionary:
    """Ordered keyword -> replacement pairs.

    Pairs are kept sorted by keyword length (longest first), ties broken
    lexicographically, so the result of sequential substitution does not
    depend on the order the caller listed them in.
    """

    def __init__(self, pairs: Iterable[Tuple[str, str]]):
        pairs = [(k.strip(), v) for k, v in pairs]
        keys = [k.upper() for k, _ in pairs]
        values = [v for _, v in pairs]
        if len(set(keys)) != len(keys):
            raise InvalidDictionary("duplicate keyword")
        if len(set(values)) != len(values):
            raise InvalidDictionary("duplicate replacement")
        for k, v in pairs:
            if not k or not v or any(c.isspace() for c in v):
                raise InvalidDictionary(f"bad pair {k!r} -> {v!r}")
            if not significant(lex(k)):
                raise InvalidDictionary(f"keyword {k!r} has no tokens")
            for other in keys:
                if v.upper() in other:
                    raise InvalidDictionary(f"replacement {v!r} occurs inside keyword {other!r}")
        self.pairs: Tuple[Tuple[str, str], ...] = tuple(sorted(pairs, key=lambda p: (-len(p[0]), p[0])))

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, SubstitutionDictionary) and self.pairs == other.pairs

    def __repr__(self) -> str:
        return f"SubstitutionDictionary({list(self.pairs)!r})"


DEFAULT_DICTIONARY = SubstitutionDictionary(
    [
        ("CREATE OR REPLACE", "CR:"),
        ("PROCEDURE", "PRC:"),
        ("FUNCTION", "FNC:"),
        ("PACKAGE BODY", "PKB:"),
        ("PACKAGE", "PKG:"),
        ("EXCEPTION WHEN OTHERS THEN", "EXO:"),
        ("END IF", "EIF:"),
    ]
)


@dataclass(frozen=True)
class AliasMap:
    """Bijection identifier <-> alias, in alias-number order."""

    prefix: str
    entries: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        originals = [o for o, _ in self.entries]
        aliases = [a for _, a in self.entries]
        if len(set(aliases)) != len(aliases) or len(set(originals)) != len(originals):
            raise ValueError("alias map must be a bijection")

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def forward(self) -> dict:
        """identifier -> alias"""
        return dict(self.entries)

    def backward(self) -> dict:
        """alias -> identifier"""
        return {a: o for o, a in self.entries}

    def to_json(self) -> dict:
        return {"prefix": self.prefix, "aliases": self.backward()}

    @classmethod
    def from_json(cls, data: Mapping) -> "AliasMap":
        return cls(data["prefix"], tuple((o, a) for a, o in data["aliases"].items()))


@dataclass(frozen=True)
class MetadataVector:
    object_kind: str
    object_name: Optional[str] = None
    referenced_tables: Tuple[str, ...] = ()
    column_count: Optional[int] = None
    plsql_percentage: float = 0.0
    has_exception_handlers: bool = False

    def serialize(self) -> str:
        parts = [f"kind={self.object_kind}"]
        if self.object_name:
            parts.append(f"name={self.object_name}")
        if self.column_count is not None:
            parts.append(f"cols={self.column_count}")
        if self.referenced_tables:
            parts.append("refs=" + ",".join(self.referenced_tables))
        pct = f"{self.plsql_percentage:.1f}".rstrip("0").rstrip(".")
        parts.append(f"plsql={pct}")
        parts.append(f"exc={'true' if self.has_exception_handlers else 'false'}")
        return "META " + " ".join(parts)


@dataclass(frozen=True)
class StrategyConfig:
    dictionary: SubstitutionDictionary = DEFAULT_DICTIONARY
    alias_prefix: str = "X"
    counter: Optional[TokenCounter] = None
    dialect: Dialect = Dialect.ORACLE


@dataclass(frozen=True)
class OptimizedContext:
    """What goes to the model: prompt text plus how it was produced."""

    prompt_text: str
    strategy: StrategyId
    input_tokens: int
    alias_map: Optional[AliasMap] = None
    system_prompt_constraints: bool = False
    routed_to: Optional[StrategyId] = None
    notes: Tuple[str, ...] = field(default=())

    @classmethod
    def build(cls, text: str, strategy: StrategyId, counter: Optional[TokenCounter] = None, **kw) -> "OptimizedContext":
        return cls(text, strategy, count_tokens(text, counter), **kw)
