"""TOML configuration; every key can be overridden from the command line."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from sqltokopt.errors import ConfigError, InvalidDictionary
from sqltokopt.gateway import DEFAULT_MODEL
from sqltokopt.strategies import DEFAULT_DICTIONARY, DEFAULT_SYSTEM_PROMPT, SubstitutionDictionary


@dataclass(frozen=True)
class Settings:
    dictionary: Tuple[Tuple[str, str], ...] = DEFAULT_DICTIONARY.pairs
    alias_prefix: str = "X"
    alpha: float = 0.5
    beta: float = 0.5
    min_semantic_match: float = 0.85
    require_parse: bool = True
    max_total_tokens: Optional[int] = None
    output_reserve: Optional[int] = None
    backend: str = "mock"
    cache: Optional[str] = None
    url: Optional[str] = None
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 60.0
    max_in_flight: int = 4
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    workers: int = 4

    def substitution_dictionary(self) -> SubstitutionDictionary:
        return SubstitutionDictionary(self.dictionary)

    def override(self, **values: Any) -> "Settings":
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in values.items() if k in known and v is not None})


# section -> {toml key: settings field}
_SECTIONS: Dict[str, Dict[str, str]] = {
    "strategies": {"dictionary": "dictionary", "alias_prefix": "alias_prefix"},
    "metrics": {"alpha": "alpha", "beta": "beta"},
    "gates": {"min_semantic_match": "min_semantic_match", "require_parse": "require_parse"},
    "budget": {"max_total_tokens": "max_total_tokens", "output_reserve": "output_reserve"},
    "backend": {
        "kind": "backend", "cache": "cache", "url": "url", "api_key_env": "api_key_env", "timeout": "timeout",
        "max_in_flight": "max_in_flight", "model": "model", "temperature": "temperature",
        "system_prompt": "system_prompt", "workers": "workers",
    },
}


def settings_from_mapping(data: Dict[str, Any]) -> Settings:
    values: Dict[str, Any] = {}
    for section, body in data.items():
        if section not in _SECTIONS or not isinstance(body, dict):
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in body.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[_SECTIONS[section][key]] = value
    if "dictionary" in values:
        pairs = values["dictionary"]
        if isinstance(pairs, dict):
            pairs = list(pairs.items())
        try:
            values["dictionary"] = SubstitutionDictionary([tuple(p) for p in pairs]).pairs
        except (InvalidDictionary, TypeError, ValueError) as exc:
            raise ConfigError(f"bad dictionary: {exc}") from None
    settings = Settings().override(**values)
    if abs(settings.alpha + settings.beta - 1.0) > 1e-9:
        raise ConfigError("alpha + beta must equal 1")
    return settings


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    if path is None:
        return Settings()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return settings_from_mapping(data)
