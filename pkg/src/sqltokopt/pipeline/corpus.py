"""Parallel Oracle/PostgreSQL corpus in JSON Lines form."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Union

from sqltokopt.core.lexer import Dialect
from sqltokopt.core.parser import ParseFailure, parse
from sqltokopt.errors import DuplicateId, InvalidReference, MalformedRecord

FIELDS = ("id", "input_db_query", "output_db_query")


@dataclass(frozen=True)
class MigrationCase:
    id: str
    input_db_query: str
    output_db_query: str

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "input_db_query": self.input_db_query, "output_db_query": self.output_db_query},
            ensure_ascii=False,
        )


def parse_corpus(lines: Iterable[str]) -> List[MigrationCase]:
    cases: List[MigrationCase] = []
    seen = set()
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(n, f"invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise MalformedRecord(n, "record is not an object")
        for f in FIELDS:
            if not isinstance(obj.get(f), str) or not obj[f].strip():
                raise MalformedRecord(n, f"missing or empty {f}")
        if obj["id"] in seen:
            raise DuplicateId(n, obj["id"])
        seen.add(obj["id"])
        ref = parse(obj["output_db_query"], Dialect.POSTGRES)
        if isinstance(ref, ParseFailure):
            raise InvalidReference(n, str(ref))
        cases.append(MigrationCase(obj["id"], obj["input_db_query"], obj["output_db_query"]))
    return cases


def load_corpus(path: Union[str, Path]) -> List[MigrationCase]:
    """Read a corpus; records stay in file order."""
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def save_corpus(cases: Iterable[MigrationCase], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in cases:
            fh.write(c.to_json() + "\n")
