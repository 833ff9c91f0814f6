from __future__ import annotations

from dataclasses import dataclass

from sqltokopt.core.lexer import Dialect


@dataclass(frozen=True)
class SqlArtifact:
    """Source text in a fixed dialect."""

    text: str
    dialect: Dialect = Dialect.ORACLE
    id: str = ""

    def require_text(self) -> "SqlArtifact":
        if not self.text.strip():
            raise ValueError(f"artifact {self.id!r} is empty")
        return self
