"""System prompt text and the output-constraint block."""

DEFAULT_SYSTEM_PROMPT = (
    "You are a database migration engine. Translate the given Oracle SQL/PL-SQL "
    "to semantically equivalent PostgreSQL."
)

CONSTRAINT_SENTINEL = "#OUTPUT-CONSTRAINTS v1"

OUTPUT_CONSTRAINTS = (
    CONSTRAINT_SENTINEL
    + "\nReturn ONLY the migrated PostgreSQL code."
    + "\nNo markdown fences. No comments. No explanations."
    + "\nUse single spaces; no blank lines."
)


def constrained_system_prompt(base: str) -> str:
    """Append the constraint block once; a second call is a no-op."""
    if CONSTRAINT_SENTINEL in base.splitlines():
        return base
    if not base:
        return OUTPUT_CONSTRAINTS
    return base + "\n" + OUTPUT_CONSTRAINTS
