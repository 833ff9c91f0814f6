"""The shipped reserved-word list (R)."""
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def reserved_words() -> frozenset:
    text = resources.files("sqltokopt").joinpath("data/reserved_words.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.upper())
    return frozenset(words)


def is_reserved(word: str) -> bool:
    return word.upper() in reserved_words()
