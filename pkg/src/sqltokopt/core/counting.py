"""Deterministic, vendor-free token counting."""
from typing import Callable, Optional

from sqltokopt import kernels

TokenCounter = Callable[[str], int]


def count_tokens(text: str, counter: Optional[TokenCounter] = None) -> int:
    """Approximate LLM subword tokens.

    Word runs (alphanumerics and underscore) cost ceil(len/4); each other
    non-space character costs 1; whitespace is free.  Pass *counter* to
    use a vendor tokenizer instead.
    """
    if counter is not None:
        return counter(text)
    return kernels.count_tokens(text)
