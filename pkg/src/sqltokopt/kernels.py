"""Select the compiled scanning kernels when available.

Set ``SQLTOKOPT_PURE_PYTHON=1`` to force the pure-Python implementation.
"""
import os

from sqltokopt import _scan as pure

if os.environ.get("SQLTOKOPT_PURE_PYTHON", "") not in ("", "0"):
    _impl = pure
    BACKEND = "python"
else:
    try:
        from sqltokopt import _scan_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "python"

scan = _impl.scan
count_tokens = _impl.count_tokens
