"""
JIT switch for the numeric kernels.

Set ``WASSKNN_DISABLE_JIT=1`` before import to run every kernel as plain
Python over numpy arrays (useful for debugging and for the benchmark).
"""

import os

JIT_ENABLED = os.environ.get("WASSKNN_DISABLE_JIT", "0").lower() not in ("1", "true", "yes")

if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        JIT_ENABLED = False

if not JIT_ENABLED:

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


__all__ = ["JIT_ENABLED", "njit"]
