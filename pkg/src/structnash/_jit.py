"""Backend switch for the compiled kernels.

Setting ``STRUCTNASH_DISABLE_NUMBA=1`` in the environment before import makes
every kernel dispatch to its vectorised numpy implementation instead of the
numba-compiled loop.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("STRUCTNASH_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG not in ("", "0", "false", "no")

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    The returned object is always callable from Python; when numba is missing
    the loop version simply runs interpreted (slow but correct).
    """
    if NUMBA_AVAILABLE:
        return _numba.njit(cache=True, nogil=True)(func)
    return func


def backend_name() -> str:
    """Name of the backend selected for dispatching kernels."""
    return "numba" if USE_NUMBA else "numpy"
