"""Kernel backend selection.

The compiled Cython module is used when it was built and importable; the
pure-Python twin is used otherwise, or when ``SINGSER_PURE_PYTHON=1`` is set
in the environment before import.
"""
from __future__ import annotations

import os

from . import _pykernels as pure

BACKEND: str
compiled = None

if os.environ.get("SINGSER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

neumaier_sum = _impl.neumaier_sum
neumaier_cumsum = _impl.neumaier_cumsum
primes_upto = _impl.primes_upto
euler_exact_batch = _impl.euler_exact_batch
odd_prime_adjust = _impl.odd_prime_adjust

__all__ = [
    "BACKEND",
    "compiled",
    "pure",
    "neumaier_sum",
    "neumaier_cumsum",
    "primes_upto",
    "euler_exact_batch",
    "odd_prime_adjust",
]
