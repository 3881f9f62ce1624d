"""Singular series of prime tuples and their averages.

Submodules:

* :mod:`singser.arith` -- primes, multiplicative functions, Dirichlet characters.
* :mod:`singser.singular` -- singular series with truncation bounds.
* :mod:`singser.combinat` -- matchings and class-refining partitions.
* :mod:`singser.expsums` -- exponential sums over progressions.
* :mod:`singser.apsums` -- sums and moments restricted to progressions.
* :mod:`singser.smooth` -- the same with smooth weights.
* :mod:`singser.suites`, :mod:`singser.report`, :mod:`singser.cli` -- verification harness.

The hot loops live in a compiled extension with a pure-Python fallback;
``singser.kernels.BACKEND`` says which one is active.
"""
__version__ = "0.1.0"

from .errors import CapacityError, DomainError, ToleranceError
from .kernels import BACKEND
from .singular import (
    SingularValue,
    TupleSet,
    nu,
    singular_series,
    singular_series_zero,
    two_term_exact,
)
from .arith import characters_mod, euler_phi, l_value, moebius, ramanujan_sum, sieve_primes
from .apsums import ClosedFormTerms, CongruenceSpec

__all__ = [
    "__version__",
    "BACKEND",
    "CapacityError",
    "ClosedFormTerms",
    "CongruenceSpec",
    "DomainError",
    "SingularValue",
    "ToleranceError",
    "TupleSet",
    "characters_mod",
    "euler_phi",
    "l_value",
    "moebius",
    "nu",
    "ramanujan_sum",
    "sieve_primes",
    "singular_series",
    "singular_series_zero",
    "two_term_exact",
]
