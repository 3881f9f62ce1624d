"""Singular series of integer tuples, with rigorous truncation bounds.

For a finite set ``H`` of ``k`` integers the series is the Euler product
``prod_p (1 - nu_H(p)/p) / (1 - 1/p)**k`` where ``nu_H(p)`` counts the residues
``H`` occupies mod ``p``.  Primes dividing ``r`` are left out when ``r > 1``.

Evaluation splits the product at ``max(diam H, k)``: below the split each
factor is computed from the residue count, above it ``nu_H(p) = k`` and the
factors come from a cached prefix sum of ``log((1 - k/p) / (1 - 1/p)**k)``.
Beyond ``prime_limit`` every factor satisfies
``|log factor| <= (k**2 + k) / (p - k)**2``; summing that over odd integers
gives the reported ``tail_bound``.
"""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .arith import PRIMES, factorize
from .errors import CapacityError, DomainError

DEFAULT_PRIME_LIMIT = 10**6
MAX_SUBSET_SIZE = 20


@dataclass(frozen=True)
class TupleSet:
    """A finite set of distinct integers, stored sorted."""

    elements: tuple[int, ...]

    def __post_init__(self) -> None:
        els = tuple(int(x) for x in self.elements)
        if any(b <= a for a, b in zip(els, els[1:])):
            raise DomainError(f"elements must be strictly increasing: {els}")
        object.__setattr__(self, "elements", els)

    @classmethod
    def of(cls, values: Iterable[int]) -> "TupleSet":
        vals = [int(v) for v in values]
        if len(set(vals)) != len(vals):
            raise DomainError(f"repeated element in {vals}")
        return cls(tuple(sorted(vals)))

    @property
    def k(self) -> int:
        return len(self.elements)

    @property
    def diameter(self) -> int:
        return self.elements[-1] - self.elements[0] if self.k >= 2 else 0

    def shifted(self, t: int) -> "TupleSet":
        return TupleSet(tuple(x + t for x in self.elements))


@dataclass(frozen=True)
class SingularValue:
    """A truncated Euler product and a bound on what the truncation omitted.

    ``|true value - value| <= tail_bound``.
    """

    value: float
    tail_bound: float
    prime_limit: int

    def __float__(self) -> float:
        return float(self.value)


def _as_tupleset(H) -> TupleSet:
    return H if isinstance(H, TupleSet) else TupleSet.of(H)


def nu(H, p: int) -> int:
    """Number of residue classes mod ``p`` met by ``H``."""
    H = _as_tupleset(H)
    if H.k == 0:
        raise DomainError("nu of the empty set")
    if p < 2:
        raise DomainError(f"p must be prime, got {p}")
    return len({x % p for x in H.elements})


# ---------------------------------------------------------------------------
# cached prefix sums of the generic log-factor

class _LogPrefixCache:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._store: dict[tuple[int, int], np.ndarray] = {}

    def get(self, k: int, limit: int) -> tuple[np.ndarray, np.ndarray]:
        """(primes of the shared table, cumulative log-factor sums for size ``k``)."""
        table = PRIMES.table(limit)
        key = (k, table.limit)
        pref = self._store.get(key)
        if pref is None:
            with self._lock:
                pref = self._store.get(key)
                if pref is None:
                    p = table.primes.astype(np.float64)
                    big = table.primes > k
                    terms = np.zeros(p.size)
                    terms[big] = np.log1p(-k / p[big]) - k * np.log1p(-1.0 / p[big])
                    pref = kernels.neumaier_cumsum(np.ascontiguousarray(terms))
                    pref.setflags(write=False)
                    self._store = {kk: v for kk, v in self._store.items() if kk[1] == table.limit}
                    self._store[key] = pref
        return table.primes, pref


_LOG_PREFIX = _LogPrefixCache()


def _log_factor(p: int, k: int) -> float:
    return math.log1p(-k / p) - k * math.log1p(-1.0 / p)


def tail_log_bound(k: int, prime_limit: int) -> float:
    """Upper bound for ``sum_{p > prime_limit} (k**2 + k) / (p - k)**2``.

    Sums over odd ``n`` beyond the limit, comparing with an integral.
    """
    if k <= 1:
        return 0.0
    n0 = prime_limit + 1 if prime_limit % 2 == 0 else prime_limit + 2
    d = n0 - k
    return (k * k + k) * (1.0 / (d * d) + 0.5 / d)


def _check_limit(k: int, diam: int, prime_limit: int) -> None:
    if k >= 2 and prime_limit <= 2 * k:
        raise DomainError(f"prime_limit {prime_limit} must exceed 2k = {2 * k}")
    if prime_limit < max(diam, 2):
        raise DomainError(f"prime_limit {prime_limit} is below the diameter {diam}")


def singular_series_batch(
    tuples: np.ndarray, r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT
) -> tuple[np.ndarray, np.ndarray]:
    """Singular series of every row of an ``(n, k)`` integer array.

    Rows must consist of distinct integers (any order).

    Returns:
        ``(values, tail_bounds)`` as float arrays of length ``n``.
    """
    if r < 1:
        raise DomainError("r must be >= 1")
    T = np.ascontiguousarray(np.asarray(tuples, dtype=np.int64))
    if T.ndim != 2:
        raise DomainError("expected a 2-d array of tuples")
    n, k = T.shape
    if k <= 1 or n == 0:
        return np.ones(n), np.zeros(n)
    diam = T.max(axis=1) - T.min(axis=1)
    _check_limit(k, int(diam.max()), prime_limit)

    primes, pref = _LOG_PREFIX.get(k, prime_limit)
    n_lim = int(np.searchsorted(primes, prime_limit, side="right"))
    cut = np.minimum(np.maximum(diam, k), prime_limit)
    cut_count = np.searchsorted(primes[:n_lim], cut, side="right").astype(np.int64)

    exact = kernels.euler_exact_batch(T, primes, cut_count, int(r))

    # generic region: primes[cut_count : n_lim]
    upper = pref[n_lim - 1]
    lower = np.where(cut_count > 0, pref[np.maximum(cut_count - 1, 0)], 0.0)
    logs = upper - lower
    for p in factorize(r).primes if r > 1 else ():
        if p > prime_limit:
            continue
        inside = cut < p
        if inside.any() and p > k:
            logs = logs - np.where(inside, _log_factor(p, k), 0.0)

    values = np.where(exact == 0.0, 0.0, exact * np.exp(logs))
    tails = np.abs(values) * math.expm1(tail_log_bound(k, prime_limit))
    return values, tails


def singular_series(H, r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT) -> SingularValue:
    """Singular series of ``H`` with primes dividing ``r`` removed.

    Args:
        H: A :class:`TupleSet` or an iterable of distinct integers.
        r: Primes dividing ``r`` are skipped (``r = 1`` gives the full series).
        prime_limit: Last prime included explicitly.

    Raises:
        DomainError: ``prime_limit`` below the diameter of ``H`` or not above ``2k``.
    """
    H = _as_tupleset(H)
    if H.k <= 1:
        return SingularValue(1.0, 0.0, prime_limit)
    vals, tails = singular_series_batch(np.array([H.elements]), r, prime_limit)
    return SingularValue(float(vals[0]), float(tails[0]), prime_limit)


def singular_series_zero_batch(
    tuples: np.ndarray, r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT
) -> tuple[np.ndarray, np.ndarray]:
    """Alternating subset sums ``sum_{J subset H} (-1)**|H \\ J| S_r(J)`` row by row."""
    T = np.asarray(tuples, dtype=np.int64)
    n, k = T.shape
    if k > MAX_SUBSET_SIZE:
        raise CapacityError(f"subset expansion limited to k <= {MAX_SUBSET_SIZE}")
    values = np.zeros(n)
    tails = np.zeros(n)
    for j in range(k + 1):
        sign = -1.0 if (k - j) % 2 else 1.0
        n_sub = math.comb(k, j)
        if j <= 1:
            values += sign * n_sub
            continue
        for cols in itertools.combinations(range(k), j):
            v, t = singular_series_batch(T[:, cols], r, prime_limit)
            values += sign * v
            tails += t
    return values, tails


def singular_series_zero(H, r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT) -> SingularValue:
    """Alternating subset sum of singular series, with ``S(empty) = 1``.

    The tail bound is the sum of the subset tail bounds.

    Raises:
        CapacityError: more than :data:`MAX_SUBSET_SIZE` elements.
    """
    H = _as_tupleset(H)
    if H.k > MAX_SUBSET_SIZE:
        raise CapacityError(f"subset expansion limited to k <= {MAX_SUBSET_SIZE}")
    if H.k == 0:
        return SingularValue(1.0, 0.0, prime_limit)
    _check_limit(H.k, H.diameter, prime_limit)
    vals, tails = singular_series_zero_batch(np.array([H.elements]), r, prime_limit)
    return SingularValue(float(vals[0]), float(tails[0]), prime_limit)


# ---------------------------------------------------------------------------
# two-element sets

def pair_constant(r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT) -> float:
    """``prod_{2 < p <= prime_limit, p not dividing r} (1 - 1/(p-1)**2)``."""
    primes, pref = _LOG_PREFIX.get(2, prime_limit)
    n_lim = int(np.searchsorted(primes, prime_limit, side="right"))
    log_c = float(pref[n_lim - 1])
    for p in factorize(r).primes if r > 1 else ():
        if 2 < p <= prime_limit:
            log_c -= _log_factor(p, 2)
    return math.exp(log_c)


def two_term_batch(ms, r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """``S_r({0, m})`` for an array of nonzero ``m``, via the factorisation of ``m``.

    Returns:
        ``(values, tail_bounds)``.
    """
    m = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    if (m == 0).any():
        raise DomainError("two-term singular series needs m != 0")
    if r < 1:
        raise DomainError("r must be >= 1")
    big = int(np.abs(m).max()) if m.size else 0
    _check_limit(2, big, prime_limit)
    const = pair_constant(r, prime_limit)
    small = PRIMES.primes(max(2, math.isqrt(big) + 1))
    adjust = kernels.odd_prime_adjust(np.ascontiguousarray(np.abs(m)), int(r), small)
    if r % 2:
        two = np.where(m % 2 == 0, 2.0, 0.0)
    else:
        two = np.ones(m.size)
    values = two * const * adjust
    tails = np.abs(values) * math.expm1(tail_log_bound(2, prime_limit))
    return values, tails


def two_term_exact(m: int, r: int = 1, prime_limit: int = DEFAULT_PRIME_LIMIT) -> SingularValue:
    """Fast ``S_r({0, m})`` from the prime factors of ``m``.

    The product over primes not dividing ``m`` is a cached constant; each odd
    prime ``p | m`` (with ``p`` not dividing ``r``) multiplies it by
    ``(p-1)/(p-2)``, and the prime 2 contributes 2 or 0 by parity.
    """
    vals, tails = two_term_batch([m], r, prime_limit)
    return SingularValue(float(vals[0]), float(tails[0]), prime_limit)
