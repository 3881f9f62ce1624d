"""Primes, multiplicative functions, Ramanujan sums and Dirichlet characters.

Everything here is exact integer arithmetic except the L-values and the
digamma function, which are evaluated in double precision.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import CapacityError, DomainError

#: Largest sieve limit accepted by :func:`sieve_primes` (about 0.5 GB of output).
SIEVE_CAPACITY = 10**9


@dataclass(frozen=True)
class Constants:
    """Real constants used by the closed forms."""

    euler_gamma: float = 0.57721566490153286061
    log_two_pi: float = 1.83787706640934548356


CONSTANTS = Constants()


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """All primes up to ``limit``, ascending, as an int64 array."""

    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def upto(self, x: int) -> np.ndarray:
        """View of the primes ``<= x`` (``x`` may not exceed ``limit``)."""
        if x > self.limit:
            raise DomainError(f"table only reaches {self.limit}, asked for {x}")
        return self.primes[: int(np.searchsorted(self.primes, x, side="right"))]

    def count(self, x: int) -> int:
        """pi(x) for ``x <= limit``."""
        return int(np.searchsorted(self.primes, min(x, self.limit), side="right"))


def sieve_primes(limit: int) -> PrimeTable:
    """Segmented sieve of Eratosthenes.

    Args:
        limit: Inclusive upper bound, at least 2.

    Raises:
        DomainError: ``limit < 2``.
        CapacityError: ``limit`` above :data:`SIEVE_CAPACITY`.
    """
    if limit < 2:
        raise DomainError("sieve limit must be at least 2")
    if limit > SIEVE_CAPACITY:
        raise CapacityError(f"sieve limit {limit} exceeds capacity {SIEVE_CAPACITY}")
    primes = kernels.primes_upto(int(limit))
    primes.setflags(write=False)
    return PrimeTable(int(limit), primes)


class _PrimeCache:
    """Grow-only shared prime table; filled under a lock, read lock-free."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._table = sieve_primes(1 << 16)

    def table(self, limit: int) -> PrimeTable:
        t = self._table
        if t.limit >= limit:
            return t
        with self._lock:
            if self._table.limit < limit:
                self._table = sieve_primes(max(int(limit), 2 * self._table.limit))
            return self._table

    def primes(self, limit: int) -> np.ndarray:
        return self.table(limit).upto(limit)


PRIMES = _PrimeCache()


@dataclass(frozen=True)
class Factorization:
    """Prime factorisation ``n = prod p**e`` with increasing primes."""

    n: int
    factors: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)


@lru_cache(maxsize=65536)
def factorize(n: int) -> Factorization:
    """Trial division by cached primes.

    Raises:
        DomainError: ``n < 1``.
    """
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    out = []
    m = n
    for p in PRIMES.primes(max(2, math.isqrt(m))).tolist():
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    if m > 1:
        out.append((m, 1))
    return Factorization(n, tuple(out))


def _check_positive(n: int, name: str) -> None:
    if n < 1:
        raise DomainError(f"{name} is defined for n >= 1, got {n}")


def euler_phi(n: int) -> int:
    """Euler's totient."""
    _check_positive(n, "euler_phi")
    out = n
    for p, _ in factorize(n).factors:
        out -= out // p
    return out


def moebius(n: int) -> int:
    """Moebius function."""
    _check_positive(n, "moebius")
    f = factorize(n)
    if not f.is_squarefree():
        return 0
    return -1 if len(f.factors) % 2 else 1


def von_mangoldt(n: int) -> float:
    """``log p`` when ``n`` is a power of the prime ``p``, else 0."""
    _check_positive(n, "von_mangoldt")
    f = factorize(n).factors
    return math.log(f[0][0]) if len(f) == 1 else 0.0


def divisors(n: int) -> list[int]:
    """Positive divisors of ``n`` in increasing order."""
    divs = [1]
    for p, e in factorize(n).factors:
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def ramanujan_sum(q: int, m: int) -> int:
    """Ramanujan sum ``c_q(m) = sum_{(a,q)=1} e(am/q)``, computed exactly.

    Uses ``c_q(m) = mu(q/g) phi(q) / phi(q/g)`` with ``g = gcd(q, m)``.
    """
    if q < 1:
        raise DomainError("ramanujan_sum needs q >= 1")
    g = math.gcd(q, m)
    return moebius(q // g) * euler_phi(q) // euler_phi(q // g)


# ---------------------------------------------------------------------------
# Dirichlet characters

def _root_of_unity(k: int, n: int) -> complex:
    """``e(k/n)``, exact for the quarter turns."""
    k %= n
    if (4 * k) % n == 0:
        return (1 + 0j, 1j, -1 + 0j, -1j)[4 * k // n]
    t = 2.0 * math.pi * k / n
    return complex(math.cos(t), math.sin(t))


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """A Dirichlet character stored as its value table.

    Attributes:
        modulus: The modulus ``m``.
        values: Complex array of length ``m``; ``values[a]`` is ``chi(a mod m)``.
        is_principal: True for the principal character.
        label: Exponent vector on the unit-group generators (for display).
    """

    modulus: int
    values: np.ndarray
    is_principal: bool
    label: tuple[int, ...] = ()

    def __call__(self, a: int) -> complex:
        return complex(self.values[a % self.modulus])

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, np.conj(self.values), self.is_principal, self.label)

    @property
    def is_even(self) -> bool:
        return self(-1) == 1

    def __repr__(self) -> str:
        return f"DirichletCharacter(modulus={self.modulus}, label={self.label})"


def _unit_generators(p: int, e: int) -> list[tuple[int, int]]:
    """Generators (g, order) of the unit group mod ``p**e``."""
    pe = p**e
    if p == 2:
        if e == 1:
            return []
        if e == 2:
            return [(pe - 1, 2)]
        return [(pe - 1, 2), (5, 2 ** (e - 2))]
    phi = pe - pe // p
    cofactors = [f for f, _ in factorize(p - 1).factors]
    for g in range(2, pe):
        if g % p == 0:
            continue
        # primitive root mod p that stays primitive mod p**2 works mod p**e
        if all(pow(g, (p - 1) // f, p) != 1 for f in cofactors) and (e == 1 or pow(g, p - 1, p * p) != 1):
            return [(g, phi)]
    raise AssertionError("no primitive root found")  # pragma: no cover


def _discrete_logs(pe: int, gens: list[tuple[int, int]]) -> dict[int, tuple[int, ...]]:
    """Map every unit mod ``pe`` to its exponent vector on ``gens``."""
    logs: dict[int, tuple[int, ...]] = {1 % pe: tuple(0 for _ in gens)}
    for i, (g, order) in enumerate(gens):
        new = {}
        for u, vec in logs.items():
            x = u
            for t in range(order):
                v = list(vec)
                v[i] = t
                new.setdefault(x, tuple(v))
                x = x * g % pe
        logs = new
    return logs


@lru_cache(maxsize=256)
def characters_mod(m: int) -> tuple[DirichletCharacter, ...]:
    """All ``phi(m)`` Dirichlet characters modulo ``m``; the principal one first.

    Built from the cyclic decomposition of the unit group on each prime-power
    component and glued together by the Chinese remainder theorem.
    """
    if m < 1:
        raise DomainError("modulus must be >= 1")
    comps = []
    for p, e in factorize(m).factors if m > 1 else ():
        pe = p**e
        gens = _unit_generators(p, e)
        comps.append((pe, gens, _discrete_logs(pe, gens)))
    orders = [order for _, gens, _ in comps for _, order in gens]

    out = []
    for label in np.ndindex(*orders) if orders else [()]:
        vals = np.zeros(m, dtype=np.complex128)
        for a in range(m):
            if math.gcd(a, m) != 1:
                continue
            pos = 0
            val = 1 + 0j
            for pe, gens, logs in comps:
                vec = logs[a % pe]
                for t, (_, order) in zip(vec, gens):
                    val *= _root_of_unity(label[pos] * t, order)
                    pos += 1
            vals[a] = val
        vals.setflags(write=False)
        out.append(DirichletCharacter(m, vals, all(x == 0 for x in label), tuple(int(x) for x in label)))
    return tuple(out)


# ---------------------------------------------------------------------------
# digamma and L-values

_BERNOULLI_DIGAMMA = (
    1.0 / 12,
    -1.0 / 120,
    1.0 / 252,
    -1.0 / 240,
    1.0 / 132,
    -691.0 / 32760,
    1.0 / 12,
)


def digamma(x: float) -> float:
    """Digamma function for real ``x > 0``.

    Shifts ``x`` upward with ``psi(x) = psi(x+1) - 1/x`` until ``x >= 10``,
    then sums the asymptotic series ``log x - 1/(2x) - sum B_2n/(2n x^2n)``.
    """
    if not x > 0:
        raise DomainError(f"digamma implemented for x > 0, got {x}")
    shift = 0.0
    while x < 10.0:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    for c in reversed(_BERNOULLI_DIGAMMA):
        series = series * inv2 + c
    return math.log(x) - 0.5 / x - series * inv2 - shift


def l_value(chi: DirichletCharacter, s: int) -> complex:
    """``L(s, chi)`` at ``s = 0`` or ``s = 1`` for a non-principal character.

    Uses the Hurwitz-zeta expansion ``L(s, chi) = m^-s sum chi(a) zeta(s, a/m)``,
    valid for imprimitive characters too.

    Raises:
        DomainError: principal character or ``s`` not in {0, 1}.
    """
    if chi.is_principal:
        raise DomainError("L-value requested for the principal character")
    m = chi.modulus
    a = np.arange(1, m + 1)
    vals = chi.values[a % m]
    if s == 0:
        return complex(np.sum(vals * (0.5 - a / m)))
    if s == 1:
        psi = np.array([digamma(x / m) for x in range(1, m + 1)])
        return complex(-np.sum(vals * psi) / m)
    raise DomainError(f"only s in {{0, 1}} is supported, got {s}")
