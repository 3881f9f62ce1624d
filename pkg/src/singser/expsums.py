"""Exponential sums over arithmetic progressions at rational phases.

``E_{r,c}(a/q) = sum_{1 <= m <= h, m = c mod r} e(m a / q)`` is summed as a
geometric series; the degenerate case where the common ratio is 1 is detected
with integer arithmetic.  Phases are reduced mod ``q`` before any
floating-point work, so ``e(x/q)`` is always evaluated at an angle in
``[0, 2 pi)``.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import divisors, euler_phi, factorize, moebius
from .errors import DomainError


@dataclass(frozen=True)
class RationalPhase:
    """A reduced fraction ``a/q`` with ``1 <= a <= q``; zero is stored as ``1/1``."""

    a: int
    q: int

    def __post_init__(self) -> None:
        if self.q < 1 or not 1 <= self.a <= self.q or math.gcd(self.a, self.q) != 1:
            raise DomainError(f"not a reduced phase in (0, 1]: {self.a}/{self.q}")

    @classmethod
    def of(cls, a: int, q: int) -> "RationalPhase":
        """Reduce ``a/q`` mod 1 into canonical form."""
        if q == 0:
            raise DomainError("zero denominator")
        if q < 0:
            a, q = -a, -q
        a %= q
        if a == 0:
            return cls(1, 1)
        g = math.gcd(a, q)
        return cls(a // g, q // g)

    def __neg__(self) -> "RationalPhase":
        return RationalPhase.of(-self.a, self.q)

    def as_fraction(self) -> Fraction:
        return Fraction(self.a % self.q, self.q)


def unit_root(x: int, q: int) -> complex:
    """``e(x/q)`` with exact reduction of ``x`` mod ``q``."""
    x %= q
    if x == 0:
        return 1 + 0j
    if 2 * x == q:
        return -1 + 0j
    if 4 * x == q:
        return 1j
    if 4 * x == 3 * q:
        return -1j
    t = 2.0 * math.pi * x / q
    return complex(math.cos(t), math.sin(t))


def progression_count(h: int, r: int, c: int) -> int:
    """Number of ``1 <= m <= h`` with ``m = c mod r``."""
    m0 = (c - 1) % r + 1
    return 0 if m0 > h else (h - m0) // r + 1


def ap_exp_sum(phase: RationalPhase | Fraction | tuple[int, int], h: int, r: int = 1, c: int = 0) -> complex:
    """``sum_{1 <= m <= h, m = c mod r} e(m a/q)`` in closed form.

    Args:
        phase: ``a/q`` as a :class:`RationalPhase`, a ``Fraction`` or an
            ``(a, q)`` pair (need not be reduced).
        h: Length of the range of ``m``.
        r: Modulus of the progression.
        c: Residue class of the progression.
    """
    a, q = _num_den(phase)
    if h < 1 or r < 1:
        raise DomainError("need h >= 1 and r >= 1")
    m0 = (c - 1) % r + 1
    if m0 > h:
        return 0j
    n = (h - m0) // r + 1
    a %= q
    start = unit_root(m0 * a, q)
    step = (r * a) % q
    if step == 0:
        return n * start
    return start * (unit_root(n * step, q) - 1) / (unit_root(step, q) - 1)


def ap_exp_sum_direct(phase, h: int, r: int = 1, c: int = 0) -> complex:
    """Term-by-term reference for :func:`ap_exp_sum` (O(h))."""
    a, q = _num_den(phase)
    m = np.arange(1, h + 1, dtype=np.int64)
    m = m[(m - c) % r == 0]
    ang = 2.0 * np.pi * ((m * a) % q) / q
    return complex(np.sum(np.exp(1j * ang)))


def _num_den(phase) -> tuple[int, int]:
    if isinstance(phase, RationalPhase):
        return phase.a, phase.q
    if isinstance(phase, Fraction):
        return phase.numerator, phase.denominator
    a, q = phase
    if q < 1:
        raise DomainError("denominator must be positive")
    return int(a), int(q)


def ap_exp_majorant(alpha, h: int, r: int = 1) -> float:
    """``(1/r) sum_{n=1..r} min(h, 1/||alpha + n/r||)``, which bounds ``|E_{r,c}(alpha)|``.

    ``alpha`` may be a float, a ``Fraction`` or a :class:`RationalPhase`;
    rational input is handled exactly so vanishing distances are detected.
    """
    if h < 1 or r < 1:
        raise DomainError("need h >= 1 and r >= 1")
    exact = isinstance(alpha, (Fraction, RationalPhase, int))
    if isinstance(alpha, RationalPhase):
        alpha = alpha.as_fraction()
    total = 0.0
    for n in range(1, r + 1):
        if exact:
            x = Fraction(alpha) + Fraction(n, r)
            dist = abs(x - round(x))
            total += h if dist == 0 else min(h, float(1 / dist))
        else:
            x = float(alpha) + n / r
            dist = abs(x - round(x))
            total += h if dist == 0 else min(h, 1.0 / dist)
    return total / r


# ---------------------------------------------------------------------------
# residue-class bookkeeping shared with the moment computations

def denominator_weights(q: int) -> tuple[np.ndarray, np.ndarray]:
    """For each ``A mod q`` the exact denominator ``d = q / gcd(A, q)`` of ``A/q``.

    Returns:
        ``(d, w)`` with ``w[A] = mu(d)/phi(d)`` and ``w[0] = 0``.
    """
    d = np.array([q // math.gcd(A, q) for A in range(q)], dtype=np.int64)
    w = np.array([0.0] + [moebius(int(x)) / euler_phi(int(x)) for x in d[1:]])
    return d, w


def cyclic_convolve(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``out[s] = sum_A u[A] v[(s - A) mod q]``, summed in a fixed order."""
    q = u.size
    idx = (np.arange(q)[:, None] - np.arange(q)[None, :]) % q
    return v[idx] @ u


def oddterm_diagnostic(q: int, h: int, r: int, k: int, prime_limit: int | None = None) -> float:
    """Exact sum over non-paired denominator tuples of the majorant products.

    Sums ``prod mu(q_i)**2 / phi(q_i) * sum prod F_r(a_i/q_i)`` over tuples
    ``(q_1..q_k)`` of divisors ``1 < q_i | q`` that are *not* of the form
    "equal in pairs and otherwise distinct", the inner sum running over
    reduced ``a_i/q_i`` with ``sum a_i/q_i`` integral.  Reported for growth
    inspection only; ``prime_limit`` is accepted for interface symmetry.

    Raises:
        DomainError: ``q`` not squarefree, ``q > 30`` or ``k > 4``.
    """
    if q < 1 or not factorize(q).is_squarefree():
        raise DomainError(f"q must be squarefree, got {q}")
    if q > 30 or not 1 <= k <= 4:
        raise DomainError("diagnostic limited to q <= 30 and 1 <= k <= 4")
    d_of, _ = denominator_weights(q)
    F = np.array([ap_exp_majorant(Fraction(A, q), h, r) for A in range(q)])
    by_den = {d: np.where(d_of == d, F, 0.0) for d in divisors(q) if d > 1}

    total = 0.0
    for qs in itertools.product(sorted(by_den), repeat=k):
        counts = Counter(qs)
        if k % 2 == 0 and all(v == 2 for v in counts.values()):
            continue
        weight = math.prod(1.0 / euler_phi(x) for x in qs)
        acc = by_den[qs[0]]
        for x in qs[1:]:
            acc = cyclic_convolve(acc, by_den[x])
        total += weight * acc[0]
    return float(total)
