"""Sums of singular series over integers in arithmetic progressions.

Notation used in the docstrings:

* ``S_r(H)`` -- singular series of ``H`` with the primes dividing ``r`` removed,
  ``S_0r(H)`` its alternating subset sum.
* ``N_c`` -- number of ``1 <= m <= h`` with ``m = c mod r``.
* ``M1 = prod_{p <= h^2, p not dividing r} p/(p-1) - 1``, i.e. the sum of
  ``mu(d)^2/phi(d)`` over ``1 < d | Q`` with ``Q`` the product of those primes.

Closed forms come in two variants.  ``form="derived"`` (the default) is the
expansion that the brute-force sums actually approach; ``form="printed"``
reproduces the coefficients as commonly stated, kept for comparison.  The two
agree except where noted in the individual docstrings.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .arith import (
    CONSTANTS,
    PRIMES,
    DirichletCharacter,
    characters_mod,
    euler_phi,
    factorize,
    l_value,
    von_mangoldt,
)
from .combinat import CongruenceClasses, count_equal_pairings, perfect_matchings, refining_partitions
from .errors import CapacityError, DomainError
from .expsums import ap_exp_sum, cyclic_convolve, denominator_weights, progression_count
from .singular import (
    DEFAULT_PRIME_LIMIT,
    SingularValue,
    singular_series_batch,
    singular_series_zero_batch,
    two_term_batch,
)

FORMS = ("derived", "printed")
MAX_ENUMERATION = 10**7


@dataclass(frozen=True)
class CongruenceSpec:
    """Modulus ``r`` and classes ``c_1..c_k``, each stored in ``1..r``."""

    r: int
    classes: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.r < 1:
            raise DomainError("r must be >= 1")
        if len(self.classes) < 1:
            raise DomainError("need at least one class")
        object.__setattr__(self, "classes", tuple((int(c) - 1) % self.r + 1 for c in self.classes))

    @property
    def k(self) -> int:
        return len(self.classes)

    def congruence_classes(self) -> CongruenceClasses:
        return CongruenceClasses.from_vector(self.classes, self.r)


@dataclass(frozen=True)
class ClosedFormTerms:
    """Named summands of a closed form and their total.

    Attributes:
        parts: ``(name, value)`` pairs in display order.
        form: ``"derived"`` or ``"printed"``.
        flags: Short notes on degenerate or ambiguous terms.
    """

    parts: tuple[tuple[str, complex | float], ...]
    form: str = "derived"
    flags: tuple[str, ...] = ()

    @property
    def total(self) -> float:
        return float(math.fsum(complex(v).real for _, v in self.parts))

    def __getitem__(self, name: str):
        for key, v in self.parts:
            if key == name:
                return v
        raise KeyError(name)

    def as_dict(self) -> dict[str, float]:
        out = {k: complex(v).real for k, v in self.parts}
        out["total"] = self.total
        return out


def _check_form(form: str) -> None:
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")


def _limit_for(h: int, prime_limit: int | None) -> int:
    return max(DEFAULT_PRIME_LIMIT, h) if prime_limit is None else prime_limit


# ---------------------------------------------------------------------------
# constants

def linear_constant(r: int) -> float:
    """``(phi(r)/r) (log(r/2pi) - gamma - sum_{p | r} log p/(p-1))``."""
    s = sum(math.log(p) / (p - 1) for p in factorize(r).primes) if r > 1 else 0.0
    return euler_phi(r) / r * (math.log(r) - CONSTANTS.log_two_pi - CONSTANTS.euler_gamma - s)


def pair_moment_constant(r: int) -> float:
    """Linear coefficient of the equal-class pair moment:
    ``linear_constant(r)/r + phi(r)/r**2 + 1/r``.

    For ``r = 1`` this is ``2 - gamma - log 2 pi``.
    """
    return linear_constant(r) / r + euler_phi(r) / r**2 + 1.0 / r


@lru_cache(maxsize=256)
def character_euler_product(r: int, chi: DirichletCharacter, prime_limit: int = DEFAULT_PRIME_LIMIT) -> SingularValue:
    """``prod_{p | r} (1 - chi(p)/p) * prod_{p not dividing r} (1 - (1 - chi(p))^2/(p-1)^2)``.

    Args:
        r: The outer modulus.
        chi: A character to a modulus dividing ``r``.
        prime_limit: Last prime included; at least 100.

    Returns:
        A :class:`SingularValue` with complex ``value``.  Each omitted factor
        is ``1 - z`` with ``|z| <= 4/(p-1)^2``, which yields the tail bound.
    """
    if r % chi.modulus:
        raise DomainError(f"character modulus {chi.modulus} does not divide r={r}")
    if prime_limit < 100:
        raise DomainError("prime_limit must be at least 100")
    primes = PRIMES.primes(prime_limit)
    chip = chi.values[primes % chi.modulus]
    divides = (r % primes) == 0
    pf = primes.astype(np.float64)
    factors = np.where(divides, 1.0 - chip / pf, 1.0 - (1.0 - chip) ** 2 / (pf - 1.0) ** 2)
    head = primes <= 1000
    value = complex(np.prod(factors[head]))
    if value != 0 and (~head).any():
        logs = np.log(factors[~head])
        value *= complex(
            np.exp(kernels.neumaier_sum(np.ascontiguousarray(logs.real)))
            * np.exp(1j * kernels.neumaier_sum(np.ascontiguousarray(logs.imag)))
        )
    n0 = prime_limit + 1 if prime_limit % 2 == 0 else prime_limit + 2
    d = n0 - 1.0
    zmax = 4.0 / (prime_limit * prime_limit)
    tail = 4.0 * (1.0 / (d * d) + 0.5 / d) / (1.0 - zmax)
    return SingularValue(value, abs(value) * math.expm1(tail), prime_limit)


@lru_cache(maxsize=1024)
def mertens_like_sums(h: int, r: int = 1) -> tuple[float, float]:
    """``(prod p/(p-1) - 1, prod (1 + 1/(p-1)^2))`` over ``p <= h^2`` not dividing ``r``.

    The first component is ``sum_{1 < d | Q} mu(d)^2/phi(d)``, the second
    ``sum_{d | Q} mu(d)^2/phi(d)^2``, with ``Q`` the product of those primes.
    """
    if h < 2:
        raise DomainError("h must be >= 2")
    primes = PRIMES.primes(h * h)
    keep = (r % primes) != 0
    p = primes[keep].astype(np.float64)
    s1 = kernels.neumaier_sum(np.ascontiguousarray(-np.log1p(-1.0 / p)))
    s2 = kernels.neumaier_sum(np.ascontiguousarray(np.log1p(1.0 / (p - 1.0) ** 2)))
    return math.expm1(s1), math.exp(s2)


def _nonprincipal(m: int) -> list[DirichletCharacter]:
    return [chi for chi in characters_mod(m) if not chi.is_principal]


# ---------------------------------------------------------------------------
# two-term sums

def pair_series_sum_brute(r: int, v: int, h: int, prime_limit: int | None = None) -> SingularValue:
    """``sum_{1 <= m <= h, m = v mod r} (h - m) S_r({0, m})`` term by term."""
    if h < 1 or r < 1:
        raise DomainError("need h >= 1 and r >= 1")
    L = _limit_for(h, prime_limit)
    m0 = (v - 1) % r + 1
    ms = np.arange(m0, h, r, dtype=np.int64)
    if ms.size == 0:
        return SingularValue(0.0, 0.0, L)
    vals, tails = two_term_batch(ms, r, L)
    w = (h - ms).astype(np.float64)
    return SingularValue(kernels.neumaier_sum(w * vals), float(np.sum(w * tails)), L)


def pair_series_sum_closed(r: int, v: int, h: int, form: str = "derived", prime_limit: int = DEFAULT_PRIME_LIMIT) -> ClosedFormTerms:
    """Asymptotic expansion of :func:`pair_series_sum_brute` without its remainder.

    For ``v = 0 mod r`` the derived form is
    ``h^2/(2r) - (h/2)(phi(r)/r)(log(h/r) + log 2pi + gamma - 1 + sum_{p|r} log p/(p-1))``;
    the printed variant has ``phi(r)`` in place of ``phi(r)/r`` and no ``-1``.
    For ``v != 0 mod r``, with ``d = (v, r)``, both variants read
    ``h^2/(2r) - (h/2)(phi(r)/r) Lambda(r/d)/phi(r/d)
    + (h/phi(r/d)) sum_{chi != chi_0 mod r/d} conj(chi)(v/d) L(0,chi) L(1,chi) A_{r,chi}``.
    """
    _check_form(form)
    quad = h * h / (2.0 * r)
    if v % r == 0:
        s = sum(math.log(p) / (p - 1) for p in factorize(r).primes) if r > 1 else 0.0
        g = CONSTANTS.euler_gamma
        if form == "derived":
            coef = euler_phi(r) / r
            bracket = math.log(h / r) + CONSTANTS.log_two_pi + g - 1.0 + s
        else:
            coef = euler_phi(r)
            bracket = math.log(h / r) + CONSTANTS.log_two_pi + g + s
        lead = -0.5 * h * coef * math.log(h)
        const = -0.5 * h * coef * (bracket - math.log(h))
        return ClosedFormTerms((("quadratic", quad), ("log", lead), ("linear", const)), form)
    d = math.gcd(v, r)
    rr, vv = r // d, v // d
    lam = -0.5 * h * euler_phi(r) / r * von_mangoldt(rr) / euler_phi(rr)
    chi_sum = 0j
    for chi in _nonprincipal(rr):
        a = character_euler_product(r, chi, prime_limit).value
        chi_sum += np.conj(chi(vv)) * l_value(chi, 0) * l_value(chi, 1) * a
    char = h / euler_phi(rr) * chi_sum
    return ClosedFormTerms((("quadratic", quad), ("lambda", lam), ("character", char)), form)


# ---------------------------------------------------------------------------
# moments over a squarefree modulus

def _check_modulus(q: int, r: int) -> None:
    if q < 1 or not factorize(q).is_squarefree():
        raise DomainError(f"q must be squarefree, got {q}")
    if math.gcd(q, r) != 1:
        raise DomainError(f"q={q} must be coprime to r={r}")


def moment_from_residue_sums(q: int, sums: Sequence[np.ndarray]) -> float:
    """Generic moment over a squarefree modulus.

    Computes ``sum prod_i mu(q_i)/phi(q_i) * prod_i E_i(a_i/q_i)`` over
    ``1 < q_i | q`` and reduced ``a_i`` with ``sum a_i/q_i`` integral, where
    ``sums[i][A]`` holds ``E_i(A/q)``.  Each non-zero ``A mod q`` is exactly one
    reduced fraction ``a/q_i`` with ``q_i = q/(A, q)``, so the constraint is a
    cyclic convolution over ``Z/q``.
    """
    _, w = denominator_weights(q)
    weighted = [np.asarray(s) * w for s in sums]
    if len(weighted) == 1:
        return float(np.real(weighted[0][0]))
    acc = weighted[0]
    for g in weighted[1:-1]:
        acc = cyclic_convolve(acc, g)
    last = weighted[-1]
    neg = (-np.arange(q)) % q
    return float(np.real(np.sum(acc[neg] * last)))


def modulus_moment(q: int, h: int, spec: CongruenceSpec) -> float:
    """``V_k(q, h; r, c_1..c_k)`` by exact enumeration over residues mod ``q``.

    Raises:
        DomainError: ``q`` not squarefree or not coprime to ``r``.
        CapacityError: ``k > 6`` or ``q > 30`` with ``k >= 4``.
    """
    _check_modulus(q, spec.r)
    if spec.k > 6 or (spec.k >= 4 and q > 30):
        raise CapacityError("modulus moment limited to k <= 6 and q <= 30 for k >= 4")
    sums = [np.array([ap_exp_sum((A, q), h, spec.r, c) for A in range(q)]) for c in spec.classes]
    return moment_from_residue_sums(q, sums)


def pair_difference_counts(h: int, r: int, c1: int, c2: int) -> tuple[np.ndarray, np.ndarray]:
    """Differences ``m = m1 - m2`` with ``m_i = c_i mod r`` in ``[1, h]`` and their multiplicities."""
    delta = (c1 - c2) % r
    m = np.arange(-(h - 1), h, dtype=np.int64)
    m = m[(m - delta) % r == 0]
    lo = np.maximum(1, 1 - m)
    hi = np.minimum(h, h - m)
    cnt = (hi - c2) // r - (lo - 1 - c2) // r
    keep = cnt > 0
    return m[keep], cnt[keep]


def _modulus_pair_series(q: int, m: np.ndarray) -> np.ndarray:
    """``sum_{d | q} mu(d)^2/phi(d)^2 c_d(m) = prod_{p | q} (p/(p-1) if p | m else 1 - 1/(p-1)^2)``."""
    out = np.ones(m.size)
    for p in factorize(q).primes if q > 1 else ():
        out *= np.where(m % p == 0, p / (p - 1.0), 1.0 - 1.0 / (p - 1.0) ** 2)
    return out


def pair_moment_from_modulus(q: int, h: int, r: int, c1: int, c2: int) -> float:
    """``V_2(q, h; r, c1, c2)`` through the pair-difference identity.

    ``V_2 = sum_m n(m) (G_q(m) - 1)`` where ``n(m)`` counts pairs with
    difference ``m`` and ``G_q(m) = prod_{p | q}`` of ``p/(p-1)`` or
    ``1 - 1/(p-1)^2`` according as ``p | m``.  Exact for every squarefree ``q``.
    """
    _check_modulus(q, r)
    m, cnt = pair_difference_counts(h, r, c1, c2)
    return kernels.neumaier_sum(cnt * (_modulus_pair_series(q, m) - 1.0))


def _pair_series_truncated(m: np.ndarray, r: int, L: int) -> np.ndarray:
    """``S_r({0, m})`` over the primes ``<= L`` exactly.

    Limits too small for the tail machinery (``L <= 4`` or below the largest
    ``|m|``) take the finite product directly.
    """
    m = np.asarray(m, dtype=np.int64)
    if L > 4 and (m.size == 0 or L >= int(np.max(np.abs(m)))):
        return two_term_batch(m, r, L)[0]
    out = np.ones(m.size)
    for p in PRIMES.primes(max(L, 2)).tolist():
        if p <= L and r % p:
            out *= np.where(m % p == 0, p / (p - 1.0), 1.0 - 1.0 / (p - 1.0) ** 2)
    return out


def pair_moment_semi_exact(h: int, r: int, c1: int, c2: int, prime_limit: int | None = None, form: str = "derived") -> float:
    """``V_2(Q, h; r, c1, c2)`` with ``Q`` the product of primes ``<= h^2`` not dividing ``r``.

    Derived form (exact up to rounding):
    ``[c1 = c2] N_c M1 + sum_{m != 0} n(m) (S_r({0,m}) - 1)`` with the singular
    series truncated at ``h^2`` (or ``prime_limit``).

    Printed form: ``-h^2/r^2 + (h/r) prod(1 + 1/(p-1)^2) + (2/r) sum_{m <= h/r} (h - rm) S_r({0, rm})``
    for equal classes and ``-h^2/r^2 + sum_{|m| <= h, m = c1-c2} (h-|m|)/r S_r({0,m})``
    otherwise.  Its diagonal carries ``sum mu^2/phi^2`` instead of
    ``sum mu^2/phi``, so it does not track the definition.
    """
    _check_form(form)
    if h < 2:
        raise DomainError("h must be >= 2")
    L = h * h if prime_limit is None else prime_limit
    equal = (c1 - c2) % r == 0
    if form == "derived":
        m, cnt = pair_difference_counts(h, r, c1, c2)
        nz = m != 0
        vals = _pair_series_truncated(m[nz], r, L)
        total = kernels.neumaier_sum(cnt[nz] * (vals - 1.0))
        if equal:
            M1 = _mertens_first(L, r)
            total += progression_count(h, r, c1) * M1
        return total
    M2 = _mertens_second(L, r)
    if equal:
        ms = np.arange(1, h // r + 1, dtype=np.int64)
        vals = _pair_series_truncated(r * ms, r, L)
        return -h * h / r**2 + h / r * M2 + 2.0 / r * kernels.neumaier_sum((h - r * ms) * vals)
    delta = (c1 - c2) % r
    m = np.arange(-h, h + 1, dtype=np.int64)
    m = m[(m - delta) % r == 0]
    vals = _pair_series_truncated(m, r, L)
    return -h * h / r**2 + kernels.neumaier_sum((h - np.abs(m)) / r * vals)


def _mertens_first(L: int, r: int) -> float:
    p = PRIMES.primes(L)
    p = p[(r % p) != 0].astype(np.float64)
    return math.expm1(kernels.neumaier_sum(np.ascontiguousarray(-np.log1p(-1.0 / p))))


def _mertens_second(L: int, r: int) -> float:
    p = PRIMES.primes(L)
    p = p[(r % p) != 0].astype(np.float64)
    return math.exp(kernels.neumaier_sum(np.ascontiguousarray(np.log1p(1.0 / (p - 1.0) ** 2))))


def pair_moment_closed(h: int, r: int, c1: int, c2: int, form: str = "derived", prime_limit: int = DEFAULT_PRIME_LIMIT) -> ClosedFormTerms:
    """Asymptotic expansion of :func:`pair_moment_semi_exact` without its remainder.

    Equal classes:
      derived ``(h/r) M1 - h (phi(r)/r^2) log h + pair_moment_constant(r) h``;
      printed ``(h/r) M1 - h (phi(r)/r) log h + linear_constant(r) h``.

    Unequal classes, ``d = (c1 - c2, r)``, ``r' = r/d``, ``v = (c1 - c2)/d``:
      printed ``-h phi(r) Lambda(r') / (r^2 phi(r'))
      + (2h/(r phi(r'))) sum_{chi != chi_0 mod r'} conj(chi)(v) L(0,chi) L(1,chi) A_{r,chi}``.
      The derived form replaces ``2 conj(chi)(v)`` by
      ``conj(chi)(v) + conj(chi)(-v)``, which keeps the expression symmetric
      in ``(c1, c2)``; the sum then vanishes identically (odd characters
      cancel, even ones have ``L(0, chi) = 0``) but is still evaluated.
    """
    _check_form(form)
    if (c1 - c2) % r == 0:
        M1, _ = mertens_like_sums(h, r)
        diag = h / r * M1
        if form == "derived":
            lead = -h * euler_phi(r) / r**2 * math.log(h)
            const = pair_moment_constant(r) * h
        else:
            lead = -h * euler_phi(r) / r * math.log(h)
            const = linear_constant(r) * h
        return ClosedFormTerms((("diagonal", diag), ("log", lead), ("linear", const)), form)
    d = math.gcd(c1 - c2, r)
    rr, vv = r // d, ((c1 - c2) // d) % (r // d)
    lam = -h * euler_phi(r) * von_mangoldt(rr) / (r * r * euler_phi(rr))
    chi_sum = 0j
    for chi in _nonprincipal(rr):
        a = character_euler_product(r, chi, prime_limit).value
        weight = 2 * np.conj(chi(vv)) if form == "printed" else np.conj(chi(vv)) + np.conj(chi(-vv))
        chi_sum += weight * l_value(chi, 0) * l_value(chi, 1) * a
    char = h / (r * euler_phi(rr)) * chi_sum
    return ClosedFormTerms((("lambda", lam), ("character", char)), form)


# ---------------------------------------------------------------------------
# restricted sums of S_0r

CONVENTIONS = ("ordered", "sets")


def _class_automorphisms(spec: CongruenceSpec) -> int:
    return math.prod(math.factorial(len(ix)) for ix in spec.congruence_classes().classes.values())


def _class_set_rows(h: int, spec: CongruenceSpec) -> np.ndarray:
    """Every set ``H`` admitting a labelling ``h_i = c_i mod r``, one row each."""
    groups = []
    for l, ix in spec.congruence_classes().classes.items():
        members = np.arange((l - 1) % spec.r + 1, h + 1, spec.r, dtype=np.int64)
        if members.size < len(ix):
            return np.zeros((0, spec.k), dtype=np.int64)
        groups.append((members.tolist(), len(ix)))
    n_rows = math.prod(math.comb(len(m), j) for m, j in groups)
    if n_rows > MAX_ENUMERATION:
        raise CapacityError(f"{n_rows} sets exceed the enumeration budget {MAX_ENUMERATION}")
    blocks = [list(itertools.combinations(m, j)) for m, j in groups]
    rows = [sum(parts, ()) for parts in itertools.product(*blocks)]
    return np.array(rows, dtype=np.int64).reshape(-1, spec.k)


def restricted_sum_brute(h: int, spec: CongruenceSpec, prime_limit: int | None = None, convention: str = "ordered") -> SingularValue:
    """``R_k``: sum of ``S_0r(H)`` over ``H`` in ``[1, h]`` with ``h_i = c_i mod r``.

    Args:
        convention: ``"ordered"`` sums over distinct tuples ``(h_1..h_k)``,
            the quantity the main-term expansions describe; ``"sets"`` counts
            each set once, i.e. divides by the permutations within classes.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"convention must be one of {CONVENTIONS}")
    L = _limit_for(h, prime_limit)
    r, k = spec.r, spec.k
    if k == 1:
        return SingularValue(0.0, 0.0, L)
    scale = 1.0 if convention == "ordered" else 1.0 / _class_automorphisms(spec)
    if k == 2:
        c1, c2 = spec.classes
        m, cnt = pair_difference_counts(h, r, c1, c2)
        nz = m != 0
        vals, tails = two_term_batch(m[nz], r, L)
        w = cnt[nz].astype(np.float64)
        return SingularValue(scale * kernels.neumaier_sum(w * (vals - 1.0)), scale * float(np.sum(w * tails)), L)
    rows = _class_set_rows(h, spec)
    if rows.shape[0] == 0:
        return SingularValue(0.0, 0.0, L)
    vals, tails = singular_series_zero_batch(rows, r, L)
    scale *= _class_automorphisms(spec)
    return SingularValue(scale * kernels.neumaier_sum(vals), scale * float(np.sum(tails)), L)


def restricted_sum_main(h: int, spec: CongruenceSpec, form: str = "derived") -> float:
    """Structured main term for ``R_k`` (ordered convention).

    ``sum_j (-1)^j sum_P ((h/r) M1)^j sum_sigma prod V_2(c(S_a), c(S_b))`` over
    partitions ``P`` refining the classes into ``j`` doubletons and
    singletons, and perfect matchings ``sigma`` of the singletons, with
    ``V_2`` from :func:`pair_moment_closed` in the requested ``form``.

    Raises:
        CapacityError: ``k > 8``.
    """
    _check_form(form)
    k, r = spec.k, spec.r
    if k > 8:
        raise CapacityError("structured main term limited to k <= 8")
    if k % 2:
        return 0.0
    M1, _ = mertens_like_sums(h, r)
    diag = h / r * M1
    v2: dict[int, float] = {}

    def pair(ca: int, cb: int) -> float:
        key = (ca - cb) % r
        if key not in v2:
            v2[key] = pair_moment_closed(h, r, ca, cb, form).total
        return v2[key]

    cc = spec.congruence_classes()
    terms = []
    for j in range(k // 2 + 1):
        for part in refining_partitions(cc, j):
            singles = part.singletons
            inner = 0.0
            for sigma in perfect_matchings(len(singles)):
                inner += math.prod(pair(spec.classes[singles[a - 1] - 1], spec.classes[singles[b - 1] - 1]) for a, b in sigma.pairs)
            terms.append((-1) ** j * diag**j * inner)
    return math.fsum(terms)


def restricted_sum_leading(h: int, spec: CongruenceSpec, form: str = "derived") -> float:
    """``#pairings * (leading pair term)^(k/2)``.

    The pair term is ``-h (phi(r)/r^2) log h + pair_moment_constant(r) h``
    (derived) or ``-h (phi(r)/r) log h + linear_constant(r) h`` (printed).
    """
    _check_form(form)
    n = count_equal_pairings(spec.classes, spec.r)
    if n == 0:
        return 0.0
    r = spec.r
    if form == "derived":
        base = -h * euler_phi(r) / r**2 * math.log(h) + pair_moment_constant(r) * h
    else:
        base = -h * euler_phi(r) / r * math.log(h) + linear_constant(r) * h
    return n * base ** (spec.k // 2)


def pair_sum_unrestricted_closed(h: int) -> float:
    """``-h log h + (2 - gamma - log 2pi) h``: leading terms of ``sum_{h_1 != h_2 <= h} S_0``."""
    return -h * math.log(h) + (2.0 - CONSTANTS.euler_gamma - CONSTANTS.log_two_pi) * h


def gallagher_ratio(h: int, k: int, prime_limit: int | None = None) -> float:
    """Mean of ``S(H)`` over all ``k``-subsets ``H`` of ``[1, h]``.

    Raises:
        CapacityError: more than :data:`MAX_ENUMERATION` subsets.
    """
    n = math.comb(h, k)
    if n > MAX_ENUMERATION:
        raise CapacityError(f"C({h},{k}) = {n} exceeds the enumeration budget")
    if k <= 1:
        return 1.0
    L = _limit_for(h, prime_limit)
    rows = np.array(list(itertools.combinations(range(1, h + 1), k)), dtype=np.int64)
    vals, _ = singular_series_batch(rows, 1, L)
    return kernels.neumaier_sum(vals) / n
