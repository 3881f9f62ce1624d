"""Sums of singular series weighted by smooth compactly supported functions.

The built-in weight is the bump ``c exp(-1/((x - a)(b - x)))`` on ``(a, b)``.
Transforms are computed with composite Gauss--Legendre quadrature whose panel
count is doubled until two successive results agree to :data:`QUAD_TOL`.

Conventions:

* ``f^(xi) = int f(x) e(-x xi) dx`` and ``E_{f,h}(alpha) = sum_m f(m/h) e(m alpha)``,
  so Poisson summation reads ``E_{f,h}(alpha) = h sum_n f^(h (n - alpha))``.
* ``M g(s) = int_0^oo x^(s-1) g(x) dx``.
* Pair quantities use the lattice cross-correlation
  ``P(m) = sum_n f1((n + m)/h) f2(n/h)`` and its continuous analogue
  ``K(x) = int f1(x + y) f2(y) dy``, which is the convolution of ``f1`` with
  the reflection of ``f2``.

As in :mod:`singser.apsums`, closed forms come as ``form="derived"``
(the expansion the exact sums approach) or ``form="printed"``.
"""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np
from scipy import integrate as sp_integrate

from . import kernels
from .apsums import (
    FORMS,
    MAX_ENUMERATION,
    ClosedFormTerms,
    _mertens_first,
    _pair_series_truncated,
    mertens_like_sums,
    moment_from_residue_sums,
)
from .arith import CONSTANTS, factorize
from .combinat import CongruenceClasses, perfect_matchings, refining_partitions
from .errors import CapacityError, DomainError, ToleranceError
from .expsums import RationalPhase
from .singular import DEFAULT_PRIME_LIMIT, SingularValue, singular_series_zero_batch, two_term_batch

QUAD_TOL = 1e-10
GL_ORDER = 20
MAX_PANELS = 1 << 14
MELLIN_ZERO_TOL = 1e-9

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)
# exp(-1/g) is below 1e-300 once g < 1/700; treat the bump as zero there so
# that derivative formulas with negative powers of g stay finite
_G_FLOOR = 1.0 / 700.0


class Weight(Protocol):
    support: tuple[float, float]

    def __call__(self, x: np.ndarray) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# weights

@dataclass(frozen=True)
class SmoothWeight:
    """Bump ``c exp(-1/((u - a)(b - u)))`` with ``u = x``, or ``u = -x`` if ``reflected``.

    Attributes:
        a, b: Ends of the (unreflected) support, ``a < b``.
        c: Amplitude.
        reflected: Evaluate at ``-x``; the support becomes ``(-b, -a)``.
    """

    a: float
    b: float
    c: float = 1.0
    reflected: bool = False

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise DomainError(f"need a < b, got ({self.a}, {self.b})")

    @property
    def support(self) -> tuple[float, float]:
        return (-self.b, -self.a) if self.reflected else (self.a, self.b)

    def reflect(self) -> "SmoothWeight":
        return SmoothWeight(self.a, self.b, self.c, not self.reflected)

    def scaled(self, factor: float) -> "SmoothWeight":
        return SmoothWeight(self.a, self.b, self.c * factor, self.reflected)

    def derivative(self, x, order: int = 0) -> np.ndarray:
        """``f``, ``f'`` or ``f''`` at ``x`` (closed form)."""
        if order not in (0, 1, 2):
            raise DomainError("derivative order must be 0, 1 or 2")
        x = np.asarray(x, dtype=np.float64)
        u = -x if self.reflected else x
        g = (u - self.a) * (self.b - u)
        out = np.zeros(np.shape(u))
        live = g > _G_FLOOR
        if not np.any(live):
            return out
        gl = g[live]
        f = self.c * np.exp(-1.0 / gl)
        if order == 0:
            val = f
        else:
            g1 = self.a + self.b - 2.0 * u[live]
            if order == 1:
                val = f * g1 / gl**2
            else:
                val = f * (g1**2 / gl**4 - 2.0 / gl**2 - 2.0 * g1**2 / gl**3)
        if self.reflected and order == 1:
            val = -val
        out[live] = val
        return out

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, 0)


def builtin_bump(a: float, b: float, c: float = 1.0) -> SmoothWeight:
    """The bump weight on ``(a, b)`` with amplitude ``c``; needs ``0 < a < b``."""
    if not 0 < a < b:
        raise DomainError(f"need 0 < a < b, got ({a}, {b})")
    return SmoothWeight(float(a), float(b), float(c))


@dataclass(frozen=True)
class WeightProduct:
    """Pointwise product ``f1 * conj(f2)``, supported on the overlap."""

    f1: Weight
    f2: Weight

    @property
    def support(self) -> tuple[float, float]:
        lo = max(self.f1.support[0], self.f2.support[0])
        hi = min(self.f1.support[1], self.f2.support[1])
        return (lo, max(lo, hi))

    def __call__(self, x) -> np.ndarray:
        return self.f1(x) * np.conj(self.f2(x))


# ---------------------------------------------------------------------------
# quadrature

def _panel_rule(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return x, w


def integrate(func, lo: float, hi: float, tol: float = QUAD_TOL, min_panels: int = 8):
    """``int_lo^hi func(x) dx`` by composite Gauss--Legendre with panel doubling.

    ``func`` maps a 1-d array of nodes to values of shape ``(n,)`` or
    ``(n, m)``; the result has shape ``()`` or ``(m,)``.

    Raises:
        ToleranceError: successive estimates still differ by more than
            ``tol`` at :data:`MAX_PANELS` panels.
    """
    if hi <= lo:
        probe = np.asarray(func(np.array([0.5 * (lo + hi)])))
        return np.zeros(probe.shape[1:], dtype=probe.dtype)
    panels = max(1, int(min_panels))
    x, w = _panel_rule(lo, hi, panels)
    prev = w @ np.asarray(func(x))
    while panels < MAX_PANELS:
        panels *= 2
        x, w = _panel_rule(lo, hi, panels)
        cur = w @ np.asarray(func(x))
        diff = float(np.max(np.abs(cur - prev)))
        if diff <= tol:
            return cur
        prev = cur
    raise ToleranceError(
        f"quadrature on [{lo}, {hi}] did not settle: last change {diff:.3e} > {tol:.1e} at {panels} panels"
    )


def fourier(f: Weight, xi, tol: float = QUAD_TOL):
    """``f^(xi) = int f(x) e(-x xi) dx`` for a scalar or an array of ``xi``."""
    xis = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    lo, hi = f.support
    cycles = float(np.max(np.abs(xis))) * (hi - lo) if xis.size else 0.0
    out = integrate(
        lambda x: f(x)[:, None] * np.exp(-2j * np.pi * x[:, None] * xis[None, :]),
        lo, hi, tol, min_panels=max(8, math.ceil(2 * cycles)),
    )
    return complex(out[0]) if np.ndim(xi) == 0 else out


def mellin(f: SmoothWeight, s: complex, derivative: int = 0, tol: float = QUAD_TOL) -> complex:
    """``int_0^oo x^(s-1) f^(derivative)(x) dx`` over the positive part of the support."""
    lo, hi = f.support
    lo = max(lo, 0.0)
    if hi <= lo:
        return 0j
    if lo == 0.0 and complex(s).real <= 0:
        raise DomainError("Mellin integral diverges at 0 for Re(s) <= 0")
    val = integrate(lambda x: x ** (complex(s) - 1) * f.derivative(x, derivative), lo, hi, tol)
    return complex(val)


def log_moment(f: SmoothWeight, derivative: int = 0, tol: float = QUAD_TOL) -> float:
    """``int_0^oo log(x) f^(derivative)(x) dx`` (the ``s``-derivative of the Mellin transform at 1)."""
    lo, hi = f.support
    lo = max(lo, 0.0)
    if hi <= lo:
        return 0.0
    if lo > 0:
        return float(integrate(lambda x: np.log(x) * f.derivative(x, derivative), lo, hi, tol))
    val, _ = sp_integrate.quad(lambda x: float(f.derivative(np.array([x]), derivative)[0]), 0.0, hi,
                               weight="alg-loga", wvar=(0.0, 0.0), epsabs=tol, limit=400)
    return float(val)


@dataclass(eq=False)
class TransformCache:
    """Lazily computed transforms of one weight, shared read-only once built."""

    weight: SmoothWeight
    _store: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _get(self, key, compute):
        if key not in self._store:
            val = compute()
            with self._lock:
                self._store.setdefault(key, val)
        return self._store[key]

    @property
    def integral(self) -> float:
        """``f^(0) = int f``."""
        return self._get(("int",), lambda: float(integrate(self.weight, *self.weight.support)))

    def mellin(self, s: float, derivative: int = 0) -> float:
        return self._get(("mellin", s, derivative), lambda: mellin(self.weight, s, derivative).real)

    def log_moment(self, derivative: int = 0) -> float:
        return self._get(("log", derivative), lambda: log_moment(self.weight, derivative))

    def fourier(self, xi):
        return fourier(self.weight, xi)

    def decay_constant(self, xis: Sequence[float] | None = None) -> float:
        """``max |f^(xi)| xi^2`` over a logarithmic grid (default ``1 .. 1000``)."""
        grid = np.geomspace(1.0, 1000.0, 31) if xis is None else np.asarray(xis, dtype=np.float64)
        return self._get(("decay", tuple(grid.tolist())),
                         lambda: float(np.max(np.abs(fourier(self.weight, grid)) * grid**2)))


@lru_cache(maxsize=128)
def transforms(f: SmoothWeight) -> TransformCache:
    """The shared :class:`TransformCache` of ``f``."""
    return TransformCache(f)


# ---------------------------------------------------------------------------
# cross-correlation of two weights

@dataclass(eq=False)
class PairKernel:
    """``K(x) = int f1(x + y) f2(y) dy`` and quantities derived from it.

    ``Ks(x) = K(x) + K(-x)`` is the even part used by the pair moments.
    """

    f1: SmoothWeight
    f2: SmoothWeight
    _store: dict = field(default_factory=dict, repr=False)

    def _window(self, x: float) -> tuple[float, float]:
        (a1, b1), (a2, b2) = self.f1.support, self.f2.support
        return max(a2, a1 - x), min(b2, b1 - x)

    def _eval(self, x: float, order: int) -> float:
        lo, hi = self._window(x)
        if hi <= lo:
            return 0.0
        return float(integrate(lambda y: self.f1.derivative(x + y, order) * self.f2(y), lo, hi))

    def K(self, x) -> np.ndarray:
        return np.array([self._eval(float(t), 0) for t in np.atleast_1d(x)])

    def dK(self, x) -> np.ndarray:
        return np.array([self._eval(float(t), 1) for t in np.atleast_1d(x)])

    @property
    def reach(self) -> float:
        """``Ks`` vanishes beyond this distance from 0."""
        (a1, b1), (a2, b2) = self.f1.support, self.f2.support
        return max(abs(b1 - a2), abs(a1 - b2))

    @property
    def overlap(self) -> float:
        """``I = K(0) = int f1 f2``."""
        if "I" not in self._store:
            self._store["I"] = self._eval(0.0, 0)
        return self._store["I"]

    @property
    def log_moment(self) -> float:
        """``int_0^oo log(x) Ks'(x) dx``."""
        if "log" not in self._store:
            def dks(x: float) -> float:
                return self._eval(x, 1) - self._eval(-x, 1)
            val, _ = sp_integrate.quad(dks, 0.0, self.reach, weight="alg-loga", wvar=(0.0, 0.0),
                                       epsabs=QUAD_TOL, limit=400)
            self._store["log"] = float(val)
        return self._store["log"]

    @property
    def linear_constant(self) -> float:
        """``I (1 - gamma - log 2pi) + (1/2) int_0^oo log(x) Ks'(x) dx``."""
        g, l2p = CONSTANTS.euler_gamma, CONSTANTS.log_two_pi
        return self.overlap * (1.0 - g - l2p) + 0.5 * self.log_moment


@lru_cache(maxsize=128)
def pair_kernel(f1: SmoothWeight, f2: SmoothWeight) -> PairKernel:
    return PairKernel(f1, f2)


def convolution(f1: SmoothWeight, f2: SmoothWeight, x) -> np.ndarray:
    """``(f1 * f2)(x) = int f1(y) f2(x - y) dy``."""
    out = []
    (a1, b1), (a2, b2) = f1.support, f2.support
    for t in np.atleast_1d(np.asarray(x, dtype=np.float64)):
        lo, hi = max(a1, t - b2), min(b1, t - a2)
        out.append(0.0 if hi <= lo else float(integrate(lambda y: f1(y) * f2(t - y), lo, hi)))
    return np.array(out)


# ---------------------------------------------------------------------------
# exponential sums

def _window(f: Weight, h: int) -> np.ndarray:
    lo, hi = f.support
    return np.arange(math.floor(lo * h), math.ceil(hi * h) + 1, dtype=np.int64)


def _rational(alpha) -> tuple[int, int] | None:
    if isinstance(alpha, RationalPhase):
        return alpha.a, alpha.q
    if isinstance(alpha, tuple):
        alpha = RationalPhase.of(*alpha)
        return alpha.a, alpha.q
    if isinstance(alpha, (Fraction, int)):
        fr = Fraction(alpha)
        return fr.numerator, fr.denominator
    return None


def _phases(m: np.ndarray, alpha) -> np.ndarray:
    rat = _rational(alpha)
    if rat is not None:
        a, q = rat
        return np.exp(2j * np.pi * ((m * (a % q)) % q) / q)
    return np.exp(2j * np.pi * np.mod(m * float(alpha), 1.0))


def weighted_exp_sum(f: Weight, h: int, alpha) -> complex:
    """``E_{f,h}(alpha) = sum_m f(m/h) e(m alpha)``; rational ``alpha`` is reduced exactly."""
    if h < 1:
        raise DomainError("h must be >= 1")
    m = _window(f, h)
    return complex(np.sum(f(m / h) * _phases(m, alpha)))


def centred(alpha) -> float:
    """Representative of ``alpha mod 1`` in ``[-1/2, 1/2)``."""
    rat = _rational(alpha)
    if rat is not None:
        fr = Fraction(*rat)
        return float(fr - math.floor(fr + Fraction(1, 2)))
    x = float(alpha)
    return x - math.floor(x + 0.5)


def weighted_exp_sum_poisson(f: Weight, h: int, alpha) -> complex:
    """Leading Poisson term ``h f^(-h alpha_bar)``."""
    if h < 1:
        raise DomainError("h must be >= 1")
    return h * fourier(f, -h * centred(alpha))


# ---------------------------------------------------------------------------
# averages over mu mod m

def _shifted_sums(f: Weight, h: int, m: int, alpha) -> np.ndarray:
    """``E_{f,h}(mu/m + alpha)`` for ``mu = 0..m-1``."""
    n = _window(f, h)
    vals = f(n / h)
    rat = _rational(alpha)
    if rat is not None:
        a, q = rat
        den = m * q
        num = (np.arange(m)[:, None] * q + a * m) * n[None, :]
        ph = np.exp(2j * np.pi * (num % den) / den)
    else:
        t = np.mod(np.arange(m)[:, None] / m * n[None, :] + float(alpha) * n[None, :], 1.0)
        ph = np.exp(2j * np.pi * t)
    return ph @ vals


def mu_average(f1: Weight, f2: Weight, m: int, h: int, alpha=0, exclude_zero: bool = False) -> complex:
    """``sum_{mu mod m} E_{f1,h}(mu/m + alpha) E_{f2,h}(mu/m + alpha)``.

    Args:
        exclude_zero: Drop ``mu = 0`` (the form of the bound at ``alpha = 0``).
    """
    if m < 1 or h < 1:
        raise DomainError("need m >= 1 and h >= 1")
    e1 = _shifted_sums(f1, h, m, alpha)
    e2 = _shifted_sums(f2, h, m, alpha)
    prod = e1 * e2
    if exclude_zero:
        prod = prod[1:]
    return complex(np.sum(prod))


def mu_average_main(f1: Weight, f2: Weight, m: int, h: int, alpha=0) -> complex:
    """``h^2 f1^(-(h/m) bar(m alpha)) f2^(-(h/m) bar(m alpha))``."""
    rat = _rational(alpha)
    ma = Fraction(*rat) * m if rat is not None else m * float(alpha)
    xi = -h / m * centred(ma)
    return h * h * fourier(f1, xi) * fourier(f2, xi)


def mu_average_envelope(m: int, h: int) -> float:
    """``m h^-2 min(m^3, h^3)``."""
    return m * min(m, h) ** 3 / (h * h)


def mu_average_cross(f1: Weight, f2: Weight, m: int, h: int, alpha1, alpha2) -> complex:
    """``sum_{mu mod m} E_{f1,h}(mu/m + alpha1) E_{f2,h}(mu/m + alpha2)``."""
    if m < 1 or h < 1:
        raise DomainError("need m >= 1 and h >= 1")
    return complex(np.sum(_shifted_sums(f1, h, m, alpha1) * _shifted_sums(f2, h, m, alpha2)))


def cross_envelope_constant(f1: Weight, f2: Weight, m: int, h: int, alpha1, alpha2) -> float:
    """Smallest ``C`` with ``|cross sum| <= (m + h) |E_{f1 conj(f2),h}(alpha1 - alpha2)| + C m``."""
    lhs = abs(mu_average_cross(f1, f2, m, h, alpha1, alpha2))
    diff = float(alpha1) - float(alpha2) if _rational(alpha1) is None or _rational(alpha2) is None \
        else Fraction(*_rational(alpha1)) - Fraction(*_rational(alpha2))
    rhs = (m + h) * abs(weighted_exp_sum(WeightProduct(f1, f2), h, diff))
    return max(0.0, lhs - rhs) / m


# ---------------------------------------------------------------------------
# S(f, h)

def _check_form(form: str) -> None:
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")


def _limit(h: int, prime_limit: int | None, floor: int) -> int:
    return max(floor, h) if prime_limit is None else prime_limit


def smooth_series_sum_brute(f: Weight, h: int, prime_limit: int | None = None) -> SingularValue:
    """``S(f, h) = sum_{m >= 1} f(m/h) S({0, m})`` over the support window."""
    if h < 1:
        raise DomainError("h must be >= 1")
    m = _window(f, h)
    m = m[m >= 1]
    w = f(m / h) if m.size else np.zeros(0)
    keep = w != 0
    m, w = m[keep], w[keep]
    L = _limit(int(m.max()) if m.size else h, prime_limit, DEFAULT_PRIME_LIMIT)
    if m.size == 0:
        return SingularValue(0.0, 0.0, L)
    vals, tails = two_term_batch(m, 1, L)
    return SingularValue(kernels.neumaier_sum(np.ascontiguousarray(w * vals)), float(np.sum(np.abs(w) * tails)), L)


def smooth_series_sum_closed(f: SmoothWeight, h: int, form: str = "derived") -> ClosedFormTerms:
    """Expansion of :func:`smooth_series_sum_brute` in ``h``.

    derived: ``M f(1) h + (M f'(1)/2)(log h + gamma + log 2pi) + (1/2) int_0^oo log(x) f'(x) dx``,
    the residues at ``s = 1`` and ``s = 0`` of ``F(s) h^s M f(s)`` where
    ``F(s) = sum_n S({0,n}) n^-s``.

    printed: ``M f(2) h - (M f'(1)/2) log h + (M f'(1)/2)(gamma - log 2pi) - (1/2) M f''(1)``;
    the last ratio is read at ``s = 1`` and flagged.

    For weights supported away from 0, ``M f'(1) = 0``; the result then
    carries the flag ``"mellin-derivative-vanishes"`` and the printed ratio
    term is dropped.
    """
    _check_form(form)
    if h < 1:
        raise DomainError("h must be >= 1")
    tc = transforms(f)
    g, l2p = CONSTANTS.euler_gamma, CONSTANTS.log_two_pi
    a0 = tc.mellin(1.0, 1)
    degenerate = abs(a0) <= MELLIN_ZERO_TOL * max(1.0, abs(f.c))
    flags = ("mellin-derivative-vanishes",) if degenerate else ()
    if form == "derived":
        parts = (
            ("linear", tc.mellin(1.0) * h),
            ("log", 0.5 * a0 * math.log(h)),
            ("constant", 0.5 * a0 * (g + l2p) + 0.5 * tc.log_moment(1)),
        )
        return ClosedFormTerms(parts, form, flags)
    const = 0.5 * a0 * (g - l2p)
    if not degenerate:
        const -= 0.5 * a0 * tc.mellin(1.0, 2) / a0
    parts = (("linear", tc.mellin(2.0) * h), ("log", -0.5 * a0 * math.log(h)), ("constant", const))
    return ClosedFormTerms(parts, form, flags + ("mellin-ratio-argument-unspecified",))


# ---------------------------------------------------------------------------
# V_2 for smooth weights

def lattice_correlation(f1: Weight, f2: Weight, h: int) -> tuple[np.ndarray, np.ndarray]:
    """``(m, P(m))`` with ``P(m) = sum_n f1((n + m)/h) f2(n/h)`` for every lag with overlap."""
    n1, n2 = _window(f1, h), _window(f2, h)
    u, w = f1(n1 / h), f2(n2 / h)
    # np.convolve(u, w[::-1])[k] = sum_j u[k - (len(w) - 1) + j] w[j]
    corr = np.convolve(u, w[::-1])
    lags = np.arange(corr.size, dtype=np.int64) - (w.size - 1) + (n1[0] - n2[0])
    return lags, corr


def _modulus_factor(q: int, m: np.ndarray) -> np.ndarray:
    out = np.ones(m.size)
    for p in factorize(q).primes if q > 1 else ():
        out *= np.where(m % p == 0, p / (p - 1.0), 1.0 - 1.0 / (p - 1.0) ** 2)
    return out


def smooth_modulus_moment(q: int, h: int, weights: Sequence[Weight]) -> float:
    """``V_k(q, h; f_1..f_k)`` straight from its definition over residues mod ``q``.

    Raises:
        DomainError: ``q`` not squarefree.
        CapacityError: ``k > 6`` or ``q > 30`` with ``k >= 4``.
    """
    if q < 1 or not factorize(q).is_squarefree():
        raise DomainError(f"q must be squarefree, got {q}")
    k = len(weights)
    if k > 6 or (k >= 4 and q > 30):
        raise CapacityError("modulus moment limited to k <= 6 and q <= 30 for k >= 4")
    sums = [_shifted_sums(f, h, q, 0) for f in weights]
    return moment_from_residue_sums(q, sums)


def smooth_pair_moment_from_modulus(q: int, f1: Weight, f2: Weight, h: int) -> float:
    """``V_2(q, h; f1, f2) = sum_m P(m) (G_q(m) - 1)`` for squarefree ``q``."""
    if q < 1 or not factorize(q).is_squarefree():
        raise DomainError(f"q must be squarefree, got {q}")
    m, P = lattice_correlation(f1, f2, h)
    return kernels.neumaier_sum(np.ascontiguousarray(P * (_modulus_factor(q, m) - 1.0)))


def smooth_pair_moment_semi_exact(
    f1: Weight, f2: Weight, h: int, prime_limit: int | None = None, form: str = "derived"
) -> float:
    """``V_2(Q, h; f1, f2)`` with ``Q`` the product of the primes up to ``h^2``.

    derived (exact up to rounding and the truncation at ``prime_limit``,
    default ``h^2``): ``M1 P(0) + sum_{m != 0} P(m) (S({0,m}) - 1)``.

    printed: ``-h^2 f1^(0) f2^(0) + h sum_{m >= 1} S({0,m}) (F(m/h) + F(-m/h)) + h F(0)``
    with ``F = f1 * f2`` the convolution, evaluated by quadrature.  With
    ``f2`` reflected, ``F`` is the cross-correlation of ``f1`` and the
    unreflected weight; the diagonal then carries no ``M1`` factor.
    """
    _check_form(form)
    if h < 2:
        raise DomainError("h must be >= 2")
    L = h * h if prime_limit is None else prime_limit
    if form == "derived":
        m, P = lattice_correlation(f1, f2, h)
        nz = (m != 0) & (P != 0)
        vals = _pair_series_truncated(m[nz], 1, L)
        total = kernels.neumaier_sum(np.ascontiguousarray(P[nz] * (vals - 1.0)))
        diag = P[m == 0]
        if diag.size:
            total += float(diag[0]) * _mertens_first(L, 1)
        return total
    (a1, b1), (a2, b2) = f1.support, f2.support
    reach = max(abs(b1 + b2), abs(a1 + a2), abs(b1 + a2), abs(a1 + b2))
    ms = np.arange(1, math.ceil(reach * h) + 1, dtype=np.int64)
    F = convolution(f1, f2, np.concatenate([ms / h, -ms / h, [0.0]]))
    Fs = F[: ms.size] + F[ms.size: 2 * ms.size]
    keep = Fs != 0
    vals, _ = two_term_batch(ms[keep], 1, L) if keep.any() else (np.zeros(0), None)
    f1h, f2h = float(integrate(f1, *f1.support)), float(integrate(f2, *f2.support))
    return -h * h * f1h * f2h + h * kernels.neumaier_sum(np.ascontiguousarray(Fs[keep] * vals)) + h * F[-1]


def smooth_pair_moment_literal(f1: Weight, f2: Weight, h: int, prime_limit: int | None = None) -> float:
    """The double sum ``-h^2 f1^(0) f2^(0) + sum_{m1 != m2 >= 1} f1(m1/h) f2(-m2/h) S({0, m1 - m2})
    + sum_{m >= 1} f1(m/h) f2(-m/h)`` evaluated term by term.

    For weights supported in ``(0, oo)`` every ``f2(-m2/h)`` vanishes and only
    the first term survives; pass ``f2.reflect()`` to obtain a non-trivial sum.
    """
    if h < 2:
        raise DomainError("h must be >= 2")
    L = h * h if prime_limit is None else prime_limit
    n1 = _window(f1, h)
    n1 = n1[n1 >= 1]
    lo, hi = f2.support
    n2 = np.arange(max(1, math.floor(-hi * h)), max(1, math.ceil(-lo * h)) + 1, dtype=np.int64)
    u, w = f1(n1 / h), f2(-n2 / h)
    f1h, f2h = float(integrate(f1, *f1.support)), float(integrate(f2, *f2.support))
    total = -h * h * f1h * f2h
    if n1.size == 0 or not np.any(w):
        return total
    corr = np.convolve(u, w[::-1])
    lags = np.arange(corr.size, dtype=np.int64) - (w.size - 1) + (n1[0] - n2[0])
    nz = (lags != 0) & (corr != 0)
    vals, _ = two_term_batch(lags[nz], 1, L)
    total += kernels.neumaier_sum(np.ascontiguousarray(corr[nz] * vals))
    diag = corr[lags == 0]
    return total + (float(diag[0]) if diag.size else 0.0)


def smooth_pair_moment_closed(
    f1: SmoothWeight, f2: SmoothWeight, h: int, form: str = "derived", include_constant: bool = False
) -> ClosedFormTerms:
    """Expansion of :func:`smooth_pair_moment_semi_exact` in ``h``.

    derived: ``h M1 I - I h log h`` with ``I = int f1 f2`` and
    ``M1 = prod_{p <= h^2} p/(p-1) - 1``; the ``h^2`` terms cancel exactly.
    ``include_constant`` appends the linear term ``c h`` of
    :attr:`PairKernel.linear_constant`.

    printed: ``(-f1^(0) f2^(0) + M F(2)) h^2 - (M F'(1)/2) h log h`` with
    ``F = f1 * f2``.
    """
    _check_form(form)
    if h < 2:
        raise DomainError("h must be >= 2")
    if form == "derived":
        ker = pair_kernel(f1, f2)
        M1, _ = mertens_like_sums(h, 1)
        I = ker.overlap
        parts = [("diagonal", h * M1 * I), ("log", -I * h * math.log(h))]
        if include_constant:
            parts.append(("linear", ker.linear_constant * h))
        return ClosedFormTerms(tuple(parts), form)
    (a1, b1), (a2, b2) = f1.support, f2.support
    lo, hi = max(0.0, a1 + a2), b1 + b2
    F = lambda x: convolution(f1, f2, x)  # noqa: E731
    m2 = float(integrate(lambda x: x * F(x), lo, hi, min_panels=16)) if hi > lo else 0.0
    dF1 = -float(F(0.0)[0])  # int_0^oo F' = -F(0)
    f1h, f2h = transforms_integral(f1), transforms_integral(f2)
    parts = (("quadratic", (-f1h * f2h + m2) * h * h), ("log", -0.5 * dF1 * h * math.log(h)))
    return ClosedFormTerms(parts, form)


def transforms_integral(f: Weight) -> float:
    if isinstance(f, SmoothWeight):
        return transforms(f).integral
    return float(integrate(f, *f.support))


# ---------------------------------------------------------------------------
# R_k with smooth weights

def smooth_sum_brute(weights: Sequence[Weight], h: int, prime_limit: int | None = None) -> SingularValue:
    """``R_k(h; f_1..f_k)``: sum over distinct integers ``h_i`` of ``prod f_i(h_i/h) S_0({h_1..h_k})``.

    Raises:
        CapacityError: ``k > 4`` or more than :data:`MAX_ENUMERATION` tuples.
    """
    k = len(weights)
    if k > 4:
        raise CapacityError("smooth brute-force sum limited to k <= 4")
    if h < 1:
        raise DomainError("h must be >= 1")
    windows = []
    for f in weights:
        n = _window(f, h)
        v = f(n / h)
        windows.append((n[v != 0], v[v != 0]))
    span = max((int(n.max()) for n, _ in windows if n.size), default=0) - min(
        (int(n.min()) for n, _ in windows if n.size), default=0)
    L = _limit(span, prime_limit, DEFAULT_PRIME_LIMIT)
    if k <= 1 or any(n.size == 0 for n, _ in windows):
        return SingularValue(0.0, 0.0, L)
    if k == 2:
        m, P = lattice_correlation(weights[0], weights[1], h)
        nz = (m != 0) & (P != 0)
        vals, tails = two_term_batch(m[nz], 1, L)
        return SingularValue(kernels.neumaier_sum(np.ascontiguousarray(P[nz] * (vals - 1.0))),
                             float(np.sum(np.abs(P[nz]) * tails)), L)
    count = math.prod(n.size for n, _ in windows)
    if count > MAX_ENUMERATION:
        raise CapacityError(f"{count} tuples exceed the enumeration budget {MAX_ENUMERATION}")
    grids = np.meshgrid(*[n for n, _ in windows], indexing="ij")
    wgrid = np.meshgrid(*[v for _, v in windows], indexing="ij")
    rows = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    distinct = np.ones(rows.shape[0], dtype=bool)
    for i, j in itertools.combinations(range(k), 2):
        distinct &= rows[:, i] != rows[:, j]
    rows, w = np.ascontiguousarray(rows[distinct]), w[distinct]
    vals, tails = singular_series_zero_batch(rows, 1, L)
    return SingularValue(kernels.neumaier_sum(np.ascontiguousarray(w * vals)), float(np.sum(np.abs(w) * tails)), L)


def smooth_sum_main(weights: Sequence[SmoothWeight], h: int, form: str = "derived") -> float:
    """Structured main term for ``R_k(h; f_1..f_k)``.

    ``sum_j (-1)^j sum_P prod_{doubletons} D_ab sum_sigma prod V_2(f_a, f_b)`` over
    partitions ``P`` of ``1..k`` into ``j`` doubletons and singletons and
    perfect matchings ``sigma`` of the singletons.

    derived: ``D_ab = h M1 int f_a f_b`` and ``V_2`` from
    :func:`smooth_pair_moment_closed` including its linear term.
    printed: ``D_ab = h M1`` and the printed ``V_2``.

    Raises:
        CapacityError: ``k > 8``.
    """
    _check_form(form)
    k = len(weights)
    if k > 8:
        raise CapacityError("structured main term limited to k <= 8")
    if k % 2:
        return 0.0
    M1, _ = mertens_like_sums(h, 1)
    v2: dict[tuple[int, int], float] = {}

    def pair(i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in v2:
            v2[key] = smooth_pair_moment_closed(weights[i], weights[j], h, form,
                                                include_constant=(form == "derived")).total
        return v2[key]

    def doubleton(i: int, j: int) -> float:
        if form == "printed":
            return h * M1
        return h * M1 * pair_kernel(weights[i], weights[j]).overlap

    cc = CongruenceClasses(1, (0,) * k)
    terms = []
    for j in range(k // 2 + 1):
        for part in refining_partitions(cc, j):
            singles = part.singletons
            inner = math.fsum(
                math.prod(pair(singles[a - 1] - 1, singles[b - 1] - 1) for a, b in sigma.pairs)
                for sigma in perfect_matchings(len(singles))
            )
            dprod = math.prod(doubleton(a - 1, b - 1) for a, b in part.doubletons)
            terms.append((-1) ** j * dprod * inner)
    return math.fsum(terms)
