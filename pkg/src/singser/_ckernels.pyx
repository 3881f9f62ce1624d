# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Every function here has a pure-Python twin in :mod:`singser._pykernels` with
the same signature and the same arithmetic order; :mod:`singser.kernels`
picks one of the two at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, pow, sqrt

cnp.import_array()

ctypedef cnp.int64_t i64


def neumaier_sum(const double[::1] x):
    """Compensated sum of ``x`` (Neumaier variant of Kahan summation)."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, c = 0.0, t, v
    with nogil:
        for i in range(n):
            v = x[i]
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
    return s + c


def neumaier_cumsum(const double[::1] x):
    """Running compensated sums; ``out[i] == neumaier_sum(x[:i + 1])``."""
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double s = 0.0, c = 0.0, t, v
    with nogil:
        for i in range(n):
            v = x[i]
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
            out[i] = s + c
    return out_arr


cdef void _mark_odd(unsigned char* seg, i64 lo, i64 n, i64 p) noexcept nogil:
    # seg[j] represents the odd number lo + 2j
    cdef i64 start = p * p
    cdef i64 j
    if start < lo:
        start = lo + ((p - lo % p) % p)
        if start % 2 == 0:
            start += p
    j = (start - lo) // 2
    while j < n:
        seg[j] = 0
        j += p


def primes_upto(i64 limit, i64 segment=1 << 18):
    """All primes ``p <= limit`` via an odd-only segmented sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    cdef i64 root = <i64>sqrt(<double>limit)
    while root * root > limit:
        root -= 1
    while (root + 1) * (root + 1) <= limit:
        root += 1
    # base primes up to sqrt(limit) with a plain sieve
    base_flags = np.ones(root + 1, dtype=np.uint8)
    cdef unsigned char[::1] bf = base_flags
    cdef i64 i, j, nb = 0
    bf[0] = 0
    if root >= 1:
        bf[1] = 0
    i = 2
    while i * i <= root:
        if bf[i]:
            j = i * i
            while j <= root:
                bf[j] = 0
                j += i
        i += 1
    base = np.flatnonzero(base_flags).astype(np.int64)
    cdef i64[::1] bp = base
    nb = bp.shape[0]

    # pi(x) < 1.25506 x / log x for x > 1
    cdef i64 cap = <i64>(1.25506 * limit / log(<double>max(limit, 3))) + 16
    out_arr = np.empty(cap, dtype=np.int64)
    cdef i64[::1] out = out_arr
    cdef i64 count = 0
    out[count] = 2
    count += 1

    seg_arr = np.empty(segment, dtype=np.uint8)
    cdef unsigned char[::1] seg = seg_arr
    cdef i64 lo = 3, n, k, p
    with nogil:
        while lo <= limit:
            n = (limit - lo) // 2 + 1
            if n > segment:
                n = segment
            for k in range(n):
                seg[k] = 1
            for k in range(nb):
                p = bp[k]
                if p == 2:
                    continue
                if p * p > lo + 2 * (n - 1):
                    break
                _mark_odd(&seg[0], lo, n, p)
            for k in range(n):
                if seg[k]:
                    out[count] = lo + 2 * k
                    count += 1
            lo += 2 * n
    return out_arr[:count].copy()


def euler_exact_batch(const i64[:, ::1] tuples, const i64[::1] primes, const i64[::1] cut_count, i64 r):
    """Products of exact local factors over the leading primes of each row.

    Row ``i`` multiplies ``(1 - nu/p) * (p/(p-1))**k`` over
    ``primes[:cut_count[i]]`` skipping ``p | r``; ``nu`` is the number of
    residues the row occupies mod ``p``.  A vanishing factor short-circuits
    the row to exact zero.
    """
    cdef Py_ssize_t n = tuples.shape[0], k = tuples.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef i64 p, nu, x, y
    cdef double acc, pk
    cdef i64 res[64]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if k > 64:
        raise ValueError("tuple length above 64 is not supported")
    with nogil:
        for i in range(n):
            acc = 1.0
            for j in range(cut_count[i]):
                p = primes[j]
                if r % p == 0:
                    continue
                nu = 0
                for a in range(k):
                    x = tuples[i, a] % p
                    if x < 0:
                        x += p
                    for b in range(nu):
                        if res[b] == x:
                            break
                    else:
                        res[nu] = x
                        nu += 1
                if nu == p:
                    acc = 0.0
                    break
                pk = pow(<double>p / <double>(p - 1), <double>k)
                acc *= (1.0 - <double>nu / <double>p) * pk
            out[i] = acc
    return out_arr


def odd_prime_adjust(const i64[::1] ms, i64 r, const i64[::1] primes):
    """``prod (p-1)/(p-2)`` over odd primes ``p | m`` with ``p`` not dividing ``r``.

    ``primes`` must contain every prime up to ``sqrt(max |m|)``.
    """
    cdef Py_ssize_t n = ms.shape[0], np_ = primes.shape[0]
    cdef Py_ssize_t i, j
    cdef i64 m, p
    cdef double acc
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            m = ms[i]
            if m < 0:
                m = -m
            acc = 1.0
            while m > 0 and m % 2 == 0:
                m //= 2
            for j in range(np_):
                p = primes[j]
                if p == 2:
                    continue
                if p * p > m:
                    break
                if m % p == 0:
                    if r % p != 0:
                        acc *= <double>(p - 1) / <double>(p - 2)
                    while m % p == 0:
                        m //= p
            if m > 1 and r % m != 0:
                acc *= <double>(m - 1) / <double>(m - 2)
            out[i] = acc
    return out_arr
