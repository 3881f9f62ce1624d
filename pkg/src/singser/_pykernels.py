"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

Same signatures.  Sums keep the compiled accumulation order; Euler products
are reduced blockwise and may differ from the compiled ones in the last bits.
"""
from __future__ import annotations

import math

import numpy as np

_BLOCK = 1 << 22


def neumaier_sum(x: np.ndarray) -> float:
    """Compensated sum of ``x`` (Neumaier variant of Kahan summation)."""
    s = 0.0
    c = 0.0
    for v in np.asarray(x, dtype=np.float64).tolist():
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def neumaier_cumsum(x: np.ndarray) -> np.ndarray:
    """Running compensated sums; ``out[i] == neumaier_sum(x[:i + 1])``."""
    vals = np.asarray(x, dtype=np.float64).tolist()
    out = [0.0] * len(vals)
    s = 0.0
    c = 0.0
    for i, v in enumerate(vals):
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return np.array(out, dtype=np.float64)


def primes_upto(limit: int, segment: int = 1 << 18) -> np.ndarray:
    """All primes ``p <= limit`` via an odd-only segmented sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    root = math.isqrt(limit)
    flags = np.ones(root + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, math.isqrt(root) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    base = np.flatnonzero(flags)
    base = base[base > 2]

    chunks = [np.array([2], dtype=np.int64)]
    lo = 3
    while lo <= limit:
        n = min(segment, (limit - lo) // 2 + 1)
        seg = np.ones(n, dtype=bool)
        hi = lo + 2 * (n - 1)
        for p in base.tolist():
            if p * p > hi:
                break
            start = p * p
            if start < lo:
                start = lo + (-lo) % p
                if start % 2 == 0:
                    start += p
            seg[(start - lo) // 2 :: p] = False
        chunks.append(lo + 2 * np.flatnonzero(seg).astype(np.int64))
        lo += 2 * n
    return np.concatenate(chunks)


def euler_exact_batch(tuples: np.ndarray, primes: np.ndarray, cut_count: np.ndarray, r: int) -> np.ndarray:
    """Products of exact local factors over the leading primes of each row.

    See the compiled twin for the contract.  Rows and primes are processed in
    blocks of at most :data:`_BLOCK` residues.
    """
    tuples = np.asarray(tuples, dtype=np.int64)
    cut_count = np.asarray(cut_count, dtype=np.int64)
    n, k = tuples.shape
    out = np.ones(n, dtype=np.float64)
    if n == 0 or k == 0:
        return out
    jmax = int(cut_count.max())
    ps_all = np.asarray(primes[:jmax], dtype=np.int64)
    width = max(1, _BLOCK // k)
    for j0 in range(0, jmax, width):
        ps = ps_all[j0:j0 + width]
        keep = (r % ps) != 0
        ps, idx = ps[keep], np.arange(j0, j0 + keep.size)[keep]
        rows = np.flatnonzero(cut_count > j0)
        if ps.size == 0 or rows.size == 0:
            continue
        pk = (ps / (ps - 1.0)) ** k
        step = max(1, _BLOCK // (k * ps.size))
        for s in range(0, rows.size, step):
            rs = rows[s:s + step]
            res = np.sort(tuples[rs][:, :, None] % ps[None, None, :], axis=1)
            nu = 1 + np.count_nonzero(np.diff(res, axis=1), axis=1)
            fac = np.where(idx[None, :] < cut_count[rs][:, None], (1.0 - nu / ps) * pk, 1.0)
            out[rs] *= np.multiply.reduce(fac, axis=1)
    return out


def odd_prime_adjust(ms: np.ndarray, r: int, primes: np.ndarray) -> np.ndarray:
    """``prod (p-1)/(p-2)`` over odd primes ``p | m`` with ``p`` not dividing ``r``."""
    rem = np.abs(np.asarray(ms, dtype=np.int64))
    out = np.ones(rem.size, dtype=np.float64)
    nz = rem > 0
    while True:
        even = nz & (rem % 2 == 0)
        if not even.any():
            break
        rem[even] //= 2
    for p in primes.tolist():
        if p == 2:
            continue
        live = p * p <= rem
        if not live.any():
            break
        hit = live & (rem % p == 0)
        if hit.any():
            if r % p != 0:
                out[hit] *= (p - 1) / (p - 2)
            while hit.any():
                rem[hit] //= p
                hit = hit & (rem % p == 0)
    for i in np.flatnonzero(rem > 1).tolist():
        m = int(rem[i])
        if r % m != 0:
            out[i] *= (m - 1) / (m - 2)
    return out
