import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from singser.errors import CapacityError, DomainError
from singser.singular import (
    TupleSet,
    nu,
    pair_constant,
    singular_series,
    singular_series_batch,
    singular_series_zero,
    tail_log_bound,
    two_term_batch,
    two_term_exact,
)

SMALL_LIMIT = 2000
twin_sets = st.lists(st.integers(-60, 60), min_size=2, max_size=5, unique=True)


def test_nu_examples():
    assert nu([0, 2, 6], 5) == 3
    assert nu([0, 2, 6], 2) == 1
    assert nu([0, 2, 6], 7) == 3
    with pytest.raises(DomainError):
        nu([], 3)


def test_tupleset():
    H = TupleSet.of([6, 0, 2])
    assert H.elements == (0, 2, 6) and H.k == 3 and H.diameter == 6
    assert H.shifted(5).elements == (5, 7, 11)
    with pytest.raises(DomainError):
        TupleSet.of([1, 1])


class TestSingularSeries:
    def test_trivial(self):
        assert singular_series([7]).value == 1.0 and singular_series([7]).tail_bound == 0.0
        assert singular_series([0, 1]).value == 0.0
        assert singular_series([0, 2, 4]).value == 0.0  # covers every class mod 3

    def test_twin_constant(self):
        sv = singular_series([0, 2], prime_limit=10**8)
        assert sv.value == pytest.approx(1.3203236316937391, abs=1e-9)
        assert sv.tail_bound < 1e-7

    def test_twin_constant_two_limits(self):
        # independent product at two limits; both brackets must hold
        a = singular_series([0, 2], prime_limit=10**6)
        b = singular_series([0, 2], prime_limit=10**7)
        assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound
        assert a.tail_bound >= b.tail_bound

    @given(twin_sets)
    def test_against_direct_product(self, H):
        got = singular_series(H, 1, SMALL_LIMIT).value
        assert got == pytest.approx(oracles.singular_series(H, 1, SMALL_LIMIT), rel=1e-11, abs=1e-13)

    @given(twin_sets, st.sampled_from([1, 2, 3, 4, 6, 10, 15, 30]))
    def test_against_direct_product_r(self, H, r):
        got = singular_series(H, r, SMALL_LIMIT).value
        assert got == pytest.approx(oracles.singular_series(H, r, SMALL_LIMIT), rel=1e-11, abs=1e-13)

    @given(twin_sets, st.integers(-10**6, 10**6))
    def test_translation_invariance(self, H, t):
        assert singular_series(H).value == singular_series([x + t for x in H]).value

    @given(twin_sets)
    def test_permutation_invariance(self, H):
        assert singular_series(H).value == singular_series(list(reversed(H))).value

    def test_tail_bound_monotone(self):
        for H in ([0, 2], [0, 2, 6], [0, 4, 6, 10]):
            assert singular_series(H, prime_limit=10**6).tail_bound >= singular_series(H, prime_limit=10**7).tail_bound

    def test_tail_bound_is_an_upper_bound(self):
        # the omitted primes between the two limits must fit inside the first bound
        for H in ([0, 2], [0, 2, 6], [0, 6, 12, 18]):
            lo = singular_series(H, prime_limit=10**4)
            hi = singular_series(H, prime_limit=10**6)
            assert abs(lo.value - hi.value) <= lo.tail_bound

    def test_tail_log_bound_dominates_sum(self):
        p = np.array(oracles.primes_upto(200000))
        for k in (2, 3, 5):
            L = 1000
            tail = np.sum((k * k + k) / (p[p > L] - k) ** 2.0)
            assert tail <= tail_log_bound(k, L)

    def test_limit_checks(self):
        with pytest.raises(DomainError):
            singular_series([0, 500], prime_limit=100)
        with pytest.raises(DomainError):
            singular_series([0, 1, 2], prime_limit=5)

    def test_batch_matches_scalar(self):
        rows = np.array([[0, 2, 6], [0, 4, 6], [1, 3, 7], [0, 6, 12]])
        vals, tails = singular_series_batch(rows)
        for row, v, t in zip(rows, vals, tails):
            sv = singular_series(row.tolist())
            assert v == sv.value and t == sv.tail_bound


class TestSingularZero:
    def test_examples(self):
        assert singular_series_zero([5]).value == 0.0
        assert singular_series_zero([0, 1]).value == -1.0
        assert singular_series_zero([0, 2]).value == pytest.approx(0.3203236317, abs=2e-6)
        assert singular_series_zero([]).value == 1.0

    @given(st.lists(st.integers(0, 40), min_size=2, max_size=4, unique=True), st.sampled_from([1, 3, 4]))
    def test_against_oracle(self, H, r):
        got = singular_series_zero(H, r, 500).value
        assert got == pytest.approx(oracles.singular_series_zero(H, r, 500), abs=1e-11)

    @pytest.mark.parametrize("r", [1, 3, 4])
    def test_moebius_inversion(self, r):
        base = (0, 2, 6, 8, 12)
        for size in range(len(base) + 1):
            for H in itertools.combinations(base, size):
                total, bound = 0.0, singular_series(H, r).tail_bound
                for j in range(len(H) + 1):
                    for J in itertools.combinations(H, j):
                        sv = singular_series_zero(J, r)
                        total += sv.value
                        bound += sv.tail_bound
                assert abs(total - singular_series(H, r).value) <= bound + 1e-12

    def test_capacity(self):
        with pytest.raises(CapacityError):
            singular_series_zero(list(range(0, 42, 2)))


class TestTwoTerm:
    def test_odd_is_zero(self):
        for m in (1, 3, 15, 999):
            assert two_term_exact(m).value == 0.0

    def test_r2_m3(self):
        a = two_term_exact(3, 2)
        b = singular_series([0, 3], 2)
        assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound
        # p = 3 contributes (2/3)/(2/3)^2 = 3/2 instead of 1 - 1/4, p = 2 is skipped
        assert a.value == pytest.approx(pair_constant(1) / (3 / 4) * (3 / 2), rel=1e-12)

    def test_random_against_full_product(self):
        rng = np.random.default_rng(20261016)
        ms = rng.integers(1, 10**6, size=200)
        for m, r in zip(ms.tolist(), rng.choice([1, 2, 3, 4, 6, 12], size=200).tolist()):
            a = two_term_exact(m, r)
            b = singular_series([0, m], r)
            assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound

    def test_sign_of_m(self):
        assert two_term_exact(-12).value == two_term_exact(12).value

    def test_batch(self):
        vals, _ = two_term_batch(np.arange(1, 50))
        for m, v in zip(range(1, 50), vals):
            assert v == pytest.approx(two_term_exact(m).value, rel=1e-15)
        with pytest.raises(DomainError):
            two_term_batch([0, 2])

    def test_pair_constant_matches_direct(self):
        direct = math.prod(1 - 1 / (p - 1) ** 2 for p in oracles.primes_upto(5000) if p > 2)
        assert pair_constant(1, 5000) == pytest.approx(direct, rel=1e-13)
        direct3 = math.prod(1 - 1 / (p - 1) ** 2 for p in oracles.primes_upto(5000) if p > 3)
        assert pair_constant(3, 5000) == pytest.approx(direct3, rel=1e-13)
