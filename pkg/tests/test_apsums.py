import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from singser.apsums import (
    ClosedFormTerms,
    CongruenceSpec,
    character_euler_product,
    gallagher_ratio,
    linear_constant,
    mertens_like_sums,
    modulus_moment,
    pair_moment_closed,
    pair_moment_constant,
    pair_moment_from_modulus,
    pair_moment_semi_exact,
    pair_series_sum_brute,
    pair_series_sum_closed,
    pair_sum_unrestricted_closed,
    restricted_sum_brute,
    restricted_sum_leading,
    restricted_sum_main,
)
from singser.arith import CONSTANTS, characters_mod, euler_phi
from singser.errors import CapacityError, DomainError
from singser.report import fit_slope
from singser.singular import singular_series, singular_series_zero, two_term_exact

G, L2P = CONSTANTS.euler_gamma, CONSTANTS.log_two_pi
SQUAREFREE = (2, 3, 5, 6, 7, 10, 15, 30)


def _primorial(limit: int, r: int) -> int:
    return math.prod(p for p in oracles.primes_upto(limit) if r % p)


class TestConstants:
    def test_linear_constant_examples(self):
        assert linear_constant(1) == pytest.approx(-math.log(2 * math.pi) - np.euler_gamma, abs=1e-15)
        assert linear_constant(1) == pytest.approx(-2.4150927313, abs=1e-10)
        assert linear_constant(2) == pytest.approx(0.5 * (math.log(2 / (2 * math.pi)) - G - math.log(2)), abs=1e-15)
        assert linear_constant(4) == pytest.approx(0.5 * (math.log(4 / (2 * math.pi)) - G - math.log(2)), abs=1e-15)

    def test_pair_moment_constant(self):
        for r in (1, 3, 4, 12):
            assert pair_moment_constant(r) == pytest.approx(
                linear_constant(r) / r + euler_phi(r) / r**2 + 1 / r, abs=1e-15)
        # for r = 1 this is the constant 2 - gamma - log 2 pi of the unrestricted pair sum
        assert pair_moment_constant(1) == pytest.approx(2 - G - L2P, abs=1e-15)

    def test_character_product_trivial(self):
        triv = characters_mod(1)[0]
        assert character_euler_product(1, triv).value == pytest.approx(1.0)
        assert character_euler_product(4, triv).value == pytest.approx(0.5)
        assert character_euler_product(30, triv).value == pytest.approx(0.5 * 2 / 3 * 4 / 5)

    @pytest.mark.parametrize("r", [4, 5, 8, 12])
    def test_character_product_two_limits(self, r):
        for chi in characters_mod(r):
            a = character_euler_product(r, chi, 10**5)
            b = character_euler_product(r, chi, 10**6)
            assert abs(a.value - b.value) <= max(1e-8, a.tail_bound + b.tail_bound)

    def test_character_product_direct(self):
        chi = [c for c in characters_mod(5) if not c.is_principal][1]
        direct = (1 - chi(5) / 5) * np.prod([1 - (1 - chi(p)) ** 2 / (p - 1) ** 2
                                            for p in oracles.primes_upto(10**4) if p != 5])
        assert abs(character_euler_product(5, chi, 10**4).value - direct) < 1e-12

    def test_mertens_like(self):
        first, second = mertens_like_sums(2, 1)
        assert first == pytest.approx(2.0) and second == pytest.approx(2.5)
        assert mertens_like_sums(2, 6) == (0.0, 1.0)
        vals = [mertens_like_sums(h, 1)[0] for h in (2, 5, 10, 30, 100)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        direct = math.prod(p / (p - 1) for p in oracles.primes_upto(900) if 7 % p) - 1
        assert mertens_like_sums(30, 7)[0] == pytest.approx(direct, rel=1e-13)

    def test_closed_form_terms(self):
        t = ClosedFormTerms((("a", 1.0), ("b", 1e-17), ("c", complex(2.0, 3.0))))
        assert t.total == pytest.approx(3.0, abs=1e-12)
        assert t["c"] == complex(2.0, 3.0)
        assert t.as_dict()["total"] == t.total
        with pytest.raises(KeyError):
            t["zzz"]


class TestModulusMoment:
    @given(st.sampled_from(SQUAREFREE), st.integers(1, 40), st.sampled_from([1, 7, 11]),
           st.lists(st.integers(1, 11), min_size=1, max_size=4))
    def test_against_coprimality_average(self, q, h, r, classes):
        if math.gcd(q, r) != 1:
            return
        spec = CongruenceSpec(r, tuple(classes))
        assert modulus_moment(q, h, spec) == pytest.approx(oracles.modulus_moment(q, h, r, spec.classes), abs=1e-8)

    def test_k1_is_zero(self):
        for q in SQUAREFREE:
            assert modulus_moment(q, 37, CongruenceSpec(1, (1,))) == pytest.approx(0.0, abs=1e-12)

    def test_k2_prime_structure(self):
        p, h, r, c1, c2 = 7, 50, 3, 1, 2
        e1 = [oracles.ap_exp_sum(a, p, h, r, c1) for a in range(1, p)]
        e2 = [oracles.ap_exp_sum(p - a, p, h, r, c2) for a in range(1, p)]
        ref = sum(x * y for x, y in zip(e1, e2)).real / (p - 1) ** 2
        assert modulus_moment(p, h, CongruenceSpec(r, (c1, c2))) == pytest.approx(ref, abs=1e-10)

    def test_permutation_symmetry(self):
        base = (1, 2, 2, 3)
        ref = modulus_moment(10, 60, CongruenceSpec(3, base))
        for perm in set(itertools.permutations(base)):
            assert modulus_moment(10, 60, CongruenceSpec(3, perm)) == pytest.approx(ref, rel=1e-12, abs=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            modulus_moment(12, 10, CongruenceSpec(1, (1, 1)))
        with pytest.raises(DomainError):
            modulus_moment(6, 10, CongruenceSpec(3, (1, 1)))
        with pytest.raises(CapacityError):
            modulus_moment(42, 10, CongruenceSpec(1, (1, 1, 1, 1)))

    @given(st.sampled_from(SQUAREFREE + (210, 2310)), st.integers(1, 60), st.sampled_from([1, 13]),
           st.integers(1, 13), st.integers(1, 13))
    def test_pair_identity(self, q, h, r, c1, c2):
        if math.gcd(q, r) != 1:
            return
        direct = oracles.modulus_moment(q, h, r, (c1 % r, c2 % r)) if q <= 30 else None
        via = pair_moment_from_modulus(q, h, r, c1, c2)
        if direct is not None:
            assert via == pytest.approx(direct, abs=1e-9)
        if q <= 30:
            assert via == pytest.approx(modulus_moment(q, h, CongruenceSpec(r, (c1, c2))), abs=1e-8)


class TestPairSeriesSum:
    def test_examples(self):
        assert pair_series_sum_brute(5, 4, 3).value == 0.0
        ref = 4 * singular_series([0, 2]).value + 2 * singular_series([0, 4]).value
        assert pair_series_sum_brute(1, 0, 6).value == pytest.approx(ref, rel=1e-14)
        assert pair_series_sum_brute(1, 0, 6).value == pytest.approx(7.9219, abs=1e-4)

    def test_r2_two_limits(self):
        a = pair_series_sum_brute(2, 1, 10, 10**6)
        b = pair_series_sum_brute(2, 1, 10, 10**7)
        assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound
        ref = sum((10 - m) * oracles.singular_series([0, m], 2, 10**4) for m in range(1, 11, 2))
        assert a.value == pytest.approx(ref, rel=1e-4)

    @given(st.sampled_from([1, 2, 3, 4, 6]), st.integers(0, 6), st.integers(1, 60))
    def test_against_direct(self, r, v, h):
        L = 500
        ref = math.fsum((h - m) * oracles.singular_series([0, m], r, L) for m in range(1, h + 1) if (m - v) % r == 0)
        assert pair_series_sum_brute(r, v, h, L).value == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_printed_examples(self):
        h = 300
        t = pair_series_sum_closed(1, 1, h, "printed")
        assert t.total == pytest.approx(h * h / 2 - h / 2 * (math.log(h) + L2P + G), rel=1e-14)
        t = pair_series_sum_closed(4, 2, h, "printed")
        assert t.total == pytest.approx(h * h / 8 - h / 2 * (2 / 4) * math.log(2), rel=1e-14)
        t = pair_series_sum_closed(4, 2, h)
        assert t.total == pytest.approx(h * h / 8 - h / 2 * (2 / 4) * math.log(2), rel=1e-14)

    def test_r4_v1_character_term(self):
        chi = [c for c in characters_mod(4) if not c.is_principal][0]
        # the Euler product vanishes at p = 3, so the character term is zero here
        assert character_euler_product(4, chi).value == 0
        assert pair_series_sum_closed(4, 1, 500)["character"] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("r,v", [(1, 1), (3, 3), (3, 1), (4, 1), (4, 2), (6, 5), (5, 2)])
    def test_derived_residual_below_envelope(self, r, v):
        for h in (500, 1000, 2000, 4000):
            res = pair_series_sum_brute(r, v, h).value - pair_series_sum_closed(r, v, h).total
            assert abs(res) <= h**0.75

    def test_form_validation(self):
        with pytest.raises(DomainError):
            pair_series_sum_closed(1, 1, 10, "other")


class TestPairMoment:
    @pytest.mark.parametrize("h,r,c1,c2,L", [(10, 1, 1, 1, 13), (12, 5, 1, 3, 13), (12, 5, 2, 2, 13),
                                             (9, 1, 1, 1, 11), (14, 7, 3, 1, 17)])
    def test_semi_exact_is_definitional_at_primorial(self, h, r, c1, c2, L):
        Q = _primorial(L, r)
        assert pair_moment_semi_exact(h, r, c1, c2, L) == pytest.approx(pair_moment_from_modulus(Q, h, r, c1, c2), rel=1e-12)
        if Q < 10**5:
            assert pair_moment_semi_exact(h, r, c1, c2, L) == pytest.approx(oracles.modulus_moment(Q, h, r, (c1, c2)), rel=1e-10)

    def test_printed_semi_exact_examples(self):
        assert pair_moment_semi_exact(3, 5, 1, 5, form="printed") == pytest.approx(-9 / 25)
        h = 40
        second = mertens_like_sums(h, 1)[1]
        ref = -h * h + h * second + 2 * math.fsum((h - m) * two_term_exact(m, 1, h * h).value for m in range(1, h))
        assert pair_moment_semi_exact(h, 1, 1, 1, form="printed") == pytest.approx(ref, rel=1e-12)

    @given(st.integers(2, 200), st.sampled_from([1, 3, 4, 5]), st.integers(1, 5), st.integers(1, 5))
    def test_semi_exact_symmetric(self, h, r, c1, c2):
        for form in ("derived", "printed"):
            a = pair_moment_semi_exact(h, r, c1, c2, form=form)
            b = pair_moment_semi_exact(h, r, c2, c1, form=form)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-9)

    def test_printed_closed_examples(self):
        h = 700
        M1 = mertens_like_sums(h, 1)[0]
        t = pair_moment_closed(h, 1, 1, 1, "printed")
        assert t.total == pytest.approx(h * M1 - h * math.log(h) + linear_constant(1) * h, rel=1e-13)
        t = pair_moment_closed(h, 4, 1, 3, "printed")  # r/d = 2: no characters
        assert t.total == pytest.approx(-h * (2 / 16) * math.log(2), rel=1e-13)

    @given(st.integers(2, 5000), st.sampled_from([3, 4, 5, 12]), st.integers(1, 12), st.integers(1, 12),
           st.integers(-30, 30))
    def test_closed_depends_on_difference(self, h, r, c1, c2, t):
        for form in ("derived", "printed"):
            a = pair_moment_closed(h, r, c1, c2, form).total
            b = pair_moment_closed(h, r, c1 + t, c2 + t, form).total
            assert a == pytest.approx(b, rel=1e-12, abs=1e-9)

    @pytest.mark.parametrize("r,c", [(1, 1), (3, 2), (4, 1)])
    def test_equal_class_envelope(self, r, c):
        hs = (500, 1000, 2000, 4000)
        res = [pair_moment_semi_exact(h, r, c, c) - pair_moment_closed(h, r, c, c).total for h in hs]
        assert all(abs(x) <= h**0.75 for x, h in zip(res, hs))

    def test_equal_class_dense_slope(self):
        # on a dense grid the fluctuating remainder fits well below the declared exponent
        hs = np.unique(np.geomspace(256, 4096, 16).astype(int)).tolist()
        res = [pair_moment_semi_exact(h, 1, 1, 1) - pair_moment_closed(h, 1, 1, 1).total for h in hs]
        assert fit_slope(hs, res).slope <= 0.75


class TestRestrictedSum:
    def test_k1_is_zero(self):
        assert restricted_sum_brute(50, CongruenceSpec(3, (2,))).value == 0.0

    def test_r2_example(self):
        pairs = [(1, 2), (1, 4), (3, 2), (3, 4)]
        ref = math.fsum(singular_series_zero(p, 2).value for p in pairs)
        assert restricted_sum_brute(4, CongruenceSpec(2, (1, 2))).value == pytest.approx(ref, rel=1e-14)

    def test_r1_pair_identity(self):
        h = 300
        ref = 2 * math.fsum((h - m) * (two_term_exact(m).value - 1) for m in range(1, h))
        assert restricted_sum_brute(h, CongruenceSpec(1, (1, 1))).value == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("r,classes,h", [(3, (1, 1, 2), 10), (2, (1, 1, 1), 8), (1, (1, 1, 1), 9), (4, (1, 3), 20)])
    def test_against_enumeration(self, r, classes, h):
        L = 200
        spec = CongruenceSpec(r, classes)
        cand = [[m for m in range(1, h + 1) if (m - c) % r == 0] for c in spec.classes]
        ordered = math.fsum(oracles.singular_series_zero(t, r, L) for t in itertools.product(*cand) if len(set(t)) == len(t))
        got = restricted_sum_brute(h, spec, L)
        assert got.value == pytest.approx(ordered, rel=1e-10, abs=1e-10)
        auts = math.prod(math.factorial(spec.classes.count(c)) for c in set(spec.classes))
        assert restricted_sum_brute(h, spec, L, "sets").value == pytest.approx(ordered / auts, rel=1e-10, abs=1e-10)

    @given(st.permutations([1, 1, 2]), st.integers(3, 12))
    def test_brute_permutation_invariant(self, classes, h):
        base = restricted_sum_brute(h, CongruenceSpec(3, (1, 1, 2)), 200).value
        assert restricted_sum_brute(h, CongruenceSpec(3, tuple(classes)), 200).value == pytest.approx(base, rel=1e-12, abs=1e-12)

    @given(st.permutations([1, 1, 3, 3]), st.sampled_from(["derived", "printed"]))
    def test_main_permutation_invariant(self, classes, form):
        base = restricted_sum_main(1000, CongruenceSpec(4, (1, 1, 3, 3)), form)
        assert restricted_sum_main(1000, CongruenceSpec(4, tuple(classes)), form) == pytest.approx(base, rel=1e-12)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            restricted_sum_brute(400, CongruenceSpec(1, (1, 1, 1, 1)))


class TestMainTerms:
    def test_odd_k(self):
        assert restricted_sum_main(500, CongruenceSpec(4, (1, 1, 1))) == 0.0
        assert restricted_sum_leading(500, CongruenceSpec(4, (1, 1, 1))) == 0.0
        assert restricted_sum_leading(500, CongruenceSpec(4, (1, 1, 2, 3))) == 0.0

    @pytest.mark.parametrize("form", ["derived", "printed"])
    def test_k2_equal_collapse(self, form):
        h, r = 1000, 4
        M1 = mertens_like_sums(h, r)[0]
        v2 = pair_moment_closed(h, r, 1, 1, form).total
        assert restricted_sum_main(h, CongruenceSpec(r, (1, 1)), form) == pytest.approx(v2 - h / r * M1, rel=1e-12)
        assert restricted_sum_main(h, CongruenceSpec(r, (1, 1)), form) == pytest.approx(
            restricted_sum_leading(h, CongruenceSpec(r, (1, 1)), form), rel=1e-10)

    def test_k2_unequal(self):
        for form in ("derived", "printed"):
            assert restricted_sum_main(800, CongruenceSpec(4, (1, 3)), form) == pytest.approx(
                pair_moment_closed(800, 4, 1, 3, form).total, rel=1e-12)

    def test_leading_examples(self):
        h = 900
        printed = restricted_sum_leading(h, CongruenceSpec(1, (1, 1)), "printed")
        assert printed == pytest.approx(-h * math.log(h) + (-G - L2P) * h, rel=1e-13)
        assert restricted_sum_leading(h, CongruenceSpec(1, (1, 1))) == pytest.approx(pair_sum_unrestricted_closed(h), rel=1e-13)
        single = restricted_sum_leading(h, CongruenceSpec(4, (1, 1)))
        assert restricted_sum_leading(h, CongruenceSpec(4, (1, 1, 3, 3))) == pytest.approx(single**2, rel=1e-12)
        assert restricted_sum_leading(h, CongruenceSpec(4, (1, 1, 1, 1))) == pytest.approx(3 * single**2, rel=1e-12)

    def test_unrestricted_pair_sum(self):
        h = 1234
        assert pair_sum_unrestricted_closed(h) == pytest.approx(-h * math.log(h) + (2 - G - L2P) * h)

    def test_k2_relative_gap_small(self):
        for r, classes in ((1, (1, 1)), (3, (1, 1)), (4, (1, 1))):
            spec = CongruenceSpec(r, classes)
            for h in (500, 1000, 2000):
                brute = restricted_sum_brute(h, spec).value
                assert abs(brute - restricted_sum_main(h, spec)) / h < 0.01


class TestGallagher:
    def test_k1(self):
        assert gallagher_ratio(30, 1) == 1.0

    def test_against_direct(self):
        h, k, L = 14, 3, 300
        rows = list(itertools.combinations(range(1, h + 1), k))
        ref = math.fsum(oracles.singular_series(H, 1, L) for H in rows) / len(rows)
        assert gallagher_ratio(h, k, L) == pytest.approx(ref, rel=1e-11)

    def test_pairs_near_one(self):
        assert abs(gallagher_ratio(100, 2) - 1) <= 0.1

    def test_capacity(self):
        with pytest.raises(CapacityError):
            gallagher_ratio(1000, 3)
