import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from qdemoivre.core import BinPartition, CountVector, ParticleKind, ProbValue, iter_counts
from qdemoivre.logfact import TABLE_LIMIT, ln_factorial, ln_factorials, ln_falling, ln_rising


class TestParticleKind:
    @pytest.mark.parametrize(
        "alias,kind",
        [("boson", ParticleKind.BOSON), ("+", ParticleKind.BOSON), ("F", ParticleKind.FERMION),
         ("-", ParticleKind.FERMION), ("classical", ParticleKind.DISTINGUISHABLE), (0, ParticleKind.DISTINGUISHABLE)],
    )
    def test_parse(self, alias, kind):
        assert ParticleKind.parse(alias) is kind

    def test_signs(self):
        assert [k.sign for k in ParticleKind] == [0, 1, -1]

    def test_unknown(self):
        with pytest.raises(ValueError):
            ParticleKind.parse("anyon")


class TestBinPartition:
    def test_derived(self):
        K = BinPartition((1, 2, 3))
        assert K.M == 6 and K.r == 3 and sum(K.q) == 1

    @pytest.mark.parametrize("K", [(), (0, 1), (2, -1)])
    def test_invalid(self, K):
        with pytest.raises(ValueError):
            BinPartition(K)

    def test_from_fractions(self):
        assert BinPartition.from_fractions([Fraction(1, 3), Fraction(2, 3)], 9).K == (3, 6)
        with pytest.raises(ValueError):
            BinPartition.from_fractions([Fraction(1, 3), Fraction(2, 3)], 10)
        with pytest.raises(ValueError):
            BinPartition.from_fractions([Fraction(1, 3), Fraction(1, 3)], 9)


class TestCountVector:
    def test_fractions(self):
        assert CountVector((1, 3)).x == (Fraction(1, 4), Fraction(3, 4))

    def test_empty_fractions_undefined(self):
        with pytest.raises(ValueError):
            CountVector((0, 0)).x

    def test_negative(self):
        with pytest.raises(ValueError):
            CountVector((1, -1))


class TestIterCounts:
    @given(st.integers(0, 12), st.integers(1, 4))
    def test_count_and_sum(self, N, r):
        counts = list(iter_counts(N, r))
        assert len(counts) == math.comb(N + r - 1, r - 1)
        assert len(set(counts)) == len(counts)
        assert all(sum(c) == N and min(c) >= 0 for c in counts)


class TestProbValue:
    def test_exact_log(self):
        p = ProbValue.from_fraction(Fraction(1, 8))
        assert p.logp == pytest.approx(-3 * math.log(2), rel=1e-15)

    def test_tiny_fraction_log(self):
        p = ProbValue.from_fraction(Fraction(1, 10**400))
        assert p.logp == pytest.approx(-400 * math.log(10), rel=1e-14)
        assert float(p) == 0.0

    def test_zero(self):
        assert ProbValue.from_fraction(0).logp == -math.inf
        assert ProbValue.from_log(-math.inf).is_zero

    def test_product_modes(self):
        a = ProbValue.from_fraction(Fraction(1, 2))
        b = ProbValue.from_log(math.log(0.25))
        assert (a * a).exact == Fraction(1, 4)
        assert (a * b).logp == pytest.approx(math.log(0.125))

    def test_mode_required(self):
        with pytest.raises(ValueError):
            ProbValue("exact")


class TestLogFactorial:
    @pytest.mark.parametrize("n", [0, 1, 5, 170, 10**5])
    def test_matches_lgamma(self, n):
        assert ln_factorial(n) == pytest.approx(math.lgamma(n + 1), rel=1e-13)

    @pytest.mark.parametrize("n", [TABLE_LIMIT + 1, 10**8, 10**12])
    def test_series_beyond_table(self, n):
        assert ln_factorial(n) == pytest.approx(float(gammaln(n + 1.0)), rel=1e-13)

    def test_exact_small(self):
        assert ln_factorial(20) == pytest.approx(math.log(math.factorial(20)), rel=1e-15)

    def test_vectorised(self):
        arr = np.array([0, 3, 50])
        np.testing.assert_allclose(ln_factorials(arr), [math.lgamma(v + 1) for v in arr], rtol=1e-14)

    def test_rising_falling(self):
        assert ln_rising(5, 3) == pytest.approx(math.log(5 * 6 * 7))
        assert ln_falling(5, 3) == pytest.approx(math.log(5 * 4 * 3))
        assert ln_falling(3, 5) == -math.inf
