import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdemoivre.binned_stats import (
    avg_configuration_prob,
    classical_prob,
    distribution,
    exponential_smallness,
    factorize,
    quantum_factor,
    quantum_prob,
)
from qdemoivre.core import iter_counts
from conftest import enumerate_binned

KINDS = ["distinguishable", "boson", "fermion"]


@st.composite
def instances(draw, max_N=8, max_r=4, max_k=4, kinds=KINDS):
    kind = draw(st.sampled_from(kinds))
    K = tuple(draw(st.lists(st.integers(1, max_k), min_size=1, max_size=max_r)))
    top = min(max_N, sum(K)) if kind == "fermion" else max_N
    N = draw(st.integers(0, top))
    parts = sorted(draw(st.lists(st.integers(0, N), min_size=len(K) - 1, max_size=len(K) - 1)))
    n = tuple(b - a for a, b in zip([0] + parts, parts + [N]))
    return kind, n, K


class TestClassicalProb:
    def test_single_bin_power(self):
        assert classical_prob((3, 0), (1, 2), "exact").exact == Fraction(1, 27)

    def test_symmetric_binomial(self):
        assert classical_prob((1, 1), (1, 1), "exact").exact == Fraction(1, 2)

    def test_multinomial(self):
        assert classical_prob((1, 3), (1, 3), "exact").exact == Fraction(27, 64)

    def test_empty(self):
        assert classical_prob((0, 0, 0), (1, 2, 3), "exact").exact == 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            classical_prob((1, 1), (1, 1, 1))


class TestQuantumFactor:
    @pytest.mark.parametrize("sigma", ["boson", "fermion"])
    def test_single_particle(self, sigma):
        assert quantum_factor((0, 1, 0), (2, 3, 1), sigma, "exact").exact == 1

    def test_boson(self):
        assert quantum_factor((2, 0), (1, 1), "boson", "exact").exact == Fraction(4, 3)

    def test_fermion(self):
        assert quantum_factor((1, 1), (2, 2), "fermion", "exact").exact == Fraction(4, 3)

    def test_distinguishable_rejected(self):
        with pytest.raises(ValueError):
            quantum_factor((1, 1), (1, 1), "distinguishable")

    def test_fermion_overfull_rejected(self):
        with pytest.raises(ValueError):
            quantum_factor((2, 1), (1, 1), "fermion")

    @given(instances(kinds=["boson", "fermion"]))
    def test_positive_on_support(self, inst):
        kind, n, K = inst
        if kind == "fermion" and any(a > b for a, b in zip(n, K)):
            return
        assert quantum_factor(n, K, kind, "exact").exact > 0


class TestQuantumProb:
    def test_two_bosons(self):
        assert quantum_prob((1, 1), (1, 1), "boson", "exact").exact == Fraction(1, 3)

    def test_two_fermions(self):
        assert quantum_prob((1, 1), (2, 2), "fermion", "exact").exact == Fraction(2, 3)

    @given(instances(kinds=["distinguishable"]))
    def test_reduction(self, inst):
        _, n, K = inst
        assert quantum_prob(n, K, "distinguishable", "exact") == classical_prob(n, K, "exact")

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("N,K", [(3, (1, 2)), (4, (2, 1, 2)), (3, (1, 1, 1, 2)), (5, (3, 3))])
    def test_matches_microstate_enumeration(self, kind, N, K):
        oracle = enumerate_binned(N, K, kind)
        for n in iter_counts(N, len(K)):
            assert quantum_prob(n, K, kind, "exact").exact == oracle.get(n, 0)

    def test_fermion_outside_support_is_zero(self):
        p = quantum_prob((3, 0), (2, 2), "fermion", "exact")
        assert p.exact == 0 and p.is_zero
        assert quantum_prob((3, 0), (2, 2), "fermion", "logspace").logp == -math.inf

    @given(instances(kinds=["fermion"]))
    def test_fermion_support(self, inst):
        _, n, K = inst
        outside = any(a > b for a, b in zip(n, K))
        assert (quantum_prob(n, K, "fermion", "exact").exact == 0) == outside

    @given(instances(max_N=12))
    def test_logspace_consistency(self, inst):
        kind, n, K = inst
        exact = quantum_prob(n, K, kind, "exact")
        logp = quantum_prob(n, K, kind, "logspace").logp
        if exact.is_zero:
            assert logp == -math.inf
        else:
            assert logp == pytest.approx(math.log(exact.exact), rel=1e-10, abs=1e-12)

    def test_exact_to_logspace_conversion(self):
        p = quantum_prob((40, 60), (30, 70), "boson", "exact")
        assert p.to_logspace().logp == pytest.approx(math.log(p.exact), rel=1e-12)

    def test_auto_switches_to_logspace(self):
        assert quantum_prob((150, 150), (1, 1), "boson").mode == "logspace"
        assert quantum_prob((50, 50), (1, 1), "boson").mode == "exact"


class TestDistribution:
    @given(instances(max_N=10))
    def test_normalization(self, inst):
        kind, n, K = inst
        N = sum(n)
        total = sum((p.exact for p in distribution(N, K, kind, "exact").values()), Fraction(0))
        assert total == 1

    @given(instances(max_N=8))
    def test_matches_pointwise(self, inst):
        kind, n, K = inst
        table = distribution(sum(n), K, kind, "exact")
        assert table[n].exact == quantum_prob(n, K, kind, "exact").exact

    def test_zero_particles(self):
        table = distribution(0, (2, 3), "boson", "exact")
        assert list(table) == [(0, 0)] and table[(0, 0)].exact == 1


class TestAvgConfigurationProb:
    @pytest.mark.parametrize(
        "N,M,sigma,value",
        [(1, 5, "boson", Fraction(1, 5)), (2, 2, "boson", Fraction(1, 3)), (2, 4, "fermion", Fraction(1, 6))],
    )
    def test_values(self, N, M, sigma, value):
        assert avg_configuration_prob(N, M, sigma, "exact").exact == value

    def test_fermion_overfull(self):
        with pytest.raises(ValueError):
            avg_configuration_prob(5, 4, "fermion")

    @pytest.mark.parametrize("sigma", KINDS)
    def test_logspace_agrees(self, sigma):
        a = avg_configuration_prob(7, 11, sigma, "exact")
        b = avg_configuration_prob(7, 11, sigma, "logspace")
        assert b.logp == pytest.approx(math.log(a.exact), rel=1e-12)


class TestExponentialSmallness:
    def test_boson_density_one(self):
        assert exponential_smallness(1, 10, "boson").gamma == pytest.approx(2 * math.log(2))

    def test_fermion_half(self):
        assert exponential_smallness(Fraction(1, 2), 10, "fermion").gamma == pytest.approx(2 * math.log(2))

    def test_fermion_dense_rejected(self):
        with pytest.raises(ValueError):
            exponential_smallness(1, 10, "fermion")

    @pytest.mark.parametrize("sigma,alpha", [("boson", 1), ("boson", Fraction(1, 2)), ("fermion", Fraction(1, 2))])
    def test_tracks_exact_within_order_one_over_N(self, sigma, alpha):
        gaps = []
        for N in (2, 20, 200):
            M = int(N / alpha)
            exact = avg_configuration_prob(N, M, sigma, "logspace").logp
            gaps.append(abs(exponential_smallness(alpha, N, sigma).log_p - exact))
        assert gaps[0] < 1.0
        assert gaps[2] < gaps[1] < gaps[0]
        assert gaps[2] * 200 < 1.0


class TestFactorize:
    def test_single_layer(self):
        dec = factorize((3, 2), (2, 4), "boson")
        assert len(dec) == 1
        assert dec.probability("exact").exact == quantum_prob((3, 2), (2, 4), "boson", "exact").exact

    def test_classical_example(self):
        dec = factorize((1, 1, 2), (1, 2, 3), "distinguishable")
        assert len(dec) == 2
        assert dec.probability("exact").exact == classical_prob((1, 1, 2), (1, 2, 3), "exact").exact

    def test_boson_example(self):
        dec = factorize((1, 1, 1), (2, 2, 2), "boson")
        assert dec.probability("exact").exact == quantum_prob((1, 1, 1), (2, 2, 2), "boson", "exact").exact

    def test_layer_bookkeeping(self):
        dec = factorize((2, 1, 3, 1), (1, 2, 3, 4), "boson")
        assert [(l.s, l.N, l.M, l.n, l.K) for l in dec] == [(1, 7, 10, 2, 1), (2, 5, 9, 1, 2), (3, 4, 7, 3, 3)]
        assert dec.layers[0].qbar == Fraction(1, 10) and dec.layers[2].xbar == Fraction(3, 4)

    def test_needs_two_bins(self):
        with pytest.raises(ValueError):
            factorize((3,), (4,), "boson")

    @given(instances(max_N=12))
    def test_exact_identity(self, inst):
        kind, n, K = inst
        if len(K) < 2:
            return
        dec = factorize(n, K, kind)
        assert dec.probability("exact").exact == quantum_prob(n, K, kind, "exact").exact
        for layer in dec:
            assert 0 <= layer.qbar <= 1
