import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from qdemoivre.binned_stats import quantum_prob
from qdemoivre.core import iter_counts
from qdemoivre.group_integrals import haar_moment, permanent_pair_average
from qdemoivre.haar_mc import (
    MCEstimate,
    binned_prob_fixed_U,
    mc_average,
    mixed_state_check,
    output_occupations,
    permanent,
    sample_haar_unitaries,
    sample_haar_unitary,
    transition_prob,
    unitarity_error,
)

KINDS = ["distinguishable", "boson", "fermion"]
HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def _naive_permanent(A):
    n = A.shape[0]
    return sum(math.prod(A[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def _exact(n, K, sigma):
    return float(quantum_prob(n, K, sigma, "exact").exact)


class TestSampling:
    def test_unitarity(self):
        U = sample_haar_unitaries(7, 500, seed=1)
        assert max(unitarity_error(u) for u in U) <= 1e-12

    def test_single_and_seeded(self):
        a = sample_haar_unitary(4, seed=3)
        b = sample_haar_unitary(4, seed=3)
        assert np.array_equal(a, b) and unitarity_error(a) <= 1e-12

    def test_zero_dimension(self):
        with pytest.raises(ValueError):
            sample_haar_unitary(0, seed=1)

    @pytest.mark.parametrize("power,exact", [(1, Fraction(1, 4)), (2, Fraction(1, 10))])
    def test_entry_moments(self, power, exact):
        U = sample_haar_unitaries(4, 100_000, seed=11)
        vals = np.abs(U[:, 0, 0]) ** (2 * power)
        oracle = haar_moment([0] * power, [0] * power, [0] * power, [0] * power, 4)
        assert oracle == exact
        est = MCEstimate(vals.mean(), vals.std(ddof=1) / math.sqrt(len(vals)), len(vals))
        assert est.consistent_with(float(exact))

    def test_position_invariance(self):
        # |U_kl|^2 ~ Beta(1, M-1) at every position; goodness of fit in
        # equiprobable cells, plus homogeneity across positions
        M, S, cells = 3, 10_000, 10
        U = sample_haar_unitaries(M, S, seed=2024)
        edges = stats.beta(1, M - 1).ppf(np.linspace(0, 1, cells + 1))
        table = []
        for k in range(M):
            for l in range(M):
                counts, _ = np.histogram(np.abs(U[:, k, l]) ** 2, bins=edges)
                table.append(counts)
                assert stats.chisquare(counts).pvalue > 1e-3
        assert stats.chi2_contingency(np.array(table)).pvalue > 1e-3


class TestPermanent:
    def test_scalar(self):
        assert permanent(np.array([[2.5 - 1j]])) == 2.5 - 1j

    def test_ones(self):
        assert permanent(np.ones((3, 3))) == pytest.approx(6.0)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_naive(self, n):
        rng = np.random.default_rng(n)
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        want = _naive_permanent(A)
        assert abs(permanent(A) - want) <= 1e-10 * abs(want)

    def test_stack(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 3, 3))
        np.testing.assert_allclose(permanent(A), [_naive_permanent(a) for a in A], rtol=1e-12)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            permanent(np.ones((15, 15)))

    def test_not_square(self):
        with pytest.raises(ValueError):
            permanent(np.ones((2, 3)))


class TestTransitionProb:
    def test_single_particle(self):
        U = sample_haar_unitary(4, seed=5)
        for k in range(4):
            for l in range(4):
                inp = tuple(int(i == k) for i in range(4))
                out = tuple(int(i == l) for i in range(4))
                for sigma in KINDS:
                    assert transition_prob(U, inp, out, sigma) == pytest.approx(abs(U[k, l]) ** 2, rel=1e-12)

    def test_hong_ou_mandel(self):
        assert transition_prob(HADAMARD, (1, 1), (1, 1), "boson") == pytest.approx(0.0, abs=1e-15)
        assert transition_prob(HADAMARD, (1, 1), (2, 0), "boson") == pytest.approx(0.5)
        assert transition_prob(HADAMARD, (1, 1), (1, 1), "fermion") == pytest.approx(1.0)
        assert transition_prob(HADAMARD, (1, 1), (1, 1), "distinguishable") == pytest.approx(0.5)

    def test_mismatched_totals(self):
        with pytest.raises(ValueError):
            transition_prob(HADAMARD, (1, 1), (1, 0), "boson")

    def test_fermion_occupation(self):
        with pytest.raises(ValueError):
            transition_prob(HADAMARD, (2, 0), (1, 1), "fermion")

    @pytest.mark.parametrize("sigma", KINDS)
    @pytest.mark.parametrize("N,M", [(1, 3), (2, 4), (3, 5), (4, 6)])
    def test_normalization(self, sigma, N, M):
        rng = np.random.default_rng(N * 10 + M)
        U = sample_haar_unitary(M, rng)
        inputs = output_occupations(N, M, sigma)
        for inp in [inputs[0], inputs[len(inputs) // 2], inputs[-1]]:
            total = sum(transition_prob(U, inp, out, sigma) for out in output_occupations(N, M, sigma))
            assert total == pytest.approx(1.0, abs=1e-8)


class TestBinnedFixedU:
    def test_single_bin(self):
        U = sample_haar_unitary(4, seed=8)
        assert binned_prob_fixed_U(U, (1, 1, 1, 0), (4,), "boson") == pytest.approx({(3,): 1.0})

    @pytest.mark.parametrize("sigma", ["distinguishable", "boson"])
    def test_identity(self, sigma):
        dist = binned_prob_fixed_U(np.eye(4), (3, 0, 0, 0), (1, 3), sigma)
        assert dist[(3, 0)] == pytest.approx(1.0)
        assert sum(dist.values()) == pytest.approx(1.0)

    def test_haar_average(self):
        U = sample_haar_unitaries(2, 10_000, seed=9)
        vals = {n: [] for n in iter_counts(2, 2)}
        for u in U:
            for n, p in binned_prob_fixed_U(u, (1, 1), (1, 1), "boson").items():
                vals[n].append(p)
        for n, v in vals.items():
            v = np.asarray(v)
            est = MCEstimate(v.mean(), v.std(ddof=1) / math.sqrt(len(v)), len(v))
            assert est.consistent_with(1 / 3)

    @pytest.mark.parametrize("sigma", KINDS)
    @pytest.mark.parametrize("N,K", [(2, (3, 3)), (3, (1, 2, 2))])
    def test_exhaustive_input_average_is_exact(self, sigma, N, K):
        # fixed U, uniform average over every input the statistics allow
        M = sum(K)
        U = sample_haar_unitary(M, seed=sum(K) + N)
        if sigma == "distinguishable":
            inputs = [tuple(np.bincount(ports, minlength=M)) for ports in itertools.product(range(M), repeat=N)]
        else:
            inputs = output_occupations(N, M, sigma)
        acc = {n: 0.0 for n in iter_counts(N, len(K))}
        for inp in inputs:
            for n, p in binned_prob_fixed_U(U, inp, K, sigma).items():
                acc[n] += p / len(inputs)
        for n, v in acc.items():
            assert v == pytest.approx(_exact(n, K, sigma), abs=1e-12)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            binned_prob_fixed_U(np.eye(13), (1,) * 13, (13,), "boson")


class TestMCAverage:
    def test_single_particle(self):
        est = mc_average("haar_average", (1, 2), "distinguishable", 5000, seed=1, N=1)
        assert est[(1, 0)].consistent_with(1 / 3) and est[(0, 1)].consistent_with(2 / 3)

    def test_fermion_pair(self):
        est = mc_average("haar_average", (2, 2), "fermion", 10_000, seed=2, N=2)
        assert est[(1, 1)].consistent_with(2 / 3)

    def test_input_average_fixed_U(self):
        est = mc_average("input_average", (3, 3), "boson", 10_000, seed=3, N=2)
        for n, e in est.items():
            assert e.consistent_with(_exact(n, (3, 3), "boson"))

    def test_simultaneous_distinguishable_correlation(self):
        # two distinguishable particles in one Haar U do not follow the
        # multinomial; the exact value is a fourth moment of U
        est = mc_average("haar_average", (1, 1), "distinguishable", 20_000, seed=4, N=2)
        both_first = float(haar_moment([0, 1], [0, 0], [0, 1], [0, 0], 2))
        assert both_first == pytest.approx(1 / 6)
        assert est[(2, 0)].consistent_with(both_first)
        assert not est[(2, 0)].consistent_with(0.25)

    @pytest.mark.parametrize("mode", ["haar_average", "input_average", "scattershot"])
    @pytest.mark.parametrize("sigma", KINDS)
    def test_seed_determinism(self, mode, sigma):
        a = mc_average(mode, (2, 3), sigma, 1500, seed=42, N=2)
        b = mc_average(mode, (2, 3), sigma, 1500, seed=42, N=2)
        assert a == b

    def test_worker_independence(self):
        a = mc_average("scattershot", (2, 2), "boson", 3000, seed=6, N=2, workers=1)
        b = mc_average("scattershot", (2, 2), "boson", 3000, seed=6, N=2, workers=3)
        assert a == b

    def test_different_seeds_differ(self):
        a = mc_average("haar_average", (1, 1), "boson", 500, seed=1, N=2)
        b = mc_average("haar_average", (1, 1), "boson", 500, seed=2, N=2)
        assert a != b

    def test_errors(self):
        with pytest.raises(ValueError):
            mc_average("haar_average", (1, 1), "boson", 1, seed=1, N=2)
        with pytest.raises(ValueError):
            mc_average("haar_average", (1, 1), "fermion", 100, seed=1, N=3)
        with pytest.raises(ValueError):
            mc_average("bogus", (1, 1), "boson", 100, seed=1, N=2)
        with pytest.raises(ValueError):
            mc_average("haar_average", (1, 1), "boson", 100, seed=None, N=2)

    def test_agreement_grid(self):
        # 3-stderr agreement in at least 99% of counts over repeated seeds;
        # distinguishable particles use independent input ports, where the
        # multinomial is exact
        configs = [
            ("boson", "haar_average", 2, (1, 1)),
            ("boson", "haar_average", 3, (1, 2, 2)),
            ("boson", "scattershot", 4, (3, 5)),
            ("boson", "input_average", 3, (2, 2, 2)),
            ("fermion", "haar_average", 3, (2, 2, 2)),
            ("fermion", "scattershot", 4, (2, 3, 3)),
            ("fermion", "input_average", 2, (2, 2)),
            ("distinguishable", "input_average", 3, (1, 2, 3)),
            ("distinguishable", "input_average", 4, (4, 4)),
        ]
        hits = total = 0
        for seed in range(4):
            for sigma, mode, N, K in configs:
                for n, e in mc_average(mode, K, sigma, 2000, seed=100 + seed, N=N).items():
                    total += 1
                    hits += e.consistent_with(_exact(n, K, sigma))
        assert hits / total >= 0.99


class TestMixedState:
    def test_diagonal_matches_mc_average(self):
        samples, seed = 4096, 12
        rho = [((1, 1, 0), (1, 1, 0), 1.0)]
        report = mixed_state_check(rho, 3, samples, seed, "boson", K=(1, 2))
        ref = mc_average("haar_average", (1, 2), "boson", samples, seed, inp=(1, 1, 0))
        for n, est in report.binned.items():
            assert est.mean == pytest.approx(ref[n].mean, rel=1e-12, abs=1e-15)

    def test_cross_moment_vanishes(self):
        rho = [
            ((1, 1, 0), (1, 1, 0), 0.5),
            ((2, 0, 0), (2, 0, 0), 0.5),
            ((1, 1, 0), (2, 0, 0), 0.3),
            ((2, 0, 0), (1, 1, 0), 0.3),
        ]
        report = mixed_state_check(rho, 3, 100_000, 13, "boson", outputs=[(1, 1, 0)])
        cross = [e for e in report.moments if e.n != e.m]
        assert cross and all(e.exact == 0 for e in cross)
        assert all(e.consistent for e in report.moments)
        diag = next(e for e in report.moments if e.n == e.m == (1, 1, 0))
        assert diag.exact == float(permanent_pair_average((1, 1, 0), (1, 1, 0), (1, 1, 0), 3)) == pytest.approx(1 / 6)

    @pytest.mark.parametrize("sigma", ["boson", "fermion"])
    def test_coherent_state_binned(self, sigma):
        a, b = (1, 1, 0, 0), (0, 1, 1, 0)
        rho = [(a, a, 0.5), (b, b, 0.5), (a, b, 0.5j), (b, a, -0.5j)]
        report = mixed_state_check(rho, 4, 20_000, 14, sigma, K=(2, 2))
        assert report.consistent

    @pytest.mark.parametrize(
        "rho",
        [
            [((1, 1, 0), (1, 1, 0), 0.5)],
            [((1, 1, 0), (1, 1, 0), 1.0), ((1, 1, 0), (2, 0, 0), 0.2)],
            [((1, 1, 0), (1, 1, 0), 0.5), ((1, 0, 0), (1, 0, 0), 0.5)],
        ],
    )
    def test_invalid_density(self, rho):
        with pytest.raises(ValueError):
            mixed_state_check(rho, 3, 100, 1, "boson")
