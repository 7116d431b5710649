"""Fast invariant suite backing the ``verify`` command.

Each check returns ``(passed, detail)``; :func:`run_all` evaluates them in
registration order so the report is deterministic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import permutations
from typing import Callable, NamedTuple

import numpy as np

from .asymptotics import (
    Window,
    gaussian_law,
    in_window,
    kl2,
    klr,
    layered_kl,
    layered_quantum_kl,
    max_relative_error,
    product_asymptotic,
    stirling_theta,
    tail_bound,
)
from .binned_stats import distribution, factorize, quantum_prob
from .core import ParticleKind, iter_counts
from .group_integrals import permanent_pair_average, weingarten_sum
from .haar_mc import mc_average, permanent, sample_haar_unitaries, unitarity_error

__all__ = ["CheckResult", "CHECKS", "run_all"]

KINDS = tuple(ParticleKind)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {}


def _check(name: str):
    def register(fn):
        CHECKS[name] = fn
        return fn

    return register


def _random_simplex(rng: np.random.Generator, r: int) -> np.ndarray:
    return rng.dirichlet(np.ones(r))


@_check("normalization")
def _normalization():
    for K in [(1, 1), (2, 3), (1, 2, 2), (1, 1, 1, 2)]:
        for kind in KINDS:
            for N in range(0, 7):
                if kind is ParticleKind.FERMION and N > sum(K):
                    continue
                total = sum((p.exact for p in distribution(N, K, kind, "exact").values()), Fraction(0))
                if total != 1:
                    return False, f"K={K} {kind.label} N={N}: sum={total}"
    return True, "exact sums equal 1"


@_check("fermion_support")
def _fermion_support():
    K = (1, 2, 3)
    for N in range(0, 7):
        for n, p in distribution(N, K, "fermion", "exact").items():
            outside = any(ni > ki for ni, ki in zip(n, K))
            if outside and p.exact != 0:
                return False, f"n={n} has P={p.exact}"
    return True, "zero outside n_i <= K_i"


@_check("single_particle")
def _single_particle():
    K = (1, 2, 4)
    M = sum(K)
    for kind in KINDS:
        for i, ki in enumerate(K):
            n = tuple(int(j == i) for j in range(len(K)))
            p = quantum_prob(n, K, kind, "exact").exact
            if p != Fraction(ki, M):
                return False, f"{kind.label} n={n}: {p} != {ki}/{M}"
    return True, "N=1 reproduces q_i"


@_check("factorization")
def _factorization():
    rng = np.random.default_rng(11)
    for kind in KINDS:
        for _ in range(30):
            r = int(rng.integers(2, 5))
            K = tuple(int(k) for k in rng.integers(1, 5, size=r))
            N = int(rng.integers(0, 9))
            if kind is ParticleKind.FERMION:
                N = min(N, sum(K))
            n = tuple(int(v) for v in rng.multinomial(N, np.array(K) / sum(K)))
            direct = quantum_prob(n, K, kind, "exact").exact
            layered = factorize(n, K, kind).probability("exact").exact
            if direct != layered:
                return False, f"{kind.label} n={n} K={K}: {direct} != {layered}"
    return True, "90 instances exact"


@_check("logspace_consistency")
def _logspace():
    worst = 0.0
    for kind in KINDS:
        for n in iter_counts(30, 3):
            K = (10, 20, 30)
            a = quantum_prob(n, K, kind, "exact")
            if a.is_zero:
                continue
            b = quantum_prob(n, K, kind, "logspace").logp
            worst = max(worst, abs(a.logp - b) / max(1.0, abs(a.logp)))
    return worst <= 1e-10, f"max relative log gap {worst:.2e}"


@_check("kl_identities")
def _kl_identities():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        r = int(rng.integers(2, 5))
        K = tuple(int(k) for k in rng.integers(1, 30, size=r))
        n = tuple(int(v) for v in rng.integers(1, 40, size=r))
        lhs, rhs = layered_kl(n, K)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
        lhs, rhs = layered_quantum_kl(n, K, "boson")
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


@_check("pinsker")
def _pinsker():
    grid = np.linspace(0.0, 1.0, 51)
    for x in grid:
        for q in grid[1:-1]:
            if kl2(x, q) < 2.0 * (x - q) ** 2 - 1e-15:
                return False, f"x={x} q={q}"
    return True, "K2(x|q) >= 2 (x-q)^2 on 51x49 grid"


@_check("de_moivre_laplace")
def _dml():
    N = 100
    n = (50, 50)
    exact = quantum_prob(n, (1, 1), "distinguishable", "exact")
    gauss = gaussian_law(n, (1, 1), "distinguishable").log_value
    gap = abs(float(exact) / math.exp(gauss) - 1.0)
    return 0.002 < gap < 0.003, f"relative gap {gap:.4%} at N=100"


@_check("gaussian_convergence")
def _convergence():
    errs = [max_relative_error(N, (N, N), "boson")[0] for N in (64, 256)]
    return errs[1] < errs[0], f"boson alpha=1/2 max errors {errs[0]:.3e} -> {errs[1]:.3e}"


@_check("tail_bounds")
def _tails():
    N, K = 100, (100, 100)
    w = Window()
    for kind in KINDS:
        for n in iter_counts(N, 2):
            if in_window(n, K, w):
                continue
            p = quantum_prob(n, K, kind, "logspace").logp
            if p > tail_bound(n, K, kind, window=w):
                return False, f"{kind.label} n={n}"
    return True, "all out-of-window counts bounded at N=100, M=200"


@_check("stirling_theta")
def _theta():
    theta = stirling_theta(np.arange(1, 2001))
    ok = bool(np.all((theta > 1 / 6) & (theta < 1.77)))
    return ok, f"theta_n in [{theta.min():.4f}, {theta.max():.4f}]"


@_check("product_brackets")
def _brackets():
    for m in (100, 1000):
        for sign in (1, -1):
            for n in range(0, 51):
                pa = product_asymptotic(n, m, sign)
                slack = 10.0 / m
                if not pa.log_lower - slack <= pa.log_product_exact <= pa.log_upper + slack:
                    return False, f"n={n} m={m} sign={sign}"
    return True, "exact products inside the brackets"


@_check("weingarten_pair_average")
def _pair_average():
    for M in range(2, 5):
        for kind in ("boson", "fermion"):
            for N in (1, 2):
                occs = [o for o in iter_counts(N, M) if kind == "boson" or max(o) <= 1]
                for n in occs:
                    for m in occs:
                        permanent_pair_average(n, m, occs[0], M, kind, "both")
    return True, "closed form matches Weingarten expansion for N <= 2, M <= 4"


@_check("weingarten_sums")
def _w_sums():
    for N in range(1, 4):
        for M in range(N, 6):
            rising = math.prod(range(M, M + N))
            falling = math.prod(range(M - N + 1, M + 1))
            if weingarten_sum(N, M) != Fraction(1, rising):
                return False, f"unsigned sum N={N} M={M}"
            if weingarten_sum(N, M, signed=True) != Fraction(1, falling):
                return False, f"signed sum N={N} M={M}"
    return True, "sum W = 1/M^(N rising), signed sum = 1/M^(N falling)"


@_check("haar_unitarity")
def _unitarity():
    U = sample_haar_unitaries(6, 64, seed=3)
    err = max(unitarity_error(u) for u in U)
    return err < 1e-12, f"max |U U^dag - 1| = {err:.1e}"


@_check("permanent")
def _permanent():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    naive = sum(math.prod(A[i, p[i]] for i in range(5)) for p in permutations(range(5)))
    got = permanent(A)
    return bool(abs(got - naive) <= 1e-10 * abs(naive)), f"|Ryser - naive| = {abs(got - naive):.1e}"


@_check("mc_agreement")
def _mc():
    est = mc_average("haar_average", (1, 1), "boson", 4000, seed=2024, N=2)
    bad = [n for n, e in est.items() if not e.consistent_with(1 / 3)]
    return not bad, "boson N=2 M=2 estimates within 3 stderr of 1/3" if not bad else f"off: {bad}"


def run_all() -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failed property
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return results
