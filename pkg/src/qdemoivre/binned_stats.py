"""Exact average counting probabilities in binned output ports of a
Haar-random multiport.

Every probability comes in two numeric modes: ``"exact"`` (rational
arithmetic, used as the reference in tests) and ``"logspace"`` (natural
log as a float, needed once ``N`` runs into the hundreds). ``"auto"``
picks exact for ``N <= EXACT_LIMIT``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import NamedTuple, Optional

from .core import (
    BinPartition,
    CountVector,
    ParticleKind,
    ProbValue,
    as_counts,
    as_kind,
    as_partition,
    iter_counts,
)
from .logfact import ln_factorial, ln_falling, ln_rising

__all__ = [
    "EXACT_LIMIT",
    "classical_prob",
    "quantum_factor",
    "quantum_prob",
    "distribution",
    "avg_configuration_prob",
    "exponential_smallness",
    "Smallness",
    "Layer",
    "LayerDecomposition",
    "factorize",
]

EXACT_LIMIT = 200


def _resolve_mode(mode: str, N: int) -> str:
    if mode == "auto":
        return "exact" if N <= EXACT_LIMIT else "logspace"
    if mode not in ("exact", "logspace"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def _check(n, K) -> tuple[CountVector, BinPartition]:
    n = as_counts(n)
    K = as_partition(K)
    if n.r != K.r:
        raise ValueError(f"count vector has {n.r} bins but partition has {K.r}")
    return n, K


def _fermion_support(n: CountVector, K: BinPartition) -> bool:
    return all(ni <= ki for ni, ki in zip(n.n, K.K))


def _zero(mode: str) -> ProbValue:
    if mode == "exact":
        return ProbValue.from_fraction(Fraction(0))
    return ProbValue.from_log(-math.inf)


def classical_prob(n, K, mode: str = "auto") -> ProbValue:
    """Multinomial probability ``N!/prod(n_i!) prod(q_i**n_i)`` with
    ``q_i = K_i/M``."""
    n, K = _check(n, K)
    N, M = n.N, K.M
    mode = _resolve_mode(mode, N)
    if mode == "exact":
        # multinomial coefficient via successive binomials keeps ints small
        coeff = 1
        left = N
        for ni in n.n:
            coeff *= comb(left, ni)
            left -= ni
        weight = 1
        for ni, ki in zip(n.n, K.K):
            weight *= ki**ni
        return ProbValue.from_fraction(Fraction(coeff * weight, M**N))
    logp = ln_factorial(N)
    for ni, ki in zip(n.n, K.K):
        logp += -ln_factorial(ni) + (ni * math.log(ki / M) if ni else 0.0)
    return ProbValue.from_log(logp)


def _quantum_exact(n: CountVector, K: BinPartition, kind: ParticleKind) -> Fraction:
    N, M = n.N, K.M
    if kind is ParticleKind.BOSON:
        num = 1
        for ni, ki in zip(n.n, K.K):
            num *= comb(ki + ni - 1, ni)
        return Fraction(num, comb(M + N - 1, N))
    num = 1
    for ni, ki in zip(n.n, K.K):
        num *= comb(ki, ni)
    return Fraction(num, comb(M, N))


def _quantum_log(n: CountVector, K: BinPartition, kind: ParticleKind) -> float:
    N, M = n.N, K.M
    if kind is ParticleKind.BOSON:
        logp = ln_factorial(N) - ln_rising(M, N)
        for ni, ki in zip(n.n, K.K):
            logp += ln_rising(ki, ni) - ln_factorial(ni)
        return logp
    if not _fermion_support(n, K):
        return -math.inf
    logp = ln_factorial(N) - ln_falling(M, N)
    for ni, ki in zip(n.n, K.K):
        logp += ln_falling(ki, ni) - ln_factorial(ni)
    return logp


def _quantum_guard(n: CountVector, K: BinPartition, kind: ParticleKind) -> None:
    if kind is ParticleKind.DISTINGUISHABLE:
        raise ValueError("the quantum factor is identically 1 for distinguishable particles")
    if kind is ParticleKind.FERMION and n.N > K.M:
        raise ValueError(f"{n.N} fermions do not fit into {K.M} ports")


def quantum_factor(n, K, sigma, mode: str = "auto") -> ProbValue:
    """Ratio ``Q`` between the boson/fermion probability and the
    multinomial one.

    ``Q = prod_i prod_{l<n_i} (1 +- l/K_i) / prod_{l<N} (1 +- l/M)``; it
    vanishes for fermions when some ``n_i > K_i``. The returned value is
    not a probability (it may exceed 1) but uses the same container.
    """
    n, K = _check(n, K)
    kind = as_kind(sigma)
    _quantum_guard(n, K, kind)
    N, M = n.N, K.M
    mode = _resolve_mode(mode, N)
    s = kind.sign
    if mode == "exact":
        if kind is ParticleKind.FERMION and not _fermion_support(n, K):
            return _zero("exact")
        value = Fraction(1)
        for ni, ki in zip(n.n, K.K):
            for l in range(ni):
                value *= Fraction(ki + s * l, ki)
        for l in range(N):
            value /= Fraction(M + s * l, M)
        return ProbValue.from_fraction(value)
    if kind is ParticleKind.FERMION and not _fermion_support(n, K):
        return _zero("logspace")
    ln_prod = ln_rising if s > 0 else ln_falling
    logq = -(ln_prod(M, N) - N * math.log(M))
    for ni, ki in zip(n.n, K.K):
        logq += ln_prod(ki, ni) - ni * math.log(ki)
    return ProbValue.from_log(logq)


def quantum_prob(n, K, sigma, mode: str = "auto") -> ProbValue:
    """Average probability of counting ``n`` particles of kind ``sigma``
    in the bins ``K``; distinguishable particles reduce to
    :func:`classical_prob`."""
    n, K = _check(n, K)
    kind = as_kind(sigma)
    if kind is ParticleKind.DISTINGUISHABLE:
        return classical_prob(n, K, mode)
    _quantum_guard(n, K, kind)
    mode = _resolve_mode(mode, n.N)
    if mode == "exact":
        return ProbValue.from_fraction(_quantum_exact(n, K, kind))
    return ProbValue.from_log(_quantum_log(n, K, kind))


def distribution(N: int, K, sigma, mode: str = "auto") -> dict[tuple[int, ...], ProbValue]:
    """Full table ``n -> P(n|K)`` over all count vectors with total ``N``.

    Values agree with :func:`quantum_prob` entry by entry; in exact mode
    the per-bin factors are tabulated once over a shared denominator.
    """
    K = as_partition(K)
    kind = as_kind(sigma)
    if kind is ParticleKind.FERMION and N > K.M:
        raise ValueError(f"{N} fermions do not fit into {K.M} ports")
    if _resolve_mode(mode, N) == "logspace":
        return {n: quantum_prob(n, K, kind, "logspace") for n in iter_counts(N, K.r)}
    M = K.M
    fact = None
    if kind is ParticleKind.BOSON:
        tables = [[comb(k + j - 1, j) for j in range(N + 1)] for k in K.K]
        den = comb(M + N - 1, N)
    elif kind is ParticleKind.FERMION:
        tables = [[comb(k, j) for j in range(N + 1)] for k in K.K]
        den = comb(M, N)
    else:
        tables = [[k**j for j in range(N + 1)] for k in K.K]
        den = M**N
        fact = [factorial(j) for j in range(N + 1)]
    out = {}
    for n in iter_counts(N, K.r):
        num = 1
        for table, ni in zip(tables, n):
            num *= table[ni]
        if fact is not None:
            multi = fact[N]
            for ni in n:
                multi //= fact[ni]
            num *= multi
        out[n] = ProbValue("exact", None, Fraction(num, den))
    return out


def avg_configuration_prob(N: int, M: int, sigma, mode: str = "auto") -> ProbValue:
    """Haar-averaged probability of one particular input-to-output
    transition of ``N`` particles through ``M`` ports.

    Bosons: ``N!/(M (M+1) ... (M+N-1))``; fermions: ``N!/(M (M-1) ...
    (M-N+1))``; distinguishable: ``M**-N``.
    """
    kind = as_kind(sigma)
    if N < 1 or M < 1:
        raise ValueError("need N >= 1 and M >= 1")
    if kind is ParticleKind.FERMION and N > M:
        raise ValueError(f"{N} fermions do not fit into {M} ports")
    mode = _resolve_mode(mode, N)
    if mode == "exact":
        if kind is ParticleKind.BOSON:
            value = Fraction(1, comb(M + N - 1, N))
        elif kind is ParticleKind.FERMION:
            value = Fraction(1, comb(M, N))
        else:
            value = Fraction(1, M**N)
        return ProbValue.from_fraction(value)
    if kind is ParticleKind.BOSON:
        return ProbValue.from_log(ln_factorial(N) - ln_rising(M, N))
    if kind is ParticleKind.FERMION:
        return ProbValue.from_log(ln_factorial(N) - ln_falling(M, N))
    return ProbValue.from_log(-N * math.log(M))


class Smallness(NamedTuple):
    gamma: float
    log_p: float


def exponential_smallness(alpha, N: int, sigma) -> Smallness:
    """Exponential decay rate ``gamma`` of a single-configuration
    probability at density ``alpha = N/M`` and the leading-order estimate
    ``ln p = ln sqrt(2 pi N (1 + s alpha)) - gamma N``."""
    kind = as_kind(sigma)
    if kind is ParticleKind.DISTINGUISHABLE:
        raise ValueError("defined for bosons and fermions only")
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if kind is ParticleKind.FERMION and alpha >= 1:
        raise ValueError("fermions need alpha < 1")
    s = kind.sign
    gamma = math.log(1.0 / alpha) + (1.0 + s / alpha) * math.log1p(s * alpha)
    log_p = 0.5 * math.log(2.0 * math.pi * N * (1.0 + s * alpha)) - gamma * N
    return Smallness(gamma, log_p)


@dataclass(frozen=True)
class Layer:
    """One binary split: ``n`` of the remaining ``N`` particles land in
    the ``K`` ports of bin ``s`` out of the remaining ``M`` ports."""

    s: int
    N: int
    M: int
    n: int
    K: int

    @property
    def qbar(self) -> Fraction:
        return Fraction(self.K, self.M)

    @property
    def xbar(self) -> Optional[Fraction]:
        return Fraction(self.n, self.N) if self.N else None

    @property
    def counts(self) -> tuple[int, int]:
        return (self.n, self.N - self.n)

    @property
    def bins(self) -> tuple[int, int]:
        return (self.K, self.M - self.K)


@dataclass(frozen=True)
class LayerDecomposition:
    layers: tuple[Layer, ...]
    sigma: ParticleKind

    def __len__(self) -> int:
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def layer_probs(self, mode: str = "auto") -> list[ProbValue]:
        return [_binary_prob(layer, self.sigma, mode) for layer in self.layers]

    def probability(self, mode: str = "auto") -> ProbValue:
        """Product of the binary layer probabilities."""
        probs = self.layer_probs(mode)
        total = probs[0]
        for p in probs[1:]:
            total = total * p
        return total


def _binary_prob(layer: Layer, kind: ParticleKind, mode: str) -> ProbValue:
    if kind is ParticleKind.FERMION and layer.N > layer.M:
        # only reachable outside the fermion support, where P = 0
        return _zero(_resolve_mode(mode, layer.N))
    return quantum_prob(layer.counts, layer.bins, kind, mode)


def factorize(n, K, sigma) -> LayerDecomposition:
    """Split an ``r``-bin count into ``r - 1`` nested binary counts.

    Layer ``s`` separates bin ``s`` from the bins after it; the remaining
    particles and ports are ``N_s = N - sum_{i<s} n_i`` and ``M_s = M -
    sum_{i<s} K_i``. The product of the binary probabilities equals the
    ``r``-bin probability exactly.
    """
    n, K = _check(n, K)
    kind = as_kind(sigma)
    if K.r < 2:
        raise ValueError("factorization needs at least two bins")
    if kind is ParticleKind.FERMION and n.N > K.M:
        raise ValueError(f"{n.N} fermions do not fit into {K.M} ports")
    layers = []
    N_s, M_s = n.N, K.M
    for s in range(K.r - 1):
        layers.append(Layer(s + 1, N_s, M_s, n.n[s], K.K[s]))
        N_s -= n.n[s]
        M_s -= K.K[s]
    return LayerDecomposition(tuple(layers), kind)
