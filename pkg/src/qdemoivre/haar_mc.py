"""Monte Carlo checks with explicit Haar-random multiports.

Unitaries are drawn in batches, and permanents/determinants are
evaluated for whole stacks of submatrices at once. Random streams come
from :class:`numpy.random.SeedSequence`: a master seed is split into one
child stream per fixed-size chunk of samples, so estimates depend only on
the seed and the sample count, never on how many workers ran them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .binned_stats import avg_configuration_prob, quantum_prob
from .core import ParticleKind, as_kind, as_partition, iter_counts
from .group_integrals import occupation_ports, permanent_pair_average

__all__ = [
    "MAX_PERMANENT",
    "MAX_PROB_N",
    "CHUNK",
    "MCEstimate",
    "MixedStateEntry",
    "MixedStateReport",
    "sample_haar_unitary",
    "sample_haar_unitaries",
    "unitarity_error",
    "permanent",
    "transition_prob",
    "output_occupations",
    "binned_prob_fixed_U",
    "mc_average",
    "mixed_state_check",
]

MAX_PERMANENT = 14
MAX_PROB_N = 10
MAX_BINNED_N = 8
MAX_BINNED_M = 12
CHUNK = 1024

MODES = ("haar_average", "input_average", "scattershot")


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    samples: int
    seed: Optional[int] = None

    def z_score(self, target: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.stderr

    def consistent_with(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr or math.isclose(self.mean, target, abs_tol=1e-12)


def _estimate(values: np.ndarray, seed) -> MCEstimate:
    values = np.asarray(values, dtype=np.float64)
    S = values.shape[0]
    return MCEstimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(S)), S, seed)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_haar_unitaries(M: int, size: int, seed=None) -> np.ndarray:
    """Stack of ``size`` Haar-random ``M x M`` unitaries.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` moved
    into ``Q`` so the factorisation (and hence the distribution) is
    unique.
    """
    if M < 1:
        raise ValueError("dimension must be positive")
    rng = _rng(seed)
    z = (rng.standard_normal((size, M, M)) + 1j * rng.standard_normal((size, M, M))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def sample_haar_unitary(M: int, seed=None) -> np.ndarray:
    """One Haar-random ``M x M`` unitary; pass an int or a Generator as
    ``seed``."""
    return sample_haar_unitaries(M, 1, seed)[0]


def unitarity_error(U: np.ndarray) -> float:
    """``max |U^dagger U - I|`` entry-wise."""
    U = np.asarray(U)
    eye = np.eye(U.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - eye)))


def permanent(A) -> complex | np.ndarray:
    """Permanent by Ryser's formula, visiting subsets in Gray-code order.

    Accepts a single square matrix or a stack ``(..., n, n)``; stacks are
    processed together, one column update per Gray-code step.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("need a square matrix or a stack of them")
    n = A.shape[-1]
    if n > MAX_PERMANENT:
        raise ValueError(f"permanent of a {n}x{n} matrix exceeds the size guard {MAX_PERMANENT}")
    batch = A.shape[:-2]
    if n == 0:
        out = np.ones(batch, dtype=np.result_type(A.dtype, np.float64))
        return out if batch else out.item()
    row_sums = np.zeros(batch + (n,), dtype=np.result_type(A.dtype, np.float64))
    total = np.zeros(batch, dtype=row_sums.dtype)
    in_set = [False] * n
    size = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            row_sums -= A[..., :, j]
            size -= 1
        else:
            row_sums += A[..., :, j]
            size += 1
        in_set[j] = not in_set[j]
        term = np.prod(row_sums, axis=-1)
        if size % 2:
            total -= term
        else:
            total += term
    if n % 2:
        total = -total
    return total if batch else total.item()


def _occ_factorial(occ: Sequence[int]) -> int:
    return math.prod(math.factorial(v) for v in occ)


def _validate_occ(occ, M: int, kind: ParticleKind) -> tuple[int, ...]:
    occ = tuple(int(v) for v in occ)
    if len(occ) != M:
        raise ValueError(f"occupation vector has length {len(occ)}, expected {M}")
    if any(v < 0 for v in occ):
        raise ValueError("occupations must be non-negative")
    if kind is ParticleKind.FERMION and any(v > 1 for v in occ):
        raise ValueError("fermions allow at most one particle per port")
    return occ


def _stack_probs(U: np.ndarray, rows: np.ndarray, out_occ: Sequence[int], kind: ParticleKind, in_fact) -> np.ndarray:
    """Transition probabilities for a stack of unitaries ``U (B, M, M)``
    and input rows ``rows`` (shared ``(N,)`` or per-sample ``(B, N)``)
    into one output occupation."""
    cols = np.asarray(occupation_ports(out_occ), dtype=np.intp)
    if rows.ndim == 1:
        sub = U[:, rows[:, None], cols[None, :]]
    else:
        b = np.arange(U.shape[0])[:, None, None]
        sub = U[b, rows[:, :, None], cols[None, None, :]]
    out_fact = _occ_factorial(out_occ)
    if kind is ParticleKind.BOSON:
        return np.abs(permanent(sub)) ** 2 / (in_fact * out_fact)
    if kind is ParticleKind.FERMION:
        return np.abs(np.linalg.det(sub)) ** 2
    return permanent(np.abs(sub) ** 2).real / out_fact


def transition_prob(U, inp, out, sigma) -> float:
    """Probability that the input occupation ``inp`` leaves the multiport
    ``U`` as the output occupation ``out``.

    Bosons: ``|per U[in|out]|**2 / (in! out!)``; fermions:
    ``|det U[in|out]|**2``; distinguishable particles:
    ``per(|U[in|out]|**2) / out!``. Row ``k`` of ``U`` is input port ``k``.
    """
    U = np.asarray(U)
    kind = as_kind(sigma)
    M = U.shape[0]
    inp = _validate_occ(inp, M, kind)
    out = _validate_occ(out, M, kind)
    N = sum(inp)
    if sum(out) != N:
        raise ValueError("input and output hold different particle numbers")
    if N > MAX_PROB_N:
        raise ValueError(f"N={N} exceeds the probability size guard {MAX_PROB_N}")
    rows = np.asarray(occupation_ports(inp), dtype=np.intp)
    return float(_stack_probs(U[None], rows, out, kind, _occ_factorial(inp))[0])


def output_occupations(N: int, M: int, sigma) -> list[tuple[int, ...]]:
    """Every output occupation of ``N`` particles in ``M`` ports allowed
    by the statistics."""
    kind = as_kind(sigma)
    if kind is ParticleKind.FERMION:
        if N > M:
            raise ValueError(f"{N} fermions do not fit into {M} ports")
        occs = []
        for ports in combinations(range(M), N):
            occ = [0] * M
            for p in ports:
                occ[p] = 1
            occs.append(tuple(occ))
        return occs
    return list(iter_counts(N, M))


def _bin_of_ports(K) -> np.ndarray:
    K = as_partition(K)
    return np.repeat(np.arange(K.r), K.K)


def _binned_stack(U: np.ndarray, rows: np.ndarray, K, kind: ParticleKind, N: int, in_fact) -> dict:
    """Per-sample binned distributions for a stack of unitaries."""
    K = as_partition(K)
    M = K.M
    if U.shape[-1] != M:
        raise ValueError(f"partition covers {M} ports but U is {U.shape[-1]}x{U.shape[-1]}")
    port_bin = _bin_of_ports(K)
    out = {n: np.zeros(U.shape[0]) for n in iter_counts(N, K.r)}
    for occ in output_occupations(N, M, kind):
        counts = np.bincount(port_bin, weights=occ, minlength=K.r).astype(int)
        out[tuple(counts)] += _stack_probs(U, rows, occ, kind, in_fact)
    return out


def _guard_binned(N: int, M: int) -> None:
    if N > MAX_BINNED_N or M > MAX_BINNED_M:
        raise ValueError(
            f"exhaustive output enumeration limited to N <= {MAX_BINNED_N}, M <= {MAX_BINNED_M}"
        )


def binned_prob_fixed_U(U, inp, K, sigma) -> dict[tuple[int, ...], float]:
    """Distribution of bin counts for a fixed multiport ``U`` and input
    occupation ``inp``, by summing transition probabilities over every
    output occupation."""
    U = np.asarray(U)
    kind = as_kind(sigma)
    M = U.shape[0]
    inp = _validate_occ(inp, M, kind)
    N = sum(inp)
    _guard_binned(N, M)
    rows = np.asarray(occupation_ports(inp), dtype=np.intp)
    stack = _binned_stack(U[None], rows, K, kind, N, _occ_factorial(inp))
    return {n: float(v[0]) for n, v in stack.items()}


def _chunk_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _random_inputs(rng: np.random.Generator, size: int, N: int, M: int, how: str) -> np.ndarray:
    """Input port lists ``(size, N)``.

    ``"fock"``: uniform over occupation vectors (stars and bars);
    ``"subset"``: uniform over sets of ``N`` distinct ports;
    ``"iid"``: each particle in an independent uniform port.
    """
    if how == "iid":
        return np.sort(rng.integers(0, M, size=(size, N)), axis=1)
    if how == "subset":
        return np.sort(np.argsort(rng.random((size, M)), axis=1)[:, :N], axis=1)
    # N bars among M + N - 1 slots; the i-th chosen slot (sorted) minus i is a port
    slots = np.sort(np.argsort(rng.random((size, M + N - 1)), axis=1)[:, :N], axis=1)
    return slots - np.arange(N)[None, :]


def _input_rule(mode: str, kind: ParticleKind) -> str:
    if mode == "scattershot":
        return "subset"
    if kind is ParticleKind.BOSON:
        return "fock"
    if kind is ParticleKind.FERMION:
        return "subset"
    return "iid"


def _mc_chunk(args) -> dict:
    mode, K, kind, N, inp, U, size, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    M = as_partition(K).M
    if mode == "haar_average":
        Us = sample_haar_unitaries(M, size, rng)
        rows = np.asarray(occupation_ports(inp), dtype=np.intp)
        return _binned_stack(Us, rows, K, kind, N, _occ_factorial(inp))
    if mode == "scattershot":
        Us = sample_haar_unitaries(M, size, rng)
        rows = _random_inputs(rng, size, N, M, "subset")
        return _binned_stack(Us, rows, K, kind, N, 1)
    rows = _random_inputs(rng, size, N, M, _input_rule(mode, kind))
    # one fixed U; inputs repeat, so evaluate each distinct one once
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    if kind is ParticleKind.BOSON:
        in_fact = np.array([_occ_factorial(np.bincount(r, minlength=M)) for r in uniq], dtype=np.float64)
    else:
        in_fact = 1
    Us = np.broadcast_to(U, (uniq.shape[0], M, M))
    dist = _binned_stack(Us, uniq.astype(np.intp), K, kind, N, in_fact)
    return {n: v[inverse] for n, v in dist.items()}


def mc_average(
    mode: str,
    K,
    sigma,
    samples: int,
    seed: int,
    N: Optional[int] = None,
    inp: Optional[Sequence[int]] = None,
    U: Optional[np.ndarray] = None,
    workers: int = 1,
) -> dict[tuple[int, ...], MCEstimate]:
    """Monte Carlo estimate of the average binned counting distribution.

    ``haar_average``: fixed input occupation ``inp`` (default: one
    particle in each of the first ``N`` ports), a fresh Haar unitary per
    sample. ``input_average``: one fixed ``U`` (drawn from the seed when
    not given), input drawn per sample uniformly over the configurations
    the statistics allow. ``scattershot``: fresh ``U`` and a uniformly
    random set of ``N`` distinct input ports per sample.

    Each sample contributes the exact binned distribution for its
    unitary and input, so the estimator averages only over the
    randomness named by ``mode``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if samples < 2:
        raise ValueError("need at least two samples")
    if seed is None:
        raise ValueError("an explicit seed is required")
    K = as_partition(K)
    kind = as_kind(sigma)
    M = K.M
    if inp is not None:
        inp = _validate_occ(inp, M, kind)
        N = sum(inp)
    if N is None:
        raise ValueError("give N or an input occupation")
    if kind is ParticleKind.FERMION and N > M:
        raise ValueError(f"{N} fermions do not fit into {M} ports")
    if mode == "scattershot" and N > M:
        raise ValueError("scattershot inputs need N <= M")
    _guard_binned(N, M)
    if inp is None:
        inp = tuple([1] * N + [0] * (M - N)) if N <= M else tuple([N] + [0] * (M - 1))
    master = np.random.SeedSequence(seed)
    if mode == "input_average":
        unitary_seed, master = master.spawn(2)
        if U is None:
            U = sample_haar_unitary(M, np.random.default_rng(unitary_seed))
        U = np.asarray(U)
        if U.shape != (M, M):
            raise ValueError(f"U must be {M}x{M}")
    sizes = _chunk_sizes(samples)
    children = master.spawn(len(sizes))
    jobs = [(mode, K, kind, N, inp, U, size, child) for size, child in zip(sizes, children)]
    parts = _run(jobs, workers)
    estimates = {}
    for n in iter_counts(N, K.r):
        values = np.concatenate([part[n] for part in parts])
        estimates[n] = _estimate(values, seed)
    return estimates


def _run(jobs, workers: int):
    if workers <= 1 or len(jobs) == 1:
        return [_mc_chunk(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_mc_chunk, jobs))


@dataclass(frozen=True)
class MixedStateEntry:
    """Moment ``< per(U[n|s]) conj(per(U[m|s])) >`` (determinants for
    fermions): Monte Carlo real and imaginary parts against the exact
    value."""

    n: tuple[int, ...]
    m: tuple[int, ...]
    s: tuple[int, ...]
    real: MCEstimate
    imag: MCEstimate
    exact: float

    @property
    def consistent(self) -> bool:
        return self.real.consistent_with(self.exact) and self.imag.consistent_with(0.0)


@dataclass(frozen=True)
class MixedStateReport:
    moments: list
    output_probs: dict
    output_exact: float
    binned: dict = field(default_factory=dict)
    binned_exact: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        ok = all(e.consistent for e in self.moments)
        ok &= all(est.consistent_with(self.output_exact) for est in self.output_probs.values())
        ok &= all(est.consistent_with(self.binned_exact[n]) for n, est in self.binned.items())
        return ok


def _check_density(coeff, M: int, kind: ParticleKind, tol: float = 1e-12):
    rho = {}
    for n, m, w in coeff:
        n = _validate_occ(n, M, kind)
        m = _validate_occ(m, M, kind)
        rho[(n, m)] = rho.get((n, m), 0) + complex(w)
    if not rho:
        raise ValueError("empty density matrix")
    Ns = {sum(n) for n, _ in rho} | {sum(m) for _, m in rho}
    if len(Ns) != 1:
        raise ValueError("all Fock components must hold the same particle number")
    for (n, m), w in rho.items():
        if abs(w - complex(rho.get((m, n), 0)).conjugate()) > tol:
            raise ValueError(f"coefficients are not Hermitian at ({n}, {m})")
    trace = sum(w for (n, m), w in rho.items() if n == m)
    if abs(trace - 1) > tol:
        raise ValueError(f"trace is {trace}, expected 1")
    return rho, Ns.pop()


def mixed_state_check(
    coeff,
    M: int,
    samples: int,
    seed: int,
    sigma="boson",
    outputs: Optional[Sequence[Sequence[int]]] = None,
    K=None,
) -> MixedStateReport:
    """Check that off-diagonal terms of a mixed input state drop out of
    Haar-averaged output probabilities.

    ``coeff`` lists ``(n, m, rho_nm)`` over Fock occupations with equal
    particle number (Hermitian, unit trace). For each pair in the support
    and each output ``s`` the permanent (determinant) cross moment is
    estimated and compared with its exact value; the output
    probabilities and, if ``K`` is given, the binned distribution are
    compared with the pure-state averages.
    """
    kind = as_kind(sigma)
    if kind is ParticleKind.DISTINGUISHABLE:
        raise ValueError("defined for bosons and fermions only")
    if samples < 2:
        raise ValueError("need at least two samples")
    rho, N = _check_density(coeff, M, kind)
    if N > 4 or M > 6:
        raise ValueError("mixed-state checks limited to N <= 4, M <= 6")
    outputs = [tuple(s) for s in outputs] if outputs is not None else output_occupations(N, M, kind)
    pairs = sorted(rho)
    sizes = _chunk_sizes(samples)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    amp = {}  # (input occ, output occ) -> list of per-chunk amplitude arrays
    Us_all = []
    for size, child in zip(sizes, children):
        Us_all.append(sample_haar_unitaries(M, size, np.random.default_rng(child)))
    Us = np.concatenate(Us_all)
    inputs = sorted({n for n, _ in pairs} | {m for _, m in pairs})
    for occ in inputs:
        rows = np.asarray(occupation_ports(occ), dtype=np.intp)
        for s in outputs:
            cols = np.asarray(occupation_ports(s), dtype=np.intp)
            sub = Us[:, rows[:, None], cols[None, :]]
            amp[(occ, s)] = permanent(sub) if kind is ParticleKind.BOSON else np.linalg.det(sub)
    moments = []
    for n, m in pairs:
        for s in outputs:
            prod = amp[(n, s)] * np.conj(amp[(m, s)])
            exact = permanent_pair_average(n, m, s, M, kind, method="closed")
            moments.append(
                MixedStateEntry(n, m, s, _estimate(prod.real, seed), _estimate(prod.imag, seed), float(exact))
            )
    probs = {}
    per_output = {}
    for s in outputs:
        val = np.zeros(Us.shape[0], dtype=complex)
        for (n, m), w in rho.items():
            val += w * amp[(n, s)] * np.conj(amp[(m, s)]) / math.sqrt(_occ_factorial(n) * _occ_factorial(m))
        per_output[s] = val.real / _occ_factorial(s)
        probs[s] = _estimate(per_output[s], seed)
    output_exact = float(avg_configuration_prob(N, M, kind).exact)
    binned, binned_exact = {}, {}
    if K is not None:
        K = as_partition(K)
        if K.M != M:
            raise ValueError("partition does not cover the M ports")
        port_bin = _bin_of_ports(K)
        acc = {n: np.zeros(Us.shape[0]) for n in iter_counts(N, K.r)}
        for s in output_occupations(N, M, kind):
            if s not in per_output:
                raise ValueError("binned check needs every output occupation")
            counts = tuple(np.bincount(port_bin, weights=s, minlength=K.r).astype(int))
            acc[counts] += per_output[s]
        binned = {n: _estimate(v, seed) for n, v in acc.items()}
        binned_exact = {n: float(quantum_prob(n, K, kind, "exact").exact) for n in acc}
    return MixedStateReport(moments, probs, output_exact, binned, binned_exact)
