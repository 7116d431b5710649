"""Gaussian laws, tail bounds and Kullback-Leibler machinery for binned
counting probabilities.

Conventions: ``sigma`` is a :class:`~qdemoivre.core.ParticleKind` (or a
string alias), ``alpha`` the particle density ``N/M`` and defaults to the
value implied by the inputs. All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .binned_stats import factorize, quantum_prob
from .core import BinPartition, CountVector, ParticleKind, as_counts, as_kind, as_partition
from .logfact import _STIRLING_COEFFS, ln_factorial

__all__ = [
    "Window",
    "XVars",
    "GaussianLaw",
    "StirlingTerm",
    "ProductAsymptotic",
    "QuantumFactorAsymptotic",
    "kl2",
    "klr",
    "in_window",
    "layered_window",
    "gaussian_law",
    "gaussian_high_density",
    "gaussian_density",
    "layered_gaussian_log",
    "tail_bound",
    "stirling_lnfact",
    "stirling_theta",
    "x_vars",
    "product_asymptotic",
    "quantum_factor_asymptotic",
    "layered_kl",
    "layered_quantum_kl",
    "in_window_counts",
    "max_relative_error",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Window:
    """Region ``|n_i - N q_i| <= A N**(2/3 - epsilon)`` around the mean."""

    A: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("window constant A must be positive")
        if not 0 < self.epsilon < 1 / 6:
            raise ValueError("epsilon must lie strictly inside (0, 1/6)")

    def half_width(self, N: int) -> float:
        return self.A * N ** (2.0 / 3.0 - self.epsilon)

    def deviation_floor(self, N: int) -> float:
        """``A N**(1/3 - 2 epsilon)``, the exponent scale of the tail
        estimate divided by ``A``."""
        return self.A * N ** (1.0 / 3.0 - 2.0 * self.epsilon)


class XVars(NamedTuple):
    X: tuple[float, ...]


class GaussianLaw(NamedTuple):
    log_value: float
    leading_error_scale: float


class StirlingTerm(NamedTuple):
    ln_factorial: float
    theta: float


class ProductAsymptotic(NamedTuple):
    log_product_exact: float
    log_asymptotic: float
    log_lower: float
    log_upper: float


class QuantumFactorAsymptotic(NamedTuple):
    log_leading: float
    log_bound_upper: float
    log_bound_lower: float


def _log1pmx(u: float) -> float:
    """``ln(1 + u) - u`` without cancellation for small ``u``."""
    if abs(u) < 0.25:
        term, total, k = u, 0.0, 1
        while True:
            k += 1
            term *= -u
            step = term / k
            total += step
            if abs(step) <= 1e-17 * abs(total):
                return total
    return math.log1p(u) - u


def _divergence(x: Sequence, q: Sequence) -> float:
    """``sum x_i ln(x_i/q_i)`` written as
    ``sum x_i L(d_i/q_i) + sum d_i**2/q_i + sum d_i`` with ``d = x - q``
    taken exactly, so values near zero keep full relative accuracy."""
    xs = [Fraction(v) for v in x]
    qs = [Fraction(v) for v in q]
    d = [a - b for a, b in zip(xs, qs)]
    smooth = math.fsum(float(a) * _log1pmx(float(di / b)) for a, b, di in zip(xs, qs, d) if a != 0)
    quad = sum((di * di / b for di, b in zip(d, qs)), Fraction(0)) + sum(d, Fraction(0))
    return max(0.0, smooth + float(quad))


def kl2(x, q) -> float:
    """Binary Kullback-Leibler divergence ``K_2(x|q)``.

    Accepts floats or exact fractions; the difference ``x - q`` is formed
    exactly either way.
    """
    if not 0 < q < 1:
        raise ValueError(f"q must lie strictly inside (0, 1), got {q}")
    if not 0 <= x <= 1:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    x, q = Fraction(x), Fraction(q)
    return _divergence([x, 1 - x], [q, 1 - q])


def klr(x: Sequence, q: Sequence, tol: float = 1e-12) -> float:
    """Kullback-Leibler divergence ``sum_i x_i ln(x_i/q_i)`` between two
    points of the probability simplex."""
    if len(x) != len(q):
        raise ValueError("x and q differ in length")
    if any(v <= 0 for v in q) or any(v < 0 for v in x):
        raise ValueError("need q_i > 0 and x_i >= 0")
    if abs(math.fsum(float(v) for v in x) - 1.0) > tol or abs(math.fsum(float(v) for v in q) - 1.0) > tol:
        raise ValueError("x and q must each sum to 1")
    return _divergence(x, q)


def _check(n, K) -> tuple[CountVector, BinPartition]:
    n = as_counts(n)
    K = as_partition(K)
    if n.r != K.r:
        raise ValueError(f"count vector has {n.r} bins but partition has {K.r}")
    return n, K


def _deviations(n: CountVector, K: BinPartition) -> list[float]:
    N, M = n.N, K.M
    # integer numerator keeps n_i - N q_i exact up to one rounding
    return [(ni * M - N * ki) / M for ni, ki in zip(n.n, K.K)]


def in_window(n, K, w: Window = Window()) -> bool:
    """Whether every bin count lies inside the Gaussian window."""
    n, K = _check(n, K)
    half = w.half_width(n.N)
    return all(abs(d) <= half for d in _deviations(n, K))


def layered_window(n, K, A_bar: float, epsilon: float) -> bool:
    """Window condition stated per binary layer:
    ``|n_l - N_l K_l/M_l| <= A_bar N**(2/3 - epsilon)`` for ``l < r``."""
    n, K = _check(n, K)
    half = A_bar * n.N ** (2.0 / 3.0 - epsilon)
    for layer in factorize(n, K, ParticleKind.DISTINGUISHABLE):
        if abs((layer.n * layer.M - layer.N * layer.K) / layer.M) > half:
            return False
    return True


def _alpha(alpha, n: CountVector, K: BinPartition) -> float:
    return n.N / K.M if alpha is None else float(alpha)


def _density_guard(kind: ParticleKind, alpha: float) -> None:
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if kind is ParticleKind.FERMION and alpha >= 1:
        raise ValueError("fermion results need alpha < 1")


def _gaussian_log(N: int, x: Sequence[float], q: Sequence[float], spread: float) -> float:
    r = len(q)
    quad = math.fsum((xi - qi) ** 2 / (2.0 * qi) for xi, qi in zip(x, q))
    return (
        -N * quad / spread
        - 0.5 * (r - 1) * (_LOG_2PI + math.log(spread * N))
        - 0.5 * math.fsum(math.log(qi) for qi in q)
    )


def gaussian_law(n, K, sigma, alpha=None, window: Window = Window()) -> GaussianLaw:
    """Asymptotic Gaussian form of the average counting probability.

    Returns the log of
    ``exp(-N sum (x_i-q_i)**2 / (2 (1+s alpha) q_i)) /
    ((2 pi (1+s alpha) N)**((r-1)/2) prod sqrt(q_i))``
    together with the size of its relative error term, which is an order
    of magnitude rather than a certified bound.
    """
    n, K = _check(n, K)
    kind = as_kind(sigma)
    a = _alpha(alpha, n, K)
    _density_guard(kind, a)
    if n.N == 0:
        raise ValueError("need N >= 1")
    if not in_window(n, K, window):
        raise ValueError("count vector lies outside the Gaussian window; use tail_bound")
    N = n.N
    x = [ni / N for ni in n.n]
    q = [ki / K.M for ki in K.K]
    spread = 1.0 + kind.sign * a
    log_value = _gaussian_log(N, x, q, spread)
    fermi = (1.0 - a) ** -3 if kind is ParticleKind.FERMION else 1.0
    bose = a / N if kind is ParticleKind.BOSON else 0.0
    return GaussianLaw(log_value, fermi * N ** (-3.0 * window.epsilon) + bose)


def layered_gaussian_log(n, K, sigma) -> float:
    """Sum over the binary layers of the log binary Gaussian law, each
    layer at its own density ``N_l/M_l``; matches the ``r``-bin law to
    within its error term."""
    n, K = _check(n, K)
    kind = as_kind(sigma)
    total = 0.0
    for layer in factorize(n, K, kind):
        if layer.N == 0:
            continue
        x = layer.n / layer.N
        qb = layer.K / layer.M
        spread = 1.0 + kind.sign * layer.N / layer.M
        total += _gaussian_log(layer.N, [x, 1.0 - x], [qb, 1.0 - qb], spread)
    return total


def gaussian_high_density(n, K, sigma="boson") -> float:
    """Log of the high-density (``N >> M``) boson Gaussian law
    ``M**((r-1)/2) exp(-M sum (x_i-q_i)**2/(2 q_i)) /
    ((2 pi N**2)**((r-1)/2) prod sqrt(q_i))``."""
    n, K = _check(n, K)
    if as_kind(sigma) is not ParticleKind.BOSON:
        raise ValueError("the high-density law applies to bosons only")
    N, M, r = n.N, K.M, K.r
    if N == 0:
        raise ValueError("need N >= 1")
    x = [ni / N for ni in n.n]
    q = [ki / M for ki in K.K]
    quad = math.fsum((xi - qi) ** 2 / (2.0 * qi) for xi, qi in zip(x, q))
    return (
        0.5 * (r - 1) * (math.log(M) - _LOG_2PI - 2.0 * math.log(N))
        - M * quad
        - 0.5 * math.fsum(math.log(qi) for qi in q)
    )


def gaussian_density(xi: Sequence[float], q: Sequence[float], tol: float = 1e-9) -> float:
    """Joint density of the scaled fluctuations ``xi = sqrt(M) (x - q)``
    on the hyperplane ``sum(xi) = 0``."""
    xi = [float(v) for v in xi]
    q = [float(v) for v in q]
    if len(xi) != len(q):
        raise ValueError("xi and q differ in length")
    if abs(math.fsum(xi)) > tol:
        raise ValueError("fluctuations must sum to zero")
    r = len(q)
    expo = -math.fsum(v * v / (2.0 * qi) for v, qi in zip(xi, q))
    return math.exp(expo) / ((2.0 * math.pi) ** (0.5 * (r - 1)) * math.prod(math.sqrt(qi) for qi in q))


def tail_bound(n, K, sigma, alpha=None, window: Window = Window()) -> float:
    """Log of an explicit upper bound on the probability of a count vector
    outside the Gaussian window.

    Distinguishable: ``2 pi sqrt(N) exp(-A**2 N**(1/3-2 eps))``.
    Bosons: ``2 pi sqrt(N) (1+alpha) exp(-A**2 N**(1/3-2 eps)/(1+alpha))``.
    Fermions: the distinguishable prefactor times the worst-case quantum
    factor prefactor ``q(1-q)/((1-alpha)**2 a (1-a))`` with
    ``a = alpha/((1-alpha) N)`` (growing like ``N**2``), and exponent
    ``-A**2 N**(1/3-2 eps)/(1-alpha)``; a bin that is completely full (or
    completely empty while all other ports are full) uses
    ``alpha**K`` instead. The bound is taken over the violating bin that
    gives the smallest value.
    """
    n, K = _check(n, K)
    kind = as_kind(sigma)
    a = _alpha(alpha, n, K)
    _density_guard(kind, a)
    N, M = n.N, K.M
    half = window.half_width(N)
    violating = [i for i, d in enumerate(_deviations(n, K)) if abs(d) > half]
    if not violating:
        raise ValueError("count vector lies inside the Gaussian window; use gaussian_law")
    rate = window.A**2 * N ** (1.0 / 3.0 - 2.0 * window.epsilon)
    base = math.log(2.0 * math.pi) + 0.5 * math.log(N)
    if kind is ParticleKind.DISTINGUISHABLE:
        return base - rate
    if kind is ParticleKind.BOSON:
        return base + math.log1p(a) - rate / (1.0 + a)
    best = math.inf
    lo = min(a / ((1.0 - a) * N), 0.5)
    for i in violating:
        ni, ki = n.n[i], K.K[i]
        if ni == ki:
            cand = ki * math.log(a)
        elif N - ni == M - ki:
            cand = (M - ki) * math.log(a)
        else:
            qi = ki / M
            cand = (
                base
                + math.log(qi * (1.0 - qi))
                - 2.0 * math.log1p(-a)
                - math.log(lo * (1.0 - lo))
                - rate / (1.0 - a)
            )
        best = min(best, cand)
    return best


def stirling_lnfact(n: int) -> StirlingTerm:
    """``ln n!`` and the correction ``theta_n`` solving
    ``n! = sqrt(2 pi (n + theta_n)) (n/e)**n``."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    lnf = ln_factorial(n)
    if n == 0:
        return StirlingTerm(0.0, 1.0 / (2.0 * math.pi))
    return StirlingTerm(lnf, float(stirling_theta(n)))


def stirling_theta(n):
    """Vectorised ``theta_n`` for ``n >= 1``.

    ``theta_n = n (exp(2 R_n) - 1)`` where ``R_n`` is the remainder of
    the Stirling approximation; the remainder comes from ``lgamma`` for
    small ``n`` and from the asymptotic series otherwise, which avoids
    cancellation in ``ln n! - n ln n + n``.
    """
    arr = np.atleast_1d(np.asarray(n, dtype=np.float64))
    if np.any(arr < 1):
        raise ValueError("theta_n is computed here for n >= 1")
    rem = np.empty_like(arr)
    small = arr < 10
    for idx in np.flatnonzero(small):
        k = arr[idx]
        rem[idx] = math.lgamma(k + 1.0) - (k * math.log(k) - k + 0.5 * (_LOG_2PI + math.log(k)))
    big = arr[~small]
    if big.size:
        inv = 1.0 / big
        inv2 = inv * inv
        acc = np.zeros_like(big)
        for c in reversed(_STIRLING_COEFFS):
            acc = acc * inv2 + c
        rem[~small] = acc * inv
    theta = arr * np.expm1(2.0 * rem)
    return theta if np.ndim(n) else theta[0]


def x_vars(n, K, sigma, alpha=None) -> XVars:
    """Shifted fractions ``X_i = (q_i + s alpha x_i)/(1 + s alpha)``.

    With ``alpha = N/M`` these equal ``(K_i + s n_i)/(M + s N)``.
    """
    n, K = _check(n, K)
    kind = as_kind(sigma)
    if kind is ParticleKind.DISTINGUISHABLE:
        raise ValueError("defined for bosons and fermions only")
    a = _alpha(alpha, n, K)
    _density_guard(kind, a)
    N, M = n.N, K.M
    s = kind.sign
    if alpha is None:
        X = tuple((ki + s * ni) / (M + s * N) for ni, ki in zip(n.n, K.K))
    else:
        X = tuple((ki / M + s * a * ni / N) / (1.0 + s * a) for ni, ki in zip(n.n, K.K))
    if any(v < -1e-15 or v > 1 + 1e-15 for v in X):
        raise ValueError(f"shifted fractions leave [0, 1]: {X}")
    return XVars(X)


def product_asymptotic(n: int, m: int, sign: int) -> ProductAsymptotic:
    """Compare ``ln prod_{l=1}^{n} (1 + sign*l/m)`` with its asymptotic
    form ``(n + sign*m + 1/2) ln(1 + sign*n/m) - n`` and with the
    integral-comparison bounds, whose exponents replace ``1/2`` by 1 and 0
    (upper/lower for ``sign=+1``, lower/upper for ``sign=-1``).

    The bounds hold up to a ``1 + O(1/m)`` factor that is not included.
    """
    n, m = int(n), int(m)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if m < 1 or n < 0:
        raise ValueError("need m >= 1 and n >= 0")
    if sign < 0 and n >= m:
        raise ValueError("the product vanishes or changes sign for n >= m")
    exact = math.fsum(math.log1p(sign * l / m) for l in range(1, n + 1))
    ln_end = math.log1p(sign * n / m)
    core = n + sign * m
    asym = (core + 0.5) * ln_end - n
    if sign > 0:
        upper, lower = (core + 1) * ln_end - n, core * ln_end - n
    else:
        upper, lower = core * ln_end - n, (core + 1) * ln_end - n
    return ProductAsymptotic(exact, asym, lower, upper)


def quantum_factor_asymptotic(n, K, sigma, alpha=None) -> QuantumFactorAsymptotic:
    """Leading-order log of the quantum factor and its two-sided
    large-``M`` bounds built on ``Q_as = exp((N + s M) K_r(X|q))``.

    The bounds carry an omitted ``1 + O(1/M)`` factor.
    """
    n, K = _check(n, K)
    kind = as_kind(sigma)
    if kind is ParticleKind.DISTINGUISHABLE:
        raise ValueError("defined for bosons and fermions only")
    a = _alpha(alpha, n, K)
    _density_guard(kind, a)
    if kind is ParticleKind.FERMION and any(ni > ki for ni, ki in zip(n.n, K.K)):
        raise ValueError("count vector outside the fermion support (Q = 0)")
    N, M, r = n.N, K.M, K.r
    s = kind.sign
    q = [ki / M for ki in K.K]
    x = [ni / N for ni in n.n]
    quad = math.fsum((xi - qi) ** 2 / (2.0 * qi) for xi, qi in zip(x, q))
    spread = 1.0 + s * a
    leading = N * (s * a / spread) * quad - 0.5 * (r - 1) * math.log(spread)
    X = x_vars(n, K, kind).X
    log_qas = (N + s * M) * klr(X, q, tol=1e-9)
    if any(v == 0 for v in X):
        # a full fermion bin: prod (X_i/q_i)**-1 diverges
        ratio = -math.inf
    else:
        ratio = math.fsum(math.log(Xi / qi) for Xi, qi in zip(X, q))
    if kind is ParticleKind.BOSON:
        upper = log_qas + math.log1p(a)
        lower = log_qas - r * math.log1p(a) - ratio
    else:
        upper = log_qas - r * math.log1p(-a) - ratio
        lower = log_qas + math.log1p(-a)
    return QuantumFactorAsymptotic(leading, upper, lower)


def layered_kl(n, K) -> tuple[float, float]:
    """Both sides of the layer identity
    ``sum_l N_l K_2(xbar_l|qbar_l) = N K_r(x|q)``."""
    n, K = _check(n, K)
    N = n.N
    lhs = math.fsum(
        layer.N * kl2(layer.xbar, layer.qbar)
        for layer in factorize(n, K, ParticleKind.DISTINGUISHABLE)
        if layer.N
    )
    rhs = N * klr(n.x, K.q)
    return lhs, rhs


def layered_quantum_kl(n, K, sigma) -> tuple[float, float]:
    """Both sides of the shifted-variable layer identity
    ``sum_l (N_l + s M_l) K_2(Xbar_l|qbar_l) = (N + s M) K_r(X|q)``."""
    n, K = _check(n, K)
    kind = as_kind(sigma)
    s = kind.sign
    if s == 0:
        raise ValueError("defined for bosons and fermions only")
    x_vars(n, K, kind)  # validates the shifted fractions
    terms = []
    for layer in factorize(n, K, kind):
        ports = layer.M + s * layer.N
        if ports == 0:
            continue
        Xbar = Fraction(layer.K + s * layer.n, ports)
        terms.append((layer.N + s * layer.M) * kl2(Xbar, layer.qbar))
    X = [Fraction(ki + s * ni, K.M + s * n.N) for ni, ki in zip(n.n, K.K)]
    return math.fsum(terms), (n.N + s * K.M) * klr(X, K.q)


def in_window_counts(N: int, K, window: Window = Window()):
    """Yield every count vector with total ``N`` inside the window."""
    K = as_partition(K)
    M = K.M
    half = window.half_width(N)
    ranges = []
    for ki in K.K[:-1]:
        centre = N * ki / M
        lo = max(0, math.ceil(centre - half - 1e-9))
        hi = min(N, math.floor(centre + half + 1e-9))
        ranges.append(range(lo, hi + 1))
    for head in product(*ranges):
        last = N - sum(head)
        if last < 0:
            continue
        n = head + (last,)
        if in_window(n, K, window):
            yield n


def max_relative_error(N: int, K, sigma, window: Window = Window(), alpha=None) -> tuple[float, int]:
    """Largest ``|P_exact/P_gauss - 1|`` over the in-window counts, with
    the exact probability evaluated in log space.

    Returns ``(max_error, number_of_counts)``.
    """
    K = as_partition(K)
    kind = as_kind(sigma)
    worst = 0.0
    count = 0
    for n in in_window_counts(N, K, window):
        exact = quantum_prob(n, K, kind, "logspace").logp
        if exact == -math.inf:
            continue
        gauss = gaussian_law(n, K, kind, alpha, window).log_value
        worst = max(worst, abs(math.expm1(exact - gauss)))
        count += 1
    return worst, count
