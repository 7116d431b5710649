"""Log-factorials: a lazily built table for n <= 10**6 and the Stirling
series beyond it."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

TABLE_LIMIT = 10**6

# B_{2k} / (2k (2k-1)) for k = 1..8
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@lru_cache(maxsize=1)
def _table() -> np.ndarray:
    return gammaln(np.arange(TABLE_LIMIT + 1, dtype=np.float64) + 1.0)


def stirling_remainder(n: float) -> float:
    """``ln n! - (n ln n - n + ln sqrt(2 pi n))`` from the asymptotic series.

    Accurate to double precision for ``n >= 10``.
    """
    inv = 1.0 / n
    inv2 = inv * inv
    total = 0.0
    power = inv
    for c in _STIRLING_COEFFS:
        total += c * power
        power *= inv2
    return total


def ln_factorial(n: int) -> float:
    """Natural log of ``n!``."""
    n = int(n)
    if n < 0:
        raise ValueError("factorial of a negative number")
    if n <= TABLE_LIMIT:
        if n < 2:
            return 0.0
        return float(_table()[n])
    return n * math.log(n) - n + _HALF_LOG_2PI + 0.5 * math.log(n) + stirling_remainder(n)


def ln_factorials(n) -> np.ndarray:
    """Vectorised ``ln n!`` over an integer array."""
    n = np.asarray(n, dtype=np.int64)
    if n.size and n.max() <= TABLE_LIMIT:
        return _table()[n]
    return gammaln(n + 1.0)


def ln_rising(a: int, k: int) -> float:
    """``ln(a (a+1) ... (a+k-1))`` for ``a >= 1``."""
    if k == 0:
        return 0.0
    return ln_factorial(a + k - 1) - ln_factorial(a - 1)


def ln_falling(a: int, k: int) -> float:
    """``ln(a (a-1) ... (a-k+1))``; ``-inf`` when ``k > a``."""
    if k == 0:
        return 0.0
    if k > a:
        return -math.inf
    return ln_factorial(a) - ln_factorial(a - k)
