"""Shared value types: particle kinds, bin partitions, count vectors and
dual-mode probabilities."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

__all__ = [
    "ParticleKind",
    "BinPartition",
    "CountVector",
    "ProbValue",
    "as_kind",
    "as_partition",
    "as_counts",
    "iter_counts",
]


class ParticleKind(enum.IntEnum):
    """Statistics of the particles; the integer value is the sign used in
    the ``1 + sigma * alpha`` factors."""

    DISTINGUISHABLE = 0
    BOSON = 1
    FERMION = -1

    @classmethod
    def parse(cls, value: Union[str, int, "ParticleKind"]) -> "ParticleKind":
        if isinstance(value, ParticleKind):
            return value
        if isinstance(value, int):
            return cls(value)
        key = str(value).strip().lower()
        try:
            return _KIND_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown particle kind {value!r}") from None

    @property
    def sign(self) -> int:
        return int(self.value)

    @property
    def label(self) -> str:
        return self.name.lower()


_KIND_ALIASES = {
    "distinguishable": ParticleKind.DISTINGUISHABLE,
    "classical": ParticleKind.DISTINGUISHABLE,
    "d": ParticleKind.DISTINGUISHABLE,
    "0": ParticleKind.DISTINGUISHABLE,
    "boson": ParticleKind.BOSON,
    "bosons": ParticleKind.BOSON,
    "b": ParticleKind.BOSON,
    "+": ParticleKind.BOSON,
    "fermion": ParticleKind.FERMION,
    "fermions": ParticleKind.FERMION,
    "f": ParticleKind.FERMION,
    "-": ParticleKind.FERMION,
}


def as_kind(value) -> ParticleKind:
    return ParticleKind.parse(value)


@dataclass(frozen=True)
class BinPartition:
    """Output ports grouped into ``r`` bins of ``K[i]`` ports each."""

    K: tuple[int, ...]

    def __post_init__(self):
        K = tuple(int(k) for k in self.K)
        if len(K) < 1:
            raise ValueError("a partition needs at least one bin")
        if any(k < 1 for k in K):
            raise ValueError(f"bin sizes must be positive, got {K}")
        object.__setattr__(self, "K", K)

    @property
    def M(self) -> int:
        return sum(self.K)

    @property
    def r(self) -> int:
        return len(self.K)

    @property
    def q(self) -> tuple[Fraction, ...]:
        M = self.M
        return tuple(Fraction(k, M) for k in self.K)

    def __len__(self) -> int:
        return len(self.K)

    def __iter__(self):
        return iter(self.K)

    @classmethod
    def from_fractions(cls, q: Sequence, M: int) -> "BinPartition":
        """Build the partition whose bins hold ``q[i] * M`` ports.

        Raises ``ValueError`` unless every ``q[i] * M`` is a whole number
        and the fractions sum to one.
        """
        fracs = [Fraction(x) for x in q]
        if sum(fracs) != 1:
            raise ValueError(f"bin fractions must sum to 1, got {sum(fracs)}")
        K = []
        for f in fracs:
            k = f * M
            if k.denominator != 1:
                raise ValueError(f"q={f} times M={M} is not an integer")
            K.append(int(k))
        return cls(tuple(K))


@dataclass(frozen=True)
class CountVector:
    """Numbers of particles ``n[i]`` detected in each bin."""

    n: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if any(v < 0 for v in n):
            raise ValueError(f"counts must be non-negative, got {n}")
        object.__setattr__(self, "n", n)

    @property
    def N(self) -> int:
        return sum(self.n)

    @property
    def r(self) -> int:
        return len(self.n)

    @property
    def x(self) -> tuple[Fraction, ...]:
        N = self.N
        if N == 0:
            raise ValueError("count fractions are undefined for N = 0")
        return tuple(Fraction(v, N) for v in self.n)

    def __len__(self) -> int:
        return len(self.n)

    def __iter__(self):
        return iter(self.n)


def as_partition(K) -> BinPartition:
    if isinstance(K, BinPartition):
        return K
    return BinPartition(tuple(K))


def as_counts(n) -> CountVector:
    if isinstance(n, CountVector):
        return n
    return CountVector(tuple(n))


def iter_counts(N: int, r: int) -> Iterator[tuple[int, ...]]:
    """All ``r``-tuples of non-negative integers summing to ``N``, in
    lexicographically decreasing order of the leading entries."""
    if r < 1:
        raise ValueError("r must be positive")
    if r == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in iter_counts(N - first, r - 1):
            yield (first,) + rest


class ProbValue:
    """A probability held either as an exact rational or as its natural
    logarithm.

    In ``exact`` mode the rational is stored and ``logp`` is derived from
    it on first access; in ``logspace`` mode only ``logp`` exists.
    ``logp == -inf`` encodes zero.
    """

    __slots__ = ("mode", "exact", "_logp")

    def __init__(self, mode: str, logp: Optional[float] = None, exact: Optional[Fraction] = None):
        if mode not in ("exact", "logspace"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "exact" and exact is None:
            raise ValueError("exact mode requires a rational value")
        if mode == "logspace" and logp is None:
            raise ValueError("logspace mode requires a log value")
        self.mode = mode
        self.exact = exact
        self._logp = logp

    @classmethod
    def from_fraction(cls, value) -> "ProbValue":
        return cls("exact", None, Fraction(value))

    @classmethod
    def from_log(cls, logp: float) -> "ProbValue":
        return cls("logspace", float(logp))

    @property
    def logp(self) -> float:
        if self._logp is None:
            self._logp = log_fraction(self.exact)
        return self._logp

    def to_logspace(self) -> "ProbValue":
        return ProbValue("logspace", self.logp)

    @property
    def is_zero(self) -> bool:
        if self.exact is not None:
            return self.exact == 0
        return self.logp == -math.inf

    def __float__(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return math.exp(self.logp)

    def __mul__(self, other: "ProbValue") -> "ProbValue":
        if not isinstance(other, ProbValue):
            return NotImplemented
        if self.exact is not None and other.exact is not None:
            return ProbValue.from_fraction(self.exact * other.exact)
        return ProbValue.from_log(self.logp + other.logp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbValue):
            return NotImplemented
        if self.exact is not None and other.exact is not None:
            return self.exact == other.exact
        return self.mode == other.mode and self.logp == other.logp

    def __repr__(self) -> str:
        if self.exact is not None:
            return f"ProbValue(exact={self.exact})"
        return f"ProbValue(logp={self.logp!r})"


def log_fraction(value: Fraction) -> float:
    """Natural log of a non-negative rational, accurate for huge
    numerators and denominators."""
    if value < 0:
        raise ValueError("log of a negative number")
    if value == 0:
        return -math.inf
    f = float(value)
    if f > 1e-300:
        return math.log(f)
    # math.log accepts arbitrarily large ints without overflow
    return math.log(value.numerator) - math.log(value.denominator)
