"""Exact Haar integrals over the unitary group for small moment order.

Weingarten values come from inverting the Gram matrix of permutation
operators, ``G[s, t] = M ** cycles(s^-1 t)``, in rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Sequence

from .core import ParticleKind, as_kind

__all__ = [
    "MAX_ORDER",
    "WeingartenTable",
    "weingarten_table",
    "weingarten_sum",
    "haar_moment",
    "permanent_pair_average",
    "occupation_ports",
]

MAX_ORDER = 4

Perm = tuple[int, ...]


def _compose(a: Perm, b: Perm) -> Perm:
    """``(a o b)(i) = a[b[i]]``."""
    return tuple(a[i] for i in b)


def _inverse(a: Perm) -> Perm:
    inv = [0] * len(a)
    for i, v in enumerate(a):
        inv[v] = i
    return tuple(inv)


def _cycle_type(a: Perm) -> tuple[int, ...]:
    seen = [False] * len(a)
    lengths = []
    for start in range(len(a)):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = a[i]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


def _sign(a: Perm) -> int:
    return -1 if (len(a) - len(_cycle_type(a))) % 2 else 1


def _solve(G: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    n = len(G)
    A = [row[:] + [b] for row, b in zip(G, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if A[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular Gram matrix")
        A[col], A[pivot] = A[pivot], A[col]
        p = A[col][col]
        A[col] = [v / p for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [v - f * w for v, w in zip(A[r], A[col])]
    return [A[r][n] for r in range(n)]


@dataclass(frozen=True)
class WeingartenTable:
    """Weingarten function of ``U(M)`` at order ``N``, one exact value per
    permutation of ``N`` elements."""

    N: int
    M: int
    values: dict

    def __call__(self, perm: Perm) -> Fraction:
        return self.values[tuple(perm)]

    def by_cycle_type(self) -> dict[tuple[int, ...], Fraction]:
        out = {}
        for perm, value in self.values.items():
            out.setdefault(_cycle_type(perm), value)
        return out


@lru_cache(maxsize=None)
def weingarten_table(N: int, M: int) -> WeingartenTable:
    """Exact Weingarten values for ``N <= 4`` and ``M >= N``."""
    if not 0 <= N <= MAX_ORDER:
        raise ValueError(f"moment order must be between 0 and {MAX_ORDER}")
    if M < max(N, 1):
        raise ValueError(f"need M >= N, got M={M}, N={N}")
    perms = list(permutations(range(N)))
    G = [
        [Fraction(M ** len(_cycle_type(_compose(_inverse(s), t)))) for t in perms]
        for s in perms
    ]
    ident = tuple(range(N))
    rhs = [Fraction(int(p == ident)) for p in perms]
    solution = _solve(G, rhs)
    return WeingartenTable(N, M, dict(zip(perms, solution)))


def weingarten_sum(N: int, M: int, signed: bool = False) -> Fraction:
    """``sum_s W(s)``, or ``sum_s sgn(s) W(s)`` when ``signed``."""
    table = weingarten_table(N, M)
    if signed:
        return sum((_sign(p) * v for p, v in table.values.items()), Fraction(0))
    return sum(table.values.values(), Fraction(0))


def _matchings(a: Sequence[int], b: Sequence[int]) -> list[Perm]:
    """Permutations ``p`` with ``a[i] == b[p[i]]`` for all ``i``."""
    return [p for p in permutations(range(len(a))) if all(a[i] == b[p[i]] for i in range(len(a)))]


def haar_moment(rows: Sequence[int], cols: Sequence[int], conj_rows: Sequence[int], conj_cols: Sequence[int], M: int) -> Fraction:
    """Exact ``< prod_a U[rows[a], cols[a]] prod_b conj(U[conj_rows[b], conj_cols[b]]) >``
    over Haar-random ``U`` in ``U(M)``."""
    N = len(rows)
    if not (len(cols) == N and len(conj_rows) == N and len(conj_cols) == N):
        raise ValueError("index lists must all have the same length")
    if N == 0:
        return Fraction(1)
    table = weingarten_table(N, M)
    row_match = _matchings(rows, conj_rows)
    if not row_match:
        return Fraction(0)
    col_match = _matchings(cols, conj_cols)
    total = Fraction(0)
    for s in row_match:
        for t in col_match:
            total += table.values[_compose(s, _inverse(t))]
    return total


def occupation_ports(occ: Sequence[int]) -> list[int]:
    """Port list ``k`` of an occupation vector, each port repeated by its
    occupation (``(2, 0, 1) -> [0, 0, 2]``)."""
    return [port for port, count in enumerate(occ) for _ in range(count)]


def _falling(a: int, k: int) -> int:
    return math.prod(range(a - k + 1, a + 1))


def _rising(a: int, k: int) -> int:
    return math.prod(range(a, a + k))


def _occ_factorial(occ: Sequence[int]) -> int:
    return math.prod(math.factorial(v) for v in occ)


def permanent_pair_average(n, m, s, M: int, sigma="boson", method: str = "both") -> Fraction:
    """Exact ``< per(U[n|s]) conj(per(U[m|s])) >`` for bosons or
    ``< det(U[n|s]) conj(det(U[m|s])) >`` for fermions.

    ``method`` selects the closed form (``"closed"``), the explicit
    Weingarten expansion of both permanents (``"weingarten"``) or both,
    in which case the two are required to agree exactly.
    """
    n, m, s = tuple(n), tuple(m), tuple(s)
    kind = as_kind(sigma)
    if kind is ParticleKind.DISTINGUISHABLE:
        raise ValueError("defined for bosons and fermions only")
    if not (len(n) == len(m) == len(s) == M):
        raise ValueError("occupation vectors must have length M")
    N = sum(n)
    if sum(m) != N or sum(s) != N:
        raise ValueError("occupations must hold the same particle number")
    if N > MAX_ORDER:
        raise ValueError(f"particle number limited to {MAX_ORDER}")
    if kind is ParticleKind.FERMION and max(n + m + s, default=0) > 1:
        raise ValueError("fermion occupations are at most 1 per port")
    if method not in ("closed", "weingarten", "both"):
        raise ValueError(f"unknown method {method!r}")
    closed = expanded = None
    if method in ("closed", "both"):
        closed = _closed_form(n, m, s, M, kind)
    if method in ("weingarten", "both"):
        expanded = _expanded(n, m, s, M, kind)
    if method == "both" and closed != expanded:
        raise ArithmeticError(f"closed form {closed} != Weingarten sum {expanded}")
    return closed if closed is not None else expanded


def _closed_form(n, m, s, M: int, kind: ParticleKind) -> Fraction:
    if n != m:
        return Fraction(0)
    N = sum(n)
    if N == 0:
        return Fraction(1)
    if kind is ParticleKind.BOSON:
        return Fraction(_occ_factorial(s) * _occ_factorial(n) * math.factorial(N), _rising(M, N))
    return Fraction(math.factorial(N), _falling(M, N))


def _expanded(n, m, s, M: int, kind: ParticleKind) -> Fraction:
    k = occupation_ports(n)
    kp = occupation_ports(m)
    l = occupation_ports(s)
    N = len(k)
    fermi = kind is ParticleKind.FERMION
    total = Fraction(0)
    perms = list(permutations(range(N)))
    for p1 in perms:
        rows = [k[p1[i]] for i in range(N)]
        for p2 in perms:
            conj_rows = [kp[p2[i]] for i in range(N)]
            term = haar_moment(rows, l, conj_rows, l, M)
            if term and fermi:
                term *= _sign(p1) * _sign(p2)
            total += term
    return total
