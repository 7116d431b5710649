import itertools
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def _bin_counts(ports, K):
    edges = list(itertools.accumulate(K))
    counts = [0] * len(K)
    for p in ports:
        counts[next(i for i, e in enumerate(edges) if p < e)] += 1
    return tuple(counts)


def enumerate_binned(N, K, kind):
    """Brute-force oracle: bin-count distribution from enumerating every
    microstate. Bosons and fermions are uniform over Fock states;
    distinguishable particles are uniform over port assignments."""
    M = sum(K)
    if kind == "distinguishable":
        states = itertools.product(range(M), repeat=N)
    elif kind == "boson":
        states = itertools.combinations_with_replacement(range(M), N)
    else:
        states = itertools.combinations(range(M), N)
    tally = Counter(_bin_counts(s, K) for s in states)
    total = sum(tally.values())
    return {n: Fraction(c, total) for n, c in tally.items()}


@pytest.fixture
def fock_oracle():
    return enumerate_binned


ACCEPTANCE_LINES = []


class AcceptanceRecorder:
    """Times a criterion and records one PASS/FAIL line for the summary."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.detail = ""

    def __enter__(self):
        import time

        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time

        elapsed = time.perf_counter() - self._t0
        status = "PASS" if exc_type is None else "FAIL"
        line = f"criterion {self.number:>2} {status} ({elapsed:7.2f}s) {self.title}"
        if self.detail:
            line += f" | {self.detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return False


@pytest.fixture
def criterion():
    return AcceptanceRecorder


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
