"""Counts outside the Gaussian window are exponentially unlikely.

For N=500 particles in 1000 ports split into two equal bins, every count
vector outside the window is compared with the explicit tail bound. The
margin column is the log of bound over exact probability.
"""

from qdemoivre import in_window, quantum_prob, tail_bound
from qdemoivre.core import iter_counts

N, K = 500, (500, 500)
for sigma in ("distinguishable", "boson", "fermion"):
    margins = []
    for n in iter_counts(N, 2):
        if in_window(n, K):
            continue
        exact = quantum_prob(n, K, sigma, "logspace").logp
        margins.append((tail_bound(n, K, sigma) - exact, n))
    worst = min(margins)
    print(f"{sigma:>15}: {len(margins)} counts outside, tightest margin {worst[0]:.2f} at n={worst[1]}")
