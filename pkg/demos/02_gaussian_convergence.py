"""Convergence of the binned laws to their Gaussian limits.

For each N the largest relative error between the exact probability and
the Gaussian law over the whole window around the mean is printed next
to the predicted error scale. Bosons run at density N/M = 1, fermions at
N/M = 1/2.
"""

import math

from qdemoivre import gaussian_high_density, gaussian_law, quantum_prob
from qdemoivre.asymptotics import max_relative_error

print(f"{'kind':>8} {'N':>6} {'max rel error':>14} {'error scale':>12} {'counts':>7}")
for sigma, ports_per_particle in (("boson", 1), ("fermion", 2)):
    for N in (64, 256, 1024, 4096):
        K = (ports_per_particle * N // 2,) * 2
        err, count = max_relative_error(N, K, sigma)
        scale = gaussian_law((N // 2, N // 2), K, sigma).leading_error_scale
        print(f"{sigma:>8} {N:>6} {err:14.3e} {scale:12.3e} {count:>7}")

# de Moivre-Laplace: one coin, 100 tosses
exact = quantum_prob((50, 50), (1, 1), "distinguishable", "exact")
gauss = math.exp(gaussian_law((50, 50), (1, 1), "distinguishable").log_value)
print(f"\nP(50 heads of 100) exact {float(exact.exact):.6f}, Gaussian {gauss:.6f}")

# many bosons in few ports: 16 ports, two bins of 8
for N in (1000, 10_000):
    n, K = (N // 2, N // 2), (8, 8)
    exact = quantum_prob(n, K, "boson", "logspace").logp
    approx = gaussian_high_density(n, K)
    print(f"high density N={N}: ln P exact {exact:.4f}, law {approx:.4f}")
