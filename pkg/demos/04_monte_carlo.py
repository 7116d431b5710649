"""Monte Carlo over Haar-random unitaries against the exact averages.

Two photons enter a 2-port beam splitter drawn from the Haar measure.
Averaged over unitaries, each of the three output counts has probability
1/3. Two fermions in 4 ports split into two bins of 2 land one per bin
with probability 2/3. Results are reproducible from the seed and do not
depend on the number of workers.

Distinguishable particles sent through one shared Haar unitary are
correlated and do not follow the multinomial law; averaging the input
port of each particle over a fixed unitary recovers it exactly.
"""

from qdemoivre import mc_average, quantum_prob

runs = [
    ("haar_average", "boson", (1, 1), 2, 8),
    ("haar_average", "fermion", (2, 2), 2, 9),
    ("input_average", "distinguishable", (1, 2), 3, 10),
    ("haar_average", "distinguishable", (1, 2), 3, 10),
]
for mode, sigma, K, N, seed in runs:
    est = mc_average(mode, K, sigma, 20_000, seed=seed, N=N)
    print(f"{sigma}, K={K}, N={N}, {mode}")
    for n, e in est.items():
        exact = float(quantum_prob(n, K, sigma, "exact").exact)
        print(f"  n={n}: {e.mean:.4f} +- {e.stderr:.4f}  law {exact:.4f}  z={e.z_score(exact):+.2f}")

one = mc_average("haar_average", (1, 1), "boson", 5000, seed=1, N=2, workers=1)
four = mc_average("haar_average", (1, 1), "boson", 5000, seed=1, N=2, workers=4)
print("identical for 1 and 4 workers:", all(one[n].mean == four[n].mean for n in one))
