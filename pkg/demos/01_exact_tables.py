"""Exact binned counting distributions for the three particle kinds.

Six particles leave a 12-port multiport whose ports are grouped into
three bins of sizes 2, 4 and 6. The table lists the Haar-averaged
probability of each bin count vector and the quantum factor that
separates bosons and fermions from distinguishable particles.
"""

from qdemoivre import distribution, factorize, quantum_factor

N, K = 6, (2, 4, 6)

tables = {s: distribution(N, K, s, "exact") for s in ("distinguishable", "boson", "fermion")}
print(f"N={N}, K={K}")
print(f"{'n':>12} {'classical':>12} {'boson':>12} {'fermion':>12} {'Q+':>8} {'Q-':>8}")
for n in tables["boson"]:
    row = [float(tables[s][n].exact) for s in tables]
    qb = float(quantum_factor(n, K, "boson", "exact").exact)
    qf = float(quantum_factor(n, K, "fermion", "exact").exact)
    print(f"{str(n):>12} " + " ".join(f"{p:12.6f}" for p in row) + f" {qb:8.4f} {qf:8.4f}")

for s, table in tables.items():
    total = sum(p.exact for p in table.values())
    print(f"{s:>15}: sum of exact rationals = {total}")

# the r-bin law is a product of binary laws
n = (1, 2, 3)
layers = factorize(n, K, "boson")
print("\nbinary layers for n=(1, 2, 3):", *layers, sep="\n  ")
print("product of layers:", layers.probability("exact").exact, "direct:", tables["boson"][n].exact)
