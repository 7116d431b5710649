"""Weingarten calculus and mixed input states.

Exact Haar averages of permanent pairs follow from the Weingarten
function. Off-diagonal terms of a mixed input state carry cross moments
that vanish on average, so only the diagonal populations reach the
averaged output statistics.
"""

from qdemoivre import permanent_pair_average, weingarten_table
from qdemoivre.haar_mc import mixed_state_check

W = weingarten_table(3, 4)
print("Weingarten values for N=3, M=4 by cycle type:")
for ctype, value in W.by_cycle_type().items():
    print(f"  {ctype}: {value}")

print("\n<|per U[n|s]|^2> for s=(1,1,0):")
for n in [(1, 1, 0), (2, 0, 0), (0, 1, 1)]:
    print(f"  n={n}: {permanent_pair_average(n, n, (1, 1, 0), 3, 'boson')}")

rho = [
    ((1, 1, 0), (1, 1, 0), 0.5),
    ((2, 0, 0), (2, 0, 0), 0.5),
    ((1, 1, 0), (2, 0, 0), 0.4),
    ((2, 0, 0), (1, 1, 0), 0.4),
]
report = mixed_state_check(rho, 3, 50_000, 7, "boson")
print("\ncross moments (n != m):")
for e in report.moments:
    if e.n != e.m:
        print(f"  n={e.n} m={e.m} s={e.s}: {e.real.mean:+.4f} +- {e.real.stderr:.4f}, exact {e.exact}")
print("all moments consistent:", report.consistent)
