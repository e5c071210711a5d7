"""
Extinction times grow exponentially in K
========================================

A walk pushed up below K and down above it takes exponentially long to die
out. Without the push below K the growth is only quadratic.
"""

from softcap import ModelSpec, scan_capacity

Ks = [4, 6, 8, 10, 12]
biased = scan_capacity(ModelSpec("biased_walk", 4, delta=0.2), Ks, reps=1000,
                       budget=10**7, seed=5)
print(biased.to_csv())
print("log-slope", round(biased.slope, 3), "exponential:", biased.exponential)

# reflecting fair walk: coin flips below K, forced down at K
flat = scan_capacity(lambda K: ModelSpec("cell_cycle", K, p_die=[0.5] * (K - 1) + [1.0]),
                     Ks, reps=1000, budget=10**7, seed=5)
print([round(r.oracle_mean) for r in flat.rows], "exponential:", flat.exponential)
