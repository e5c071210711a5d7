"""
The fair walk: where the bounds are sharp
=========================================

For a fair +-1 walk the process below K is a martingale. A dip from K-1
reaches 0 before K with probability exactly 1/K, so on average a lineage
makes K trips below capacity before dying. Above K, an excursion starting
at K climbs to x before falling back with probability 1/(x-K+1).
"""

from softcap import (EnsembleConfig, ModelSpec, build_model, check_doob_above,
                     check_hit_zero, gamblers_ruin_up, run_ensemble)

K = 10
model = build_model(ModelSpec("symmetric_walk", K))
s = run_ensemble(model, EnsembleConfig(reps=3000, step_budget=10**7, master_seed=3, z0=K - 1))

r = check_hit_zero(s, K, model)
print(f"P(dip from K-1 dies) {r.empirical:.4f} +- {r.stderr:.4f}   1/K = {1 / K}")

mean, se = s.below_count_stats()
print(f"trips below K        {mean:.2f} +- {se:.2f}")

for rep in check_doob_above(s, K, [12, 20, 50])[::2]:
    x = int(rep.name.rsplit("x", 1)[1])
    print(f"P(max >= {x:3d})       {rep.empirical:.4f}   ruin {gamblers_ruin_up(K, K - 1, x):.4f}"
          f"   K/x {K / x:.3f}")
