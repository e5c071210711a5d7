"""
How long a stay above capacity lasts
====================================

With drift -delta above K and unit steps, a stay that starts at K returns
below K after 1/delta steps on average. Starts higher up take longer, by
(start - K + 1) / delta.
"""

from softcap import EnsembleConfig, ModelSpec, build_model, check_return_time, run_ensemble

model = build_model(ModelSpec("biased_walk", K=10, delta=0.2))
s = run_ensemble(model, EnsembleConfig(reps=500, step_budget=10**7, master_seed=4, z0=9))

for r in check_return_time(s, 10, 0.2, c_max=1, model=model):
    print(f"{r.name:32s} bound {r.theoretical:6.2f}  mean {r.empirical:.3f} +- {r.stderr:.3f}"
          f"  {'asserted' if r.asserted else 'reference'}")
