"""
Same seed, same numbers
=======================

Replicate i always draws from stream i of the master seed, and per-chunk
integer tallies are merged in order, so the thread count never changes the
result.
"""

from softcap import EnsembleConfig, ModelSpec, build_model, run_ensemble

model = build_model(ModelSpec("ratio_birth_death", K=6))
runs = {p: run_ensemble(model, EnsembleConfig(reps=2000, step_budget=10**6, master_seed=99,
                                              parallelism=p, z0=5))
        for p in (1, 4, 8)}
print("identical:", runs[1].to_json() == runs[4].to_json() == runs[8].to_json())
s = runs[1]
print("extinct", s.n_extinct, "time sum", s.time_sum, "time sum of squares", s.time_sumsq)
