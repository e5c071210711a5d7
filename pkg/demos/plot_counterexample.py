"""
When the death risk fades away
==============================

At size 1 the chance of dying on the k-th visit is 2**-(k+2). The mean
change above K=2 is still negative, but the risk has no positive floor,
and a lineage survives forever with probability prod_{j>=3} (1 - 2**-j).
"""
import math

from softcap import EnsembleConfig, ModelSpec, build_model, check_assumptions, run_ensemble

model = build_model(ModelSpec("counterexample", K=2))
drift, floor = check_assumptions(model)
print("drift condition:", drift.verdict, "| death-risk floor:", floor.verdict)
print(floor.note)

exact = model.survival_probability(terms=60)
print("survival, infinite product:", round(exact, 6))
assert math.isclose(exact, math.prod(1 - 2.0**-j for j in range(3, 61)))

s = run_ensemble(model, EnsembleConfig(reps=4000, step_budget=10**5, master_seed=2, z0=1))
print("survival, simulated:       ", 1 - s.extinction_frequency)
