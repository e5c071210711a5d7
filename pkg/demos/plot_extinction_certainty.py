"""
Extinction under a soft carrying capacity
=========================================

A birth-and-death chain whose death chance grows with size, z / (z + K),
never sees a positive mean change at or above K. Every lineage dies out,
and the exact first-step solution tells us how long that takes on average.
"""

from softcap import (EnsembleConfig, ModelSpec, build_model, check_assumptions,
                     exact_absorption, run_ensemble)

model = build_model(ModelSpec("ratio_birth_death", K=10))

# both standing conditions hold analytically
for r in check_assumptions(model):
    print(f"{r.name:28s} {r.verdict}")

# exact mean time to extinction, truncated far above K
sol = exact_absorption(model, state_cap=200)
print("exact E[T | z0=5]    ", round(sol.expected_absorption_time[5], 2))
print("escape mass from z<=K", sol.tail_mass[1:11].max())

summary = run_ensemble(model, EnsembleConfig(reps=1000, step_budget=10**7,
                                             master_seed=1, z0=5))
mean, se = summary.extinction_time
print(f"extinct {summary.n_extinct}/{summary.reps}, mean time {mean:.0f} +- {se:.0f}")
