"""
Cutting a path into excursions
==============================

A path alternates between stretches below K and stretches at or above K.
The entry times below K and the return times to K split it cleanly.
"""

from softcap import ModelSpec, build_model, decompose, derive_stream, excursion_stats, simulate

model = build_model(ModelSpec("ratio_birth_death", K=4))
trace = simulate(model, z0=3, step_budget=10**5, rng=derive_stream(7, 2))
print("status", trace.status, "after", trace.steps_used, "steps")

d = decompose(trace, 4)
for a, b, below in d.segments()[:8]:
    print("below" if below else "above", trace.sizes[a:b])

st = excursion_stats(trace, 4)
print("trips below K:", st.n_below_excursions, " trips above K:", st.n_above_excursions)
print("longest stay above K:", max(st.above_durations, default=0))
