import pytest
from hypothesis import given, settings, strategies as st

from softcap.models import ModelSpec, build_model
from softcap.oracle import exact_absorption
from softcap.process import (
    CENSORED,
    EXTINCT,
    AbsorbedError,
    Trace,
    apply_change,
    simulate,
    step,
)
from softcap.rng import derive_stream


def test_apply_change_examples():
    assert apply_change(5, -1) == 4
    assert apply_change(1, -1) == 0
    with pytest.raises(ValueError, match="would go negative"):
        apply_change(3, -5)
    with pytest.raises(AbsorbedError):
        apply_change(0, 1)
    with pytest.raises(ValueError):
        apply_change(4, 0)


def test_step_degenerate_law_at_K():
    K = 4
    model = build_model(ModelSpec("cell_cycle", K, p_die=(0.5, 0.5, 0.5, 1.0)))
    rng = derive_stream(0, 0)
    for i in range(20):
        c, rng2 = step(model, [1, 2, 3, K], rng)
        assert c == -1
        assert rng2 == rng  # single-atom law draws nothing


def test_step_rejects_absorbed_or_empty_history():
    model = build_model(ModelSpec("symmetric_walk", 3))
    with pytest.raises(AbsorbedError):
        step(model, [2, 1, 0], derive_stream(0, 0))
    with pytest.raises(ValueError):
        step(model, [], derive_stream(0, 0))


def test_step_is_deterministic():
    model = build_model(ModelSpec("ratio_birth_death", 4))
    s = derive_stream(99, 3)
    first = step(model, [4], s)
    assert all(step(model, [4], s) == first for _ in range(10))
    assert first[0] in (-1, 1)
    assert first[1] != s


def test_simulate_absorbed_start():
    tr = simulate(build_model(ModelSpec("symmetric_walk", 3)), 0, 100, derive_stream(0, 0))
    assert tr.sizes == (0,) and tr.status == EXTINCT and tr.steps_used == 0


def test_simulate_forced_death():
    model = build_model(ModelSpec("cell_cycle", 1, p_die=1.0))
    tr = simulate(model, 1, 10, derive_stream(0, 0))
    assert tr.sizes == (1, 0) and tr.status == EXTINCT and tr.steps_used == 1


def test_simulate_ratio_goes_extinct_well_within_budget():
    model = build_model(ModelSpec("ratio_birth_death", 5))
    # exact mean absorption time from 3 is a few hundred steps, far below the budget
    mean_t = exact_absorption(model, 120).expected_absorption_time[3]
    assert mean_t < 1000
    traces = [simulate(model, 3, 10**6, derive_stream(11, r)) for r in range(40)]
    assert sum(t.status == EXTINCT for t in traces) >= 39


def test_budget_zero_censors():
    tr = simulate(build_model(ModelSpec("symmetric_walk", 3)), 2, 0, derive_stream(0, 0))
    assert tr.sizes == (2,) and tr.status == CENSORED


def _random_spec(draw):
    kind = draw(st.sampled_from(["ratio_birth_death", "biased_walk", "symmetric_walk",
                                 "cell_cycle", "moran_toy", "counterexample"]))
    K = 2 if kind == "counterexample" else draw(st.integers(1, 8))
    if kind == "biased_walk":
        return ModelSpec(kind, K, delta=draw(st.floats(0.01, 0.9)))
    if kind == "cell_cycle":
        below = draw(st.lists(st.floats(0.05, 1.0), min_size=0, max_size=6))
        above = draw(st.floats(0.5, 1.0))
        return ModelSpec(kind, K, p_die=tuple(below[: K - 1]) + (above,))
    if kind == "moran_toy":
        q0 = draw(st.floats(0.6, 0.95))
        return ModelSpec(kind, K, offspring_pmf=((0, q0), (2, (1 - q0) / 2), (3, (1 - q0) / 2)),
                         offspring_pmf_below=((0, 0.2), (2, 0.8)))
    return ModelSpec(kind, K)


model_specs = st.composite(lambda draw: _random_spec(draw))()


@settings(max_examples=60, deadline=None)
@given(model_specs, st.integers(0, 12), st.integers(0, 400), st.integers(0, 2**64 - 1))
def test_trace_invariants(spec, z0, budget, seed):
    model = build_model(spec)
    tr = simulate(model, z0, budget, derive_stream(seed, 0))
    assert tr.sizes[0] == z0
    assert len(tr.sizes) == tr.steps_used + 1
    assert tr.steps_used <= budget
    assert all(s >= 0 for s in tr.sizes)
    for a, b in zip(tr.sizes, tr.sizes[1:]):
        assert a > 0 and b != a
    assert (tr.status == EXTINCT) == (tr.sizes[-1] == 0)
    if tr.status == CENSORED:
        assert tr.steps_used == budget
    assert simulate(model, z0, budget, derive_stream(seed, 0)) == tr


def test_trace_validation_and_json():
    with pytest.raises(ValueError):
        Trace((3, 2), EXTINCT, 1)
    with pytest.raises(ValueError):
        Trace((3, 2), CENSORED, 2)
    tr = Trace((2, 1, 0), EXTINCT, 2)
    assert tr.to_json() == '{"z0":2,"status":"extinct","steps":2,"final":0}'
    assert tr.to_record(include_sizes=True)["sizes"] == [2, 1, 0]
