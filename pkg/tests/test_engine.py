import io
import json

import pytest

from softcap.engine import CHUNK, EnsembleConfig, run_ensemble
from softcap.excursions import excursion_stats
from softcap.models import Model, ModelSpec, build_model, ChangePMF
from softcap.oracle import exact_absorption
from softcap.process import simulate
from softcap.rng import derive_stream

RATIO5 = build_model(ModelSpec("ratio_birth_death", 5))


def test_derive_stream_contract():
    assert derive_stream(7, 0) != derive_stream(7, 1)
    assert derive_stream(7, 3) == derive_stream(7, 3)
    assert derive_stream(7, 3) != derive_stream(8, 3)


@pytest.mark.parametrize("spec,z0", [
    (ModelSpec("ratio_birth_death", 5), 3),
    (ModelSpec("biased_walk", 6, delta=0.2), 5),
    (ModelSpec("counterexample", 2), 1),
])
def test_parallelism_does_not_change_result(spec, z0):
    model = build_model(spec)
    runs = [run_ensemble(model, EnsembleConfig(reps=3 * CHUNK + 17, step_budget=20_000,
                                               master_seed=11, parallelism=p, z0=z0))
            for p in (1, 3, 8)]
    assert runs[0] == runs[1] == runs[2]
    assert runs[0].to_json() == runs[2].to_json()


def test_absorbed_start():
    s = run_ensemble(RATIO5, EnsembleConfig(reps=1, step_budget=10, z0=0))
    assert s.n_extinct == 1 and s.time_sum == 0 and s.extinction_time[0] == 0.0


def test_mean_time_matches_oracle():
    s = run_ensemble(RATIO5, EnsembleConfig(reps=10_000, step_budget=10**6, master_seed=3, z0=3))
    exact = exact_absorption(RATIO5, 150).expected_absorption_time[3]
    mean, se = s.extinction_time
    assert s.n_censored == 0
    assert abs(mean - exact) <= 3 * se


@pytest.mark.parametrize("spec,z0,level", [
    (ModelSpec("ratio_birth_death", 4), 3, None),
    (ModelSpec("moran_toy", 4, offspring_pmf=((0, 0.6), (2, 0.3), (3, 0.1))), 6, None),
    (ModelSpec("cell_cycle", 3, p_die=(0.3, 0.45, 0.5, 0.8)), 2, 2),
    (ModelSpec("counterexample", 2), 1, None),
    (ModelSpec("symmetric_walk", 3), 2, None),
])
def test_kernel_and_reference_paths_agree(spec, z0, level):
    model = build_model(spec)
    cfg = EnsembleConfig(reps=300, step_budget=500, master_seed=5, z0=z0, K=level)
    assert run_ensemble(model, cfg) == run_ensemble(model, cfg, force_python=True)


@pytest.mark.parametrize("z0", [1, 2])
def test_counterexample_underflow_shortcut_is_exact(z0):
    # budgets past the point where the death risk at size 1 underflows to 0
    model = build_model(ModelSpec("counterexample", 2))
    for budget in (2900, 2901):
        cfg = EnsembleConfig(reps=40, step_budget=budget, master_seed=12, z0=z0)
        assert run_ensemble(model, cfg) == run_ensemble(model, cfg, force_python=True)


def test_recorded_traces_equal_simulate():
    model = build_model(ModelSpec("biased_walk", 4, delta=0.2))
    cfg = EnsembleConfig(reps=40, step_budget=3000, master_seed=9, z0=3, record_full_traces=True)
    s = run_ensemble(model, cfg)
    assert len(s.traces) == 40
    for i, tr in enumerate(s.traces):
        assert tr == simulate(model, 3, 3000, derive_stream(9, i))


def test_summary_matches_post_hoc_stats():
    model = build_model(ModelSpec("ratio_birth_death", 4))
    cfg = EnsembleConfig(reps=50, step_budget=400, master_seed=2, z0=3)
    s = run_ensemble(model, cfg)
    n_above = n_below = 0
    for i in range(50):
        tr = simulate(model, 3, 400, derive_stream(2, i))
        st = excursion_stats(tr, 4)
        n_above += len(st.above_durations)
        n_below += sum(1 for _ in st.below_outcomes)
    assert s.n_above_completed == n_above
    assert sum(s.below_started.values()) == n_below


def test_trace_lines(tmp_path):
    model = build_model(ModelSpec("ratio_birth_death", 3))
    cfg = EnsembleConfig(reps=300, step_budget=50, master_seed=1, z0=2)
    buf = io.StringIO()
    s = run_ensemble(model, cfg, trace_file=buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert len(lines) == 300
    assert sum(r["status"] == "extinct" for r in lines) == s.n_extinct
    assert all(list(r) == ["z0", "status", "steps", "final"] for r in lines)
    path = tmp_path / "t.jsonl"
    run_ensemble(model, cfg, trace_file=str(path))
    assert path.read_text() == buf.getvalue()
    full = io.StringIO()
    run_ensemble(model, EnsembleConfig(reps=5, step_budget=50, master_seed=1, z0=2,
                                       record_full_traces=True), trace_file=full)
    first = json.loads(full.getvalue().splitlines()[0])
    assert first["sizes"][0] == 2 and len(first["sizes"]) == first["steps"] + 1


class Flaky(Model):
    """Size-only toy whose law raises at one size."""

    def __init__(self):
        super().__init__(ModelSpec("symmetric_walk", 2), 0.5)

    def law(self, z, visit=1):
        if z == 4:
            raise RuntimeError("boom")
        return ChangePMF((-1, 1), (0.5, 0.5))


def test_failed_replicates_are_reported():
    s = run_ensemble(Flaky(), EnsembleConfig(reps=200, step_budget=200, master_seed=4, z0=2))
    assert s.failures and all("boom" in f["error"] for f in s.failures)
    assert s.n_extinct + s.n_censored == 200


def test_config_validation():
    with pytest.raises(ValueError):
        EnsembleConfig(reps=0, step_budget=1)
    with pytest.raises(ValueError):
        EnsembleConfig(reps=1, step_budget=1, master_seed=2**64)
    with pytest.raises(ValueError):
        EnsembleConfig.from_dict({"reps": 1, "step_budget": 1, "threads": 2})
