import math

import pytest

from softcap.engine import EnsembleConfig, run_ensemble
from softcap.models import ModelSpec, build_model
from softcap.verify import (
    HOLDS,
    INCONCLUSIVE,
    VIOLATED,
    EpsilonK,
    assumptions_hold,
    check_assumptions,
    check_doob_above,
    check_excursion_geometry,
    check_hit_zero,
    check_return_time,
    estimate_extinction,
    fit_growth,
    judge,
    reports_to_csv,
    scan_capacity,
)


def ensemble(spec, reps, budget, z0, seed=1):
    model = build_model(spec)
    return run_ensemble(model, EnsembleConfig(reps=reps, step_budget=budget,
                                              master_seed=seed, z0=z0))


def test_judge_senses():
    assert judge(0.5, 0.52, 0.01, 100) == HOLDS
    assert judge(0.5, 0.54, 0.01, 100) == VIOLATED
    assert judge(0.5, 0.46, 0.01, 100, "lower") == VIOLATED
    assert judge(0.5, 0.46, 0.01, 100, "equal") == VIOLATED
    assert judge(0.5, 0.9, 0.0, 0) == INCONCLUSIVE
    assert judge(math.nan, 0.9, 0.0, 10) == INCONCLUSIVE


def test_assumptions_ratio():
    drift, floor = check_assumptions(build_model(ModelSpec("ratio_birth_death", 10)))
    assert drift.verdict == floor.verdict == HOLDS
    assert floor.empirical == pytest.approx(1 / 11) and floor.theoretical == pytest.approx(1 / 11)


def test_assumptions_counterexample():
    drift, floor = check_assumptions(build_model(ModelSpec("counterexample", 2)))
    assert drift.verdict == HOLDS
    assert floor.verdict == VIOLATED


def test_assumptions_symmetric_equality():
    drift, _ = check_assumptions(build_model(ModelSpec("symmetric_walk", 6)))
    assert drift.verdict == HOLDS and drift.empirical == 0.0 and "equality" in drift.note


def test_estimate_extinction_absorbed_start():
    r = estimate_extinction(build_model(ModelSpec("ratio_birth_death", 3)), 0, 10, 10, 0)
    assert r.empirical == 1.0 and r.verdict == HOLDS


def test_doob_start_anchored_is_K_over_x_for_unit_steps():
    s = ensemble(ModelSpec("symmetric_walk", 5), 400, 50_000, 4)
    reps = check_doob_above(s, 5, [8, 20])
    anchored = [r for r in reps if r.asserted]
    assert [r.theoretical for r in anchored] == pytest.approx([5 / 8, 5 / 20])
    assert all(r.verdict == HOLDS for r in reps)
    with pytest.raises(ValueError):
        check_doob_above(s, 5, [3])


def test_doob_far_level_vanishes():
    s = ensemble(ModelSpec("biased_walk", 5, delta=0.2), 400, 10**6, 4)
    far = check_doob_above(s, 5, [200])[0]
    assert far.empirical == 0.0


def test_hit_zero_trivial_and_biased():
    s = ensemble(ModelSpec("ratio_birth_death", 1), 20, 10**4, 1)
    assert check_hit_zero(s, 1).verdict == HOLDS
    s = ensemble(ModelSpec("biased_walk", 10, delta=0.2), 400, 10**6, 9)
    r = check_hit_zero(s, 10)
    assert r.asserted and r.verdict == HOLDS and r.empirical < 0.1


def test_hit_zero_warns_without_submartingale():
    s = ensemble(ModelSpec("moran_toy", 4, offspring_pmf=((0, 0.6), (2, 0.3), (3, 0.1))),
                 50, 10**5, 3)
    with pytest.warns(UserWarning):
        r = check_hit_zero(s, 4)
    assert not r.asserted


def test_geometry_ratio_nearly_vacuous():
    s = ensemble(ModelSpec("ratio_birth_death", 5), 2000, 10**6, 4)
    epsK = EpsilonK(1 / 6, 5)
    assert epsK.p == pytest.approx(1 - (1 / 6) ** 4)
    reps = check_excursion_geometry(s, epsK)
    assert all(r.verdict == HOLDS for r in reps if r.asserted)
    assert len(reps) == 6


def test_geometry_never_reaching_K():
    s = ensemble(ModelSpec("cell_cycle", 6, p_die=1.0), 30, 100, 2)
    r = check_excursion_geometry(s, EpsilonK(1.0, 6), k_max=1)[0]
    assert r.empirical == 0.0 and r.verdict == HOLDS


def test_return_time_biased_and_ratio_warning():
    s = ensemble(ModelSpec("biased_walk", 6, delta=0.2), 500, 10**6, 5)
    foster, ref = check_return_time(s, 6, 0.2)
    assert foster.asserted and foster.theoretical == pytest.approx(5.0)
    assert foster.verdict == HOLDS and not ref.asserted
    s = ensemble(ModelSpec("ratio_birth_death", 4), 100, 10**5, 3)
    with pytest.warns(UserWarning):
        foster, _ = check_return_time(s, 4, 0.1)
    assert not foster.asserted


def test_scan_single_row_and_growth_fit():
    t = scan_capacity(ModelSpec("biased_walk", 4, delta=0.2), [4], 200, 10**6, 1)
    assert len(t.rows) == 1 and t.exponential is None and math.isnan(t.slope)
    t = scan_capacity(ModelSpec("biased_walk", 4, delta=0.2), [3, 4, 5], 300, 10**6, 1)
    assert t.rows[0].oracle_mean < t.rows[1].oracle_mean < t.rows[2].oracle_mean
    assert t.to_csv().startswith("K,mean_time")


def test_fit_growth_discriminates():
    Ks = [4, 6, 8, 10, 12]
    assert fit_growth(Ks, [56.25, 172.81, 447.58, 1078.30, 2509.93])[2] is True
    assert fit_growth(Ks, [K * K - 1 for K in Ks])[2] is False


def test_assumptions_hold_catalog():
    assert assumptions_hold(build_model(ModelSpec("biased_walk", 5, delta=0.3)))
    assert not assumptions_hold(build_model(ModelSpec("counterexample", 2)))


def test_csv_layout():
    r = check_assumptions(build_model(ModelSpec("ratio_birth_death", 2)))
    text = reports_to_csv(r)
    assert text.startswith("name,theoretical,empirical,stderr,n,verdict\r\n")
    assert text.count("\r\n") == 3
