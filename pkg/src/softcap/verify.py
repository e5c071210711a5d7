"""Bound checks: theory against exact analysis and Monte Carlo ensembles.

Each check returns :class:`BoundReport` objects. One-sided bounds are judged
at three standard errors: a report is ``violated`` only when the estimate
lies beyond the bound by more than ``3 * stderr``. Reports with
``asserted=False`` are shown for reference and never affect a verdict
summary.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .engine import EnsembleConfig, EnsembleSummary, run_ensemble
from .models import Model, ModelError, ModelSpec, build_model, conditional_law
from .oracle import OracleError, exact_absorption

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

SIGMAS = 3.0
EXACT_ATOL = 1e-12

CSV_COLUMNS = ("name", "theoretical", "empirical", "stderr", "n", "verdict")


@dataclass
class BoundReport:
    name: str
    theoretical: float
    empirical: float
    stderr: float
    n: int
    verdict: str = INCONCLUSIVE
    sense: str = "upper"  # "upper": empirical <= theoretical; "lower"; "equal"
    asserted: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def judge(theoretical, empirical, stderr, n, sense="upper") -> str:
    if n == 0 or any(map(math.isnan, (theoretical, empirical, stderr))):
        return INCONCLUSIVE
    slack = SIGMAS * stderr + EXACT_ATOL
    if sense == "upper":
        bad = empirical - theoretical > slack
    elif sense == "lower":
        bad = theoretical - empirical > slack
    else:
        bad = abs(empirical - theoretical) > slack
    return VIOLATED if bad else HOLDS


def report(name, theoretical, empirical, stderr, n, sense="upper", asserted=True, note=""):
    theoretical, empirical, stderr = float(theoretical), float(empirical), float(stderr)
    return BoundReport(name, theoretical, empirical, stderr, int(n),
                       judge(theoretical, empirical, stderr, n, sense), sense, asserted, note)


def binomial(k: int, n: int):
    if n == 0:
        return math.nan, math.nan
    p = k / n
    return p, math.sqrt(p * (1.0 - p) / n)


def any_violated(reports) -> bool:
    return any(r.asserted and r.verdict == VIOLATED for r in reports)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)  # RFC 4180: CRLF, minimal quoting
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.name, repr(r.theoretical), repr(r.empirical), repr(r.stderr), r.n, r.verdict])
    return buf.getvalue()


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# assumptions


def _states(model: Model, z_max: int, k_max: int):
    visits = range(1, k_max + 1) if model.state_summary == "size_and_visits" else (1,)
    for z in range(1, z_max + 1):
        for v in visits if z == 1 else (1,):
            yield z, v


def _min_death(model, z_max, k_max):
    return min(conditional_law(model, z, v).prob(-1) for z, v in _states(model, z_max, k_max))


def check_assumptions(model: Model, K: Optional[int] = None, z_max: Optional[int] = None,
                      k_max: int = 50):
    """Analytic check of the two standing assumptions over a finite state range.

    The drift report holds when every size ``K <= z <= z_max`` has
    non-positive conditional mean change. The death-risk report holds when a
    positive floor on ``P(change = -1)`` survives doubling the inspected
    range; a declared ``model.epsilon`` is used as the floor when present.
    """
    K = model.K if K is None else K
    z_max = model.z_max if z_max is None else z_max
    if z_max < K:
        raise ValueError("z_max must be >= K")
    if model.state_summary == "history":
        nan = math.nan
        return [report("drift_nonpositive_above_K", 0.0, nan, 0.0, 0, asserted=False,
                       note="law depends on the full history; not enumerable"),
                report("death_risk_floor", nan, nan, 0.0, 0, "lower", asserted=False,
                       note="law depends on the full history; not enumerable")]

    visits = range(1, k_max + 1) if model.state_summary == "size_and_visits" else (1,)
    drifts = [conditional_law(model, z, v).mean() for z in range(K, z_max + 1) for v in visits]
    worst = max(drifts)
    n_states = len(drifts)
    note = "equality: zero drift attained" if abs(worst) <= EXACT_ATOL else ""
    out = [report("drift_nonpositive_above_K", 0.0, worst, 0.0, n_states, note=note)]

    m1 = _min_death(model, z_max, k_max)
    m2 = _min_death(model, 2 * z_max, 2 * k_max)
    n_death = sum(1 for _ in _states(model, 2 * z_max, 2 * k_max))
    if model.epsilon is not None:
        r = report("death_risk_floor", model.epsilon, m2, 0.0, n_death, "lower",
                   note=f"declared epsilon {model.epsilon!r}")
    else:
        r = report("death_risk_floor", m1, m2, 0.0, n_death, "lower",
                   note="floor inferred from the smaller state range")
        if m2 < m1 or m1 <= 0.0:
            r.verdict = VIOLATED
            r.note = (f"P(change=-1) keeps falling as the inspected range grows "
                      f"({m1:.3g} -> {m2:.3g}): no uniform positive floor")
    if m2 <= 0.0:
        r.verdict = VIOLATED
    return out + [r]


def assumptions_hold(model: Model, **kw) -> bool:
    return all(r.verdict == HOLDS for r in check_assumptions(model, **kw))


# ---------------------------------------------------------------------------
# extinction


def extinction_report(summary: EnsembleSummary, model: Optional[Model] = None) -> BoundReport:
    model = model or summary.model
    f, se = binomial(summary.n_extinct, summary.reps)
    note = f"{summary.n_censored} censored replicates counted as non-extinct"
    if summary.z0 == 0:
        return report("extinction_frequency", 1.0, f, se, summary.reps, "lower",
                      note="absorbed start")
    if model is not None and hasattr(model, "survival_probability"):
        theo = 1.0 - model.survival_probability(terms=60)
        return report("extinction_frequency", theo, f, se, summary.reps, "equal",
                      note="death risk decays: extinction is not certain; " + note)
    if model is not None and not assumptions_hold(model):
        return report("extinction_frequency", math.nan, f, se, summary.reps, "lower",
                      asserted=False, note="assumptions fail; no extinction guarantee. " + note)
    return report("extinction_frequency", 1.0, f, se, summary.reps, "lower", note=note)


def estimate_extinction(model: Model, z0: int, reps: int, budget: int, seed: int,
                        parallelism: int = 1) -> BoundReport:
    """Monte Carlo extinction frequency against certain extinction (or the exact value)."""
    cfg = EnsembleConfig(reps=reps, step_budget=budget, master_seed=seed,
                         parallelism=parallelism, z0=z0)
    return extinction_report(run_ensemble(model, cfg), model)


# ---------------------------------------------------------------------------
# excursion bounds


def check_doob_above(ensemble: EnsembleSummary, K: int, x_list):
    """Frequency of above-K excursions whose maximum reaches ``x``.

    Asserted against ``E[min(1, Z_mu / x)]`` (maximal inequality from the
    excursion's own start); ``(K - 1) / x`` is reported alongside.
    """
    n = ensemble.n_above_completed
    out = []
    for x in x_list:
        if x < K:
            raise ValueError(f"x = {x} < K = {K}")
        k = sum(c for m, c in ensemble.above_max.items() if m >= x)
        f, se = binomial(k, n)
        anchored = (sum(c * min(1.0, s / x) for s, c in ensemble.above_start.items()) / n
                    if n else math.nan)
        out.append(report(f"doob_start_anchored_x{x}", anchored, f, se, n))
        out.append(report(f"doob_K_minus_1_over_x{x}", (K - 1) / x, f, se, n, asserted=False,
                          note="reference constant; presumes a start at K-1"))
    return out


def _unit_steps(model, upto):
    return all(set(conditional_law(model, z).changes) <= {-1, 1} for z in range(1, upto + 1))


def _below_submartingale(model, K):
    if model.state_summary != "size":
        return False
    if not _unit_steps(model, max(K, 1)):
        return False
    return all(conditional_law(model, z).mean() >= -EXACT_ATOL for z in range(1, K))


def check_hit_zero(ensemble: EnsembleSummary, K: int, model: Optional[Model] = None) -> BoundReport:
    """Extinction probability of a below-K excursion entered at ``K - 1``, against ``1/K``."""
    model = model or ensemble.model
    if K == 1:
        return report("hit_zero_per_excursion", 1.0, 1.0, 0.0, 1, note="K = 1: trivial")
    n = ensemble.below_started.get(K - 1, 0)
    k = ensemble.below_extinct.get(K - 1, 0)
    f, se = binomial(k, n)
    asserted, note = True, ""
    if model is None or not _below_submartingale(model, K):
        warnings.warn("model lacks unit steps with non-negative drift below K; "
                      "the 1/K bound is not claimed for it", stacklevel=2)
        asserted, note = False, "submartingale-below-K condition not met"
    return report("hit_zero_per_excursion", 1.0 / K, f, se, n, asserted=asserted, note=note)


@dataclass(frozen=True)
class EpsilonK:
    epsilon: float
    K: int

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.K < 1:
            raise ValueError("K must be >= 1")

    @property
    def p(self) -> float:
        """Upper bound on the chance that a below-K excursion ends by returning to K."""
        return 1.0 - self.epsilon ** (self.K - 1)


def check_excursion_geometry(ensemble: EnsembleSummary, epsK: EpsilonK, k_max: int = 5,
                             model: Optional[Model] = None):
    """Tail of the number of above-K excursions against ``p**k``, plus the mean
    number of below-K excursions against ``K``.

    Censored replicates are counted as reaching every ``k``.
    """
    model = model or ensemble.model
    reps = ensemble.reps
    out = []
    for k in range(1, k_max + 1):
        hits = sum(c for a, c in ensemble.above_count_extinct.items() if a >= k)
        hits += ensemble.n_censored
        f, se = binomial(hits, reps)
        out.append(report(f"above_excursions_ge_{k}", epsK.p ** k, f, se, reps))
    mean, se = ensemble.below_count_stats()
    n = ensemble.n_extinct
    asserted = (model is not None and _below_submartingale(model, epsK.K)
                and ensemble.z0 >= epsK.K - 1 and epsK.K == ensemble.K)
    note = "" if asserted else "needs unit steps, drift >= 0 below K and z0 >= K-1"
    out.append(report("mean_below_excursions", epsK.K, mean, se, n, "lower",
                      asserted=asserted, note=note))
    return out


def check_return_time(ensemble: EnsembleSummary, K: int, delta: float, c_max: int = 1,
                      model: Optional[Model] = None):
    """Mean above-K excursion length against ``E[(Z_mu - K + c_max) / delta]``.

    The drift bound ``-delta`` above K and the downward jump bound ``c_max``
    are checked analytically when the model is available.
    """
    model = model or ensemble.model
    n = ensemble.n_above_completed
    mean, se = ensemble.above_duration_stats()
    foster = (sum(c * (s - K + c_max) for s, c in ensemble.above_start.items()) / (n * delta)
              if n else math.nan)
    asserted, note = True, ""
    ok = model is not None and model.state_summary == "size"
    if ok:
        zs = range(K, model.z_max + 1)
        ok = all(conditional_law(model, z).mean() <= -delta + EXACT_ATOL for z in zs) and \
            all(conditional_law(model, z).changes[0] >= -c_max for z in zs)
    if not ok:
        warnings.warn(f"cannot verify drift <= -{delta} and jumps >= -{c_max} above K",
                      stacklevel=2)
        asserted, note = False, "drift/jump condition unverified"
    return [
        report("above_duration_mean", foster, mean, se, n, asserted=asserted, note=note),
        report("above_duration_vs_K_over_delta", K / delta, mean, se, n, asserted=False,
               note="read as the mean length of one above-K excursion"),
    ]


# ---------------------------------------------------------------------------
# capacity scan


@dataclass
class ScalingRow:
    K: int
    mean_time: float
    stderr: float
    n_extinct: int
    n_censored: int
    oracle_mean: float


@dataclass
class ScalingTable:
    rows: list = field(default_factory=list)
    slope: float = math.nan  # of log(mean time) against K
    intercept: float = math.nan
    exponential: Optional[bool] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(("K", "mean_time", "stderr", "n_extinct", "n_censored", "oracle_mean"))
        for r in self.rows:
            w.writerow((r.K, repr(r.mean_time), repr(r.stderr), r.n_extinct, r.n_censored,
                        repr(r.oracle_mean)))
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "slope": self.slope,
                "intercept": self.intercept, "exponential": self.exponential}


def _family_model(family, K) -> Model:
    if isinstance(family, ModelSpec):
        return build_model(family.with_K(K))
    got = family(K)
    return got if isinstance(got, Model) else build_model(got)


def fit_growth(Ks, means):
    """Slope/intercept of log-mean against K and whether that beats a power law.

    Returns ``(slope, intercept, exponential)``; ``exponential`` is None with
    fewer than three points.
    """
    Ks = np.asarray(Ks, dtype=float)
    y = np.log(np.asarray(means, dtype=float))
    slope, intercept = np.polyfit(Ks, y, 1)
    if len(Ks) < 3:
        return float(slope), float(intercept), None
    sse_exp = float(np.sum((np.polyval((slope, intercept), Ks) - y) ** 2))
    pk = np.polyfit(np.log(Ks), y, 1)
    sse_pow = float(np.sum((np.polyval(pk, np.log(Ks)) - y) ** 2))
    return float(slope), float(intercept), bool(slope > 0 and sse_exp < sse_pow)


def scan_capacity(family: Union[ModelSpec, Callable], K_list, reps: int, budget: int, seed: int,
                  z0: Optional[Callable] = None, parallelism: int = 1,
                  oracle_margin: int = 200) -> ScalingTable:
    """Mean extinction time over a range of capacities.

    ``family`` is a spec template (its ``K`` is replaced) or a callable
    ``K -> ModelSpec | Model``. The start is ``K - 1`` unless ``z0(K)`` is
    given. Each row carries the exact mean from :func:`exact_absorption`
    when the truncated chain is tight, else NaN.
    """
    table = ScalingTable()
    for K in K_list:
        model = _family_model(family, K)
        start = K - 1 if z0 is None else z0(K)
        summ = run_ensemble(model, EnsembleConfig(reps=reps, step_budget=budget,
                                                  master_seed=seed, parallelism=parallelism,
                                                  z0=start))
        mean, se = summ.extinction_time
        try:
            exact = float(exact_absorption(model, K + oracle_margin).expected_absorption_time[start])
        except (OracleError, ModelError):
            exact = math.nan
        table.rows.append(ScalingRow(K, mean, se, summ.n_extinct, summ.n_censored, exact))
    if len(table.rows) >= 2:
        table.slope, table.intercept, table.exponential = fit_growth(
            [r.K for r in table.rows], [r.mean_time for r in table.rows])
    return table
