"""Reproducible ensemble execution.

Replicate ``i`` always draws from ``derive_stream(master_seed, i)``.
Replicates are cut into fixed-size chunks independent of the thread count;
every chunk reduces to exact integer counters and histograms, and chunk
results are merged in index order. The summary is therefore bit-identical
for any parallelism.
"""
from __future__ import annotations

import json
import logging
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .excursions import excursion_stats
from .models import Model
from .process import CENSORED, EXTINCT, Trace, simulate
from .rng import derive_stream

__all__ = ["EnsembleConfig", "EnsembleSummary", "run_ensemble", "derive_stream"]

log = logging.getLogger(__name__)

CHUNK = 256
THREADS_ENV = "SOFTCAP_SIM_THREADS"


@dataclass(frozen=True)
class EnsembleConfig:
    reps: int
    step_budget: int
    master_seed: int = 0
    parallelism: int = 1
    record_full_traces: bool = False
    K: Optional[int] = None  # level for the excursion bookkeeping; defaults to the model's K
    z0: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.step_budget < 0:
            raise ValueError("step_budget must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be >= 1")
        if self.z0 < 0:
            raise ValueError("z0 must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown ensemble keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _merge(into: Counter, other) -> None:
    for k, v in other.items():
        into[int(k)] += int(v)


def _sorted(c: Counter) -> dict:
    return {k: c[k] for k in sorted(c)}


def _mean_stderr(n: int, s: int, ss: int):
    """Mean and standard error from exact sums (``nan`` where undefined)."""
    if n == 0:
        return math.nan, math.nan
    mean = Fraction(s, n)
    if n == 1:
        return float(mean), math.nan
    var = (Fraction(ss) - Fraction(s * s, n)) / (n - 1)
    return float(mean), math.sqrt(float(var) / n)


@dataclass
class EnsembleSummary:
    """Exact aggregate of an ensemble.

    Histograms map a value to its count. ``above_*`` histograms cover
    completed above-K excursions; ``below_started`` / ``below_extinct`` are
    keyed by the size at which a completed below-K excursion began.
    ``below_count_extinct`` / ``above_count_extinct`` histogram the number of
    excursions per extinct replicate; ``above_count_censored`` does the same
    for censored replicates.
    """

    reps: int
    K: int
    z0: int
    step_budget: int
    n_extinct: int = 0
    n_censored: int = 0
    time_sum: int = 0
    time_sumsq: int = 0
    above_max: Counter = field(default_factory=Counter)
    above_start: Counter = field(default_factory=Counter)
    above_duration: Counter = field(default_factory=Counter)
    below_started: Counter = field(default_factory=Counter)
    below_extinct: Counter = field(default_factory=Counter)
    below_count_extinct: Counter = field(default_factory=Counter)
    above_count_extinct: Counter = field(default_factory=Counter)
    above_count_censored: Counter = field(default_factory=Counter)
    failures: list = field(default_factory=list)
    model: Optional[Model] = field(default=None, repr=False, compare=False)
    traces: Optional[list] = field(default=None, repr=False, compare=False)
    records: Optional[list] = field(default=None, repr=False, compare=False)

    @property
    def extinction_frequency(self) -> float:
        return self.n_extinct / self.reps

    @property
    def extinction_time(self):
        """``(mean, stderr)`` of the extinction step over extinct replicates."""
        return _mean_stderr(self.n_extinct, self.time_sum, self.time_sumsq)

    @property
    def n_above_completed(self) -> int:
        return sum(self.above_duration.values())

    def above_duration_stats(self):
        n = self.n_above_completed
        s = sum(d * c for d, c in self.above_duration.items())
        ss = sum(d * d * c for d, c in self.above_duration.items())
        return _mean_stderr(n, s, ss)

    def below_count_stats(self):
        n = sum(self.below_count_extinct.values())
        s = sum(k * c for k, c in self.below_count_extinct.items())
        ss = sum(k * k * c for k, c in self.below_count_extinct.items())
        return _mean_stderr(n, s, ss)

    def to_dict(self) -> dict:
        t_mean, t_se = self.extinction_time
        b_mean, b_se = self.below_count_stats()
        d_mean, d_se = self.above_duration_stats()
        hist = lambda c: {str(k): v for k, v in _sorted(c).items()}  # noqa: E731
        out = {
            "reps": self.reps,
            "K": self.K,
            "z0": self.z0,
            "step_budget": self.step_budget,
            "n_extinct": self.n_extinct,
            "n_censored": self.n_censored,
            "extinction_frequency": self.extinction_frequency,
            "extinction_frequency_stderr": _binomial_se(self.n_extinct, self.reps),
            "extinction_time_mean": t_mean,
            "extinction_time_stderr": t_se,
            "time_sum": self.time_sum,
            "time_sumsq": self.time_sumsq,
            "below_excursions_mean": b_mean,
            "below_excursions_stderr": b_se,
            "above_duration_mean": d_mean,
            "above_duration_stderr": d_se,
            "above_max": hist(self.above_max),
            "above_start": hist(self.above_start),
            "above_duration": hist(self.above_duration),
            "below_started": hist(self.below_started),
            "below_extinct": hist(self.below_extinct),
            "below_count_extinct": hist(self.below_count_extinct),
            "above_count_extinct": hist(self.above_count_extinct),
            "above_count_censored": hist(self.above_count_censored),
            "failures": self.failures,
        }
        if self.model is not None:
            out["model"] = self.model.spec.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=True)

    def merge(self, part: "EnsembleSummary") -> None:
        self.n_extinct += part.n_extinct
        self.n_censored += part.n_censored
        self.time_sum += part.time_sum
        self.time_sumsq += part.time_sumsq
        for name in ("above_max", "above_start", "above_duration", "below_started",
                     "below_extinct", "below_count_extinct", "above_count_extinct",
                     "above_count_censored"):
            _merge(getattr(self, name), getattr(part, name))
        self.failures.extend(part.failures)

    def __eq__(self, other):
        # canonical JSON: NaN-safe and covers every aggregate
        if not isinstance(other, EnsembleSummary):
            return NotImplemented
        return self.to_json() == other.to_json()


def _binomial_se(k: int, n: int) -> float:
    p = k / n
    return math.sqrt(p * (1 - p) / n)


def _empty(config: EnsembleConfig, level: int) -> EnsembleSummary:
    return EnsembleSummary(reps=0, K=level, z0=config.z0, step_budget=config.step_budget)


def _chunk_kernel(model, params, config, level, start, stop, want_records):
    m = stop - start
    steps = np.empty(m, dtype=np.int64)
    final = np.empty(m, dtype=np.int64)
    n_below = np.empty(m, dtype=np.int64)
    n_above = np.empty(m, dtype=np.int64)
    seed = np.uint64(config.master_seed)
    hists = _kernels.run_block(
        params.kind, params.K, params.changes, params.cdf, params.single, params.lastpos,
        float(params.decay_base), seed, start, stop,
        config.z0, config.step_budget, level, steps, final, n_below, n_above, False,
    )
    part = _empty(config, level)
    part.reps = m
    for name, h in zip(("above_max", "above_start", "above_duration", "below_started",
                        "below_extinct"), hists):
        _merge(getattr(part, name), h)
    steps, final = steps.tolist(), final.tolist()
    _fold_replicates(part, steps, final, n_below.tolist(), n_above.tolist())
    if config.record_full_traces:
        part.traces = []
        for r in range(start, stop):
            sizes = _kernels.trace_one(params, config.master_seed, r, config.z0,
                                       config.step_budget)
            status = EXTINCT if sizes[-1] == 0 else CENSORED
            part.traces.append(Trace(tuple(sizes.tolist()), status, len(sizes) - 1))
    elif want_records:
        part.records = [_record(config.z0, t, z) for t, z in zip(steps, final)]
    return part


def _record(z0, steps, final):
    return {"z0": z0, "status": EXTINCT if final == 0 else CENSORED, "steps": steps, "final": final}


def _chunk_python(model, config, level, start, stop, want_records):
    part = _empty(config, level)
    part.reps = stop - start
    steps, final, nb, na = [], [], [], []
    traces = []
    for r in range(start, stop):
        try:
            tr = simulate(model, config.z0, config.step_budget, derive_stream(config.master_seed, r))
        except Exception as exc:  # one bad replicate must not sink the ensemble
            log.warning("replicate %d failed: %s", r, exc)
            part.failures.append({"replicate": r, "error": str(exc)})
            part.n_censored += 1
            continue
        st = excursion_stats(tr, level)
        for m, s, d in zip(st.above_maxima, st.above_starts, st.above_durations):
            part.above_max[m] += 1
            part.above_start[s] += 1
            part.above_duration[d] += 1
        for s, dead in st.below_outcomes:
            part.below_started[s] += 1
            if dead:
                part.below_extinct[s] += 1
        steps.append(tr.steps_used)
        final.append(tr.final)
        nb.append(st.n_below_excursions)
        na.append(st.n_above_excursions)
        traces.append(tr)
    _fold_replicates(part, steps, final, nb, na)
    if config.record_full_traces:
        part.traces = traces
    elif want_records:
        part.records = [tr.to_record() for tr in traces]
    return part


def _fold_replicates(part, steps, final, n_below, n_above):
    for t, z, b, a in zip(steps, final, n_below, n_above):
        if z == 0:
            part.n_extinct += 1
            part.time_sum += t
            part.time_sumsq += t * t
            part.below_count_extinct[b] += 1
            part.above_count_extinct[a] += 1
        else:
            part.n_censored += 1
            part.above_count_censored[a] += 1


def default_parallelism() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_ensemble(model: Model, config: EnsembleConfig, trace_file=None,
                 force_python: bool = False) -> EnsembleSummary:
    """Simulate ``config.reps`` replicates of ``model`` and aggregate them.

    Cataloged models run through compiled kernels; other models (or
    ``force_python=True``) go through :func:`softcap.process.simulate`.
    ``trace_file`` (a path or a text stream) receives one JSON line per
    replicate in replicate order, with the size path only when
    ``config.record_full_traces`` is set. Without a file, full traces are
    kept on ``summary.traces`` when recording is on.
    """
    level = config.K if config.K is not None else model.K
    params = None if force_python else model.kernel_params()
    bounds = [(s, min(s + CHUNK, config.reps)) for s in range(0, config.reps, CHUNK)]
    want_records = trace_file is not None

    if params is not None:
        def work(b):
            return _chunk_kernel(model, params, config, level, *b, want_records)
    else:
        def work(b):
            return _chunk_python(model, config, level, *b, want_records)

    total = _empty(config, level)
    total.reps = config.reps
    total.model = model
    sink = trace_file
    close = False
    if trace_file is not None and not hasattr(trace_file, "write"):
        sink = open(trace_file, "w", encoding="utf-8")
        close = True
    try:
        if config.parallelism == 1:
            for part in map(work, bounds):
                _consume(total, part, sink, config)
        else:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                for part in pool.map(work, bounds):  # yields in submission order
                    _consume(total, part, sink, config)
    finally:
        if close:
            sink.close()
    return total


def _consume(total, part, sink, config):
    traces, records = part.traces, part.records
    part.traces = part.records = None
    total.merge(part)
    if sink is None:
        if traces is not None:
            if total.traces is None:
                total.traces = []
            total.traces.extend(traces)
        return
    if traces is not None:
        records = [t.to_record(include_sizes=True) for t in traces]
    sink.write("".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records))
