"""Stopping-time skeleton of a trace relative to the capacity ``K``.

``nu[k]`` is the index of the (k+1)-th entry below ``K`` and ``mu[k]`` the
index of the following return to ``K`` or above. Below-K excursions occupy
``[nu[k], mu[k])`` and above-K excursions ``[mu[k], nu[k+1])``. When the
trace starts at or above ``K`` the stretch before ``nu[0]`` is an initial
segment, not an above-K excursion. All indices are 0-based.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .process import EXTINCT, Trace


@dataclass(frozen=True)
class ExcursionDecomposition:
    nu: tuple
    mu: tuple
    z_at_nu: tuple
    censored_tail: bool
    length: int  # number of indices in the trace

    def segments(self):
        """``(start, stop, below)`` triples tiling ``range(length)``."""
        out = []
        if not self.nu:
            if self.length:
                out.append((0, self.length, False))
            return out
        if self.nu[0] > 0:
            out.append((0, self.nu[0], False))
        bounds = sorted(self.nu + self.mu) + [self.length]
        below = set(self.nu)
        for a, b in zip(bounds[:-1], bounds[1:]):
            out.append((a, b, a in below))
        return out

    def to_record(self) -> dict:
        return {"nu": list(self.nu), "mu": list(self.mu), "censored": self.censored_tail}

    def to_json(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


@dataclass
class ExcursionStats:
    n_below_excursions: int
    n_above_excursions: int
    above_durations: list = field(default_factory=list)
    above_maxima: list = field(default_factory=list)
    above_starts: list = field(default_factory=list)
    # (start size, ended in extinction) for every completed below-K excursion
    below_outcomes: list = field(default_factory=list)
    extinct_in_excursion: Optional[int] = None


def _sizes(trace):
    return np.asarray(trace.sizes if isinstance(trace, Trace) else trace, dtype=np.int64)


def decompose(trace, K: int) -> ExcursionDecomposition:
    """Excursion indices of ``trace`` (a :class:`Trace` or a size sequence)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    z = _sizes(trace)
    below = z < K
    entering = below.copy()
    entering[1:] &= ~below[:-1]
    leaving = ~below
    leaving[0] = False
    leaving[1:] &= below[:-1]
    nu = tuple(int(i) for i in np.flatnonzero(entering))
    mu = tuple(int(i) for i in np.flatnonzero(leaving))
    extinct = isinstance(trace, Trace) and trace.status == EXTINCT or (len(z) and z[-1] == 0)
    return ExcursionDecomposition(
        nu=nu,
        mu=mu,
        z_at_nu=tuple(int(z[i]) for i in nu),
        censored_tail=not extinct,
        length=len(z),
    )


def excursion_stats(trace, K: int) -> ExcursionStats:
    """Counts, durations and maxima of the excursions of ``trace``.

    Every started excursion is counted; the incomplete tail of a censored
    trace is left out of durations, maxima and outcomes.
    """
    z = _sizes(trace)
    d = decompose(trace, K)
    stats = ExcursionStats(len(d.nu), len(d.mu))
    for k, m in enumerate(d.mu):
        if k + 1 < len(d.nu):
            end = d.nu[k + 1]
            stats.above_durations.append(end - m)
            stats.above_maxima.append(int(z[m:end].max()))
            stats.above_starts.append(int(z[m]))
    for k, n in enumerate(d.nu):
        if k < len(d.mu):
            stats.below_outcomes.append((int(z[n]), False))
        elif not d.censored_tail:
            stats.below_outcomes.append((int(z[n]), True))
            stats.extinct_in_excursion = k
    return stats
