"""Exact first-step analysis for size-only Markov models.

The chain is truncated to ``{0, ..., state_cap}``; mass that would leave the
box is folded into a single death step. Alongside the absorption
probabilities and mean absorption times we solve for the probability of
ever hitting the fold, which bounds how far the truncated answers can be
from those of the untruncated chain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Model, conditional_law

MAX_STATES = 10_000


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    """Per-state results for sizes ``0..state_cap`` (index = size)."""

    extinction_probability: np.ndarray
    expected_absorption_time: np.ndarray
    tail_mass: np.ndarray

    @property
    def state_cap(self) -> int:
        return len(self.extinction_probability) - 1

    def rows(self):
        for z in range(self.state_cap + 1):
            yield (z, float(self.extinction_probability[z]),
                   float(self.expected_absorption_time[z]), float(self.tail_mass[z]))


def exact_absorption(model: Model, state_cap: int, tol: float = 1e-12,
                     strict: bool = True, check_upto: int | None = None) -> ExactSolution:
    """Solve the first-step equations on sizes ``0..state_cap``.

    With ``strict`` the probability of ever reaching the fold from any start
    ``1 <= z <= check_upto`` (default ``min(K, state_cap)``) must stay below
    ``tol``; otherwise :class:`OracleError` is raised. ``strict=False``
    treats the folded chain as the object of interest.
    """
    if model.state_summary != "size":
        raise OracleError("exact_absorption needs a size-only Markov model")
    if state_cap < 1:
        raise OracleError("state_cap must be >= 1")
    if state_cap + 1 > MAX_STATES:
        raise OracleError(f"{state_cap + 1} states exceed the dense-solve limit {MAX_STATES}")

    n = state_cap
    Q = np.zeros((n, n))  # transient sizes 1..n at rows/cols 0..n-1
    rhs = np.zeros((n, 3))  # columns: one-step absorption, unit time, fold
    rhs[:, 1] = 1.0
    for z in range(1, n + 1):
        pmf = conditional_law(model, z)
        for c, p in zip(pmf.changes, pmf.probs):
            t = z + c
            if t > n:
                rhs[z - 1, 2] += p
                t = z - 1
            if t == 0:
                rhs[z - 1, 0] += p
            else:
                Q[z - 1, t - 1] += p
    A = np.eye(n) - Q
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"first-step system is singular: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise OracleError("first-step system is numerically singular")

    prob = np.concatenate(([1.0], np.clip(sol[:, 0], 0.0, 1.0)))
    time = np.concatenate(([0.0], np.maximum(sol[:, 1], 0.0)))
    tail = np.concatenate(([0.0], np.clip(sol[:, 2], 0.0, 1.0)))
    if strict:
        upto = min(model.K if check_upto is None else check_upto, n)
        worst = tail[1: upto + 1].max()
        if worst >= tol:
            raise OracleError(
                f"state space not effectively bounded: escape mass {worst:.3g} >= {tol:g} "
                f"beyond cap {state_cap}"
            )
    return ExactSolution(prob, time, tail)


def gamblers_ruin_up(i: int, lo: int, hi: int, p_up: float = 0.5) -> float:
    """P(±1 walk from ``i`` hits ``hi`` before ``lo``) with up-probability ``p_up``."""
    if not lo <= i <= hi or lo == hi:
        raise ValueError("need lo <= i <= hi and lo < hi")
    if p_up == 0.5:
        return (i - lo) / (hi - lo)
    r = (1.0 - p_up) / p_up
    return (1.0 - r ** (i - lo)) / (1.0 - r ** (hi - lo))
