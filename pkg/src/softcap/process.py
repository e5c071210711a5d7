"""Population-size process: step semantics and reference trace generation."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .models import Model, conditional_law
from .rng import RngState, uniform

EXTINCT = "extinct"
CENSORED = "censored"


class AbsorbedError(ValueError):
    """A change was requested for an empty (extinct) population."""


@dataclass(frozen=True)
class Trace:
    sizes: tuple
    status: str
    steps_used: int

    def __post_init__(self):
        if not self.sizes:
            raise ValueError("trace needs at least the initial size")
        if self.status not in (EXTINCT, CENSORED):
            raise ValueError(f"bad status {self.status!r}")
        if len(self.sizes) != self.steps_used + 1:
            raise ValueError("len(sizes) must equal steps_used + 1")
        if (self.status == EXTINCT) != (self.sizes[-1] == 0):
            raise ValueError("status must be 'extinct' exactly when the last size is 0")

    @property
    def z0(self) -> int:
        return self.sizes[0]

    @property
    def final(self) -> int:
        return self.sizes[-1]

    def to_record(self, include_sizes: bool = False) -> dict:
        rec = {"z0": self.z0}
        if include_sizes:
            rec["sizes"] = list(self.sizes)
        rec.update(status=self.status, steps=self.steps_used, final=self.final)
        return rec

    def to_json(self, include_sizes: bool = False) -> str:
        return json.dumps(self.to_record(include_sizes), separators=(",", ":"))


def apply_change(z: int, c: int) -> int:
    if z == 0:
        raise AbsorbedError("size 0 is absorbing; no further changes")
    if z < 0:
        raise ValueError(f"population size must be non-negative, got {z}")
    if c == 0:
        raise ValueError("changes must be nonzero")
    if z + c < 0:
        raise ValueError(f"change {c} at size {z} would go negative")
    return z + c


def sample_change(pmf, rng: RngState):
    """Draw from ``pmf``; a single-atom law consumes no randomness."""
    if pmf.degenerate:
        return pmf.changes[0], rng
    u, rng = uniform(rng)
    return pmf.pick(u), rng


def step(model: Model, history, rng: RngState):
    """Sample the next change given ``history`` (a Trace or a size sequence)."""
    sizes = history.sizes if isinstance(history, Trace) else history
    if len(sizes) == 0:
        raise ValueError("empty history")
    if sizes[-1] == 0:
        raise AbsorbedError("history is already absorbed at 0")
    z, visit = model.state_of(sizes)
    return sample_change(conditional_law(model, z, visit), rng)


def simulate(model: Model, z0: int, step_budget: int, rng: RngState) -> Trace:
    """Run the process from ``z0`` until extinction or ``step_budget`` changes.

    This is the reference path: it works for any :class:`Model` and calls the
    law once per step. :mod:`softcap.engine` runs the cataloged models through
    compiled kernels that draw identically.
    """
    if step_budget < 0:
        raise ValueError("step_budget must be >= 0")
    if z0 < 0:
        raise ValueError("z0 must be >= 0")
    sizes = [int(z0)]
    ones = 1 if z0 == 1 else 0  # visits to size 1 so far, current one included
    summary = model.state_summary
    n = 0
    while sizes[-1] > 0 and n < step_budget:
        z = sizes[-1]
        if summary == "size":
            pmf = conditional_law(model, z)
        elif summary == "size_and_visits":
            pmf = conditional_law(model, z, max(ones, 1))
        else:
            pmf = conditional_law(model, *model.state_of(sizes))
        c, rng = sample_change(pmf, rng)
        z = apply_change(z, c)
        sizes.append(z)
        ones += z == 1
        n += 1
    status = EXTINCT if sizes[-1] == 0 else CENSORED
    return Trace(tuple(sizes), status, n)
