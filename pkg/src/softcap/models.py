"""Change laws for populations under a soft carrying capacity.

A model maps the observable state of the history (the current size, and
for the counterexample also how many times size 1 has been visited) to an
exact finite probability mass function over nonzero integer changes.

The catalog (ratio birth-death, biased and symmetric walks, a Moran-type
toy, a cell-cycle model and a counterexample with decaying death risk) is
our own construction. None of these laws is prescribed by the theory; they
are concrete instances of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from itertools import accumulate
from typing import Optional

import numpy as np

from ._kernels import KIND_COUNTEREXAMPLE, KIND_RATIO, KIND_TABLE

KINDS = (
    "ratio_birth_death",
    "biased_walk",
    "moran_toy",
    "cell_cycle",
    "symmetric_walk",
    "counterexample",
)

PMF_ATOL = 1e-12
DRIFT_ATOL = 1e-12


class ModelError(ValueError):
    """Invalid model specification or state."""


@dataclass(frozen=True)
class ChangePMF:
    """Finite law of a nonzero integer change.

    Support is kept sorted by change with zero-probability atoms dropped, so
    equal laws have equal representations and sample identically.
    """

    changes: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.changes) != len(self.probs) or not self.changes:
            raise ModelError("changes and probs must be non-empty and of equal length")
        if any(c == 0 for c in self.changes):
            raise ModelError("changes must be nonzero")
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise ModelError(f"probabilities must lie in [0, 1]: {self.probs}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PMF_ATOL:
            raise ModelError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_pairs(cls, pairs) -> "ChangePMF":
        """Build from ``{change: prob}`` or an iterable of ``(change, prob)``."""
        items = pairs.items() if isinstance(pairs, dict) else pairs
        acc: dict[int, float] = {}
        for c, p in items:
            c = int(c)
            acc[c] = acc.get(c, 0.0) + float(p)
        kept = sorted((c, p) for c, p in acc.items() if p > 0.0)
        if not kept:
            raise ModelError("law has no positive mass")
        return cls(tuple(c for c, _ in kept), tuple(p for _, p in kept))

    def as_dict(self) -> dict:
        return dict(zip(self.changes, self.probs))

    def prob(self, change: int) -> float:
        return self.as_dict().get(change, 0.0)

    def mean(self) -> float:
        return math.fsum(c * p for c, p in zip(self.changes, self.probs))

    def cdf(self) -> list:
        # left-to-right float accumulation; the sampling kernels repeat it exactly
        return list(accumulate(self.probs))

    @property
    def degenerate(self) -> bool:
        return len(self.changes) == 1

    def pick(self, u: float) -> int:
        """Inverse-CDF selection: first atom whose cumulative mass exceeds ``u``."""
        cdf = self.cdf()
        for c, f in zip(self.changes, cdf):
            if u < f:
                return c
        return self.changes[-1]


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a cataloged model.

    Parameters that do not apply to ``kind`` must be left at ``None``.
    ``offspring_pmf`` is a list of ``[count, prob]`` pairs (count != 1);
    ``offspring_pmf_below`` optionally overrides it for sizes below ``K``.
    ``p_die`` is a scalar or a list indexed by size 1, 2, ...; the last entry
    extends to all larger sizes.
    """

    kind: str
    K: int
    delta: Optional[float] = None
    offspring_pmf: Optional[tuple] = None
    offspring_pmf_below: Optional[tuple] = None
    p_die: Optional[object] = None
    decay_base: Optional[float] = None
    z_max: Optional[int] = None

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ModelError(f"unknown model keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("offspring_pmf", "offspring_pmf_below"):
            if data.get(key) is not None:
                data[key] = tuple(tuple(pair) for pair in data[key])
        if isinstance(data.get("p_die"), list):
            data["p_die"] = tuple(data["p_die"])
        return cls(**data)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out

    def with_K(self, K: int) -> "ModelSpec":
        d = self.to_dict()
        d["K"] = K
        d.pop("z_max", None)
        return ModelSpec.from_dict(d)


class Model:
    """A conditional change law.

    ``state_summary`` says what the law reads from the history: ``"size"``,
    ``"size_and_visits"`` (size plus the number of visits to size 1) or
    ``"history"`` (anything; :meth:`state_of` is then called on the full size
    sequence). Subclasses override :meth:`law`; cataloged models are built
    by :func:`build_model`.
    """

    state_summary = "size"

    def __init__(self, spec: ModelSpec, epsilon: Optional[float]):
        self.spec = spec
        self.K = spec.K
        self.epsilon = epsilon
        self.z_max = spec.z_max if spec.z_max is not None else 4 * spec.K

    def __repr__(self):
        return f"{type(self).__name__}({self.spec!r})"

    def law(self, z: int, visit: int = 1) -> ChangePMF:
        raise NotImplementedError

    def state_of(self, sizes) -> tuple:
        """``(size, visit)`` seen by the law after history ``sizes``."""
        return int(sizes[-1]), 1

    # kernel description: None means "no compiled fast path"
    def kernel_params(self):
        return None


def _law_checked(model: Model, z: int, visit: int) -> ChangePMF:
    if z <= 0:
        raise ModelError("absorbed state (size 0) has no change law")
    pmf = model.law(z, visit)
    if z + pmf.changes[0] < 0:
        raise ModelError(f"law at size {z} allows change {pmf.changes[0]} below zero")
    return pmf


def conditional_law(model: Model, z: int, visit: int = 1) -> ChangePMF:
    """Exact law of the next change at size ``z`` (``visit`` = visits to size 1)."""
    return _law_checked(model, int(z), int(visit))


def drift(model: Model, z: int, visit: int = 1) -> float:
    """Conditional mean of the next change."""
    return conditional_law(model, z, visit).mean()


# ---------------------------------------------------------------------------
# catalog


class RatioBirthDeath(Model):
    def law(self, z, visit=1):
        K = self.K
        return ChangePMF.from_pairs({-1: z / (z + K), 1: K / (z + K)})

    def kernel_params(self):
        return _KernelParams(kind=KIND_RATIO, K=self.K)


class TableModel(Model):
    """Size-only model whose law is constant for sizes at or above ``z_table``."""

    def __init__(self, spec, epsilon, rows):
        super().__init__(spec, epsilon)
        self._rows = rows  # rows[z - 1] is the law at size z

    @property
    def z_table(self):
        return len(self._rows)

    def law(self, z, visit=1):
        return self._rows[min(z, self.z_table) - 1]

    def kernel_params(self):
        support = sorted({c for row in self._rows for c in row.changes})
        col = {c: i for i, c in enumerate(support)}
        probs = np.zeros((self.z_table + 1, len(support)))
        for z, row in enumerate(self._rows, start=1):
            for c, p in zip(row.changes, row.probs):
                probs[z, col[c]] = p
        cdf = np.zeros_like(probs)
        for z in range(1, self.z_table + 1):
            cdf[z] = list(accumulate(probs[z].tolist()))
        nonzero = (probs > 0).sum(axis=1)
        single = np.zeros(self.z_table + 1, dtype=np.int64)
        lastpos = np.zeros(self.z_table + 1, dtype=np.int64)
        for z in range(1, self.z_table + 1):
            pos = np.flatnonzero(probs[z])
            lastpos[z] = pos[-1]
            if nonzero[z] == 1:
                single[z] = support[int(pos[0])]
        return _KernelParams(
            kind=KIND_TABLE, K=self.K, changes=np.asarray(support, dtype=np.int64),
            cdf=cdf, single=single, lastpos=lastpos,
        )


class Counterexample(Model):
    """Two-state chain whose death risk at size 1 decays with each visit."""

    state_summary = "size_and_visits"

    def __init__(self, spec):
        super().__init__(spec, None)
        self.decay_base = spec.decay_base

    def death_prob(self, visit: int) -> float:
        return self.decay_base ** float(visit + 2)

    def law(self, z, visit=1):
        if z >= 2:
            return ChangePMF.from_pairs({-1: 1.0})
        q = self.death_prob(visit)
        return ChangePMF.from_pairs({-1: q, 1: 1.0 - q})

    def state_of(self, sizes):
        z = int(sizes[-1])
        visit = sum(1 for s in sizes if s == 1)
        return z, max(visit, 1)

    def kernel_params(self):
        return _KernelParams(kind=KIND_COUNTEREXAMPLE, K=self.K, decay_base=self.decay_base)

    def survival_probability(self, terms: int = 60) -> float:
        """Probability of never dying out from size 1, product truncated at ``terms``."""
        return math.prod(1.0 - self.decay_base ** float(j) for j in range(3, terms + 1))


@dataclass
class _KernelParams:
    kind: int
    K: int
    changes: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    cdf: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    single: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    lastpos: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    decay_base: float = 0.5


def _offspring_law(pairs, what) -> ChangePMF:
    law = {}
    for count, prob in pairs:
        count = int(count)
        if count < 0:
            raise ModelError(f"{what}: negative offspring count {count}")
        if count == 1 and prob > 0:
            raise ModelError(f"{what}: q_1 must be 0 (changes are nonzero)")
        if count != 1:
            law[count - 1] = law.get(count - 1, 0.0) + float(prob)
    return ChangePMF.from_pairs(law)


def _p_die_at(p_die, z):
    if isinstance(p_die, (int, float)):
        return float(p_die)
    return float(p_die[min(z, len(p_die)) - 1])


def _require_param(spec, name):
    if getattr(spec, name) is None:
        raise ModelError(f"{spec.kind} requires parameter {name!r}")


def _reject_extras(spec, allowed):
    for f in ("delta", "offspring_pmf", "offspring_pmf_below", "p_die", "decay_base"):
        if f not in allowed and getattr(spec, f) is not None:
            raise ModelError(f"parameter {f!r} does not apply to {spec.kind}")


def build_model(spec: ModelSpec) -> Model:
    """Validate ``spec`` and return the corresponding model.

    Raises :class:`ModelError` when the law is malformed or its drift is
    positive at some size ``K <= z <= z_max``.
    """
    if isinstance(spec, dict):
        spec = ModelSpec.from_dict(spec)
    if spec.kind not in KINDS:
        raise ModelError(f"unknown model kind {spec.kind!r}")
    if not isinstance(spec.K, int) or spec.K < 1:
        raise ModelError(f"K must be a positive integer, got {spec.K!r}")
    if spec.z_max is not None and spec.z_max < spec.K:
        raise ModelError("z_max must be at least K")
    K = spec.K
    kind = spec.kind

    if kind == "ratio_birth_death":
        _reject_extras(spec, ())
        model = RatioBirthDeath(spec, 1.0 / (1 + K))
    elif kind == "biased_walk":
        _reject_extras(spec, ("delta",))
        _require_param(spec, "delta")
        d = float(spec.delta)
        if not 0.0 < d < 1.0:
            raise ModelError(f"delta must lie in (0, 1), got {d}")
        up = ChangePMF.from_pairs({1: (1 + d) / 2, -1: (1 - d) / 2})
        down = ChangePMF.from_pairs({1: (1 - d) / 2, -1: (1 + d) / 2})
        rows = [up] * (K - 1) + [down]
        model = TableModel(spec, (1 - d) / 2, rows)
    elif kind == "symmetric_walk":
        _reject_extras(spec, ())
        half = ChangePMF.from_pairs({1: 0.5, -1: 0.5})
        model = TableModel(spec, 0.5, [half] * K)
    elif kind == "cell_cycle":
        _reject_extras(spec, ("p_die",))
        _require_param(spec, "p_die")
        p = spec.p_die
        length = 1 if isinstance(p, (int, float)) else len(p)
        if length == 0:
            raise ModelError("p_die table is empty")
        rows = []
        for z in range(1, max(length, K) + 1):
            pd = _p_die_at(p, z)
            if not 0.0 < pd <= 1.0:
                raise ModelError(f"p_die({z}) = {pd} outside (0, 1]")
            rows.append(ChangePMF.from_pairs({-1: pd, 1: 1.0 - pd}))
        model = TableModel(spec, min(r.prob(-1) for r in rows), rows)
    elif kind == "moran_toy":
        _reject_extras(spec, ("offspring_pmf", "offspring_pmf_below"))
        _require_param(spec, "offspring_pmf")
        above = _offspring_law(spec.offspring_pmf, "offspring_pmf")
        below = above
        if spec.offspring_pmf_below is not None:
            below = _offspring_law(spec.offspring_pmf_below, "offspring_pmf_below")
        rows = [below] * (K - 1) + [above]
        eps = min(r.prob(-1) for r in rows)
        if eps <= 0.0:
            raise ModelError("moran_toy needs q_0 > 0 (a positive death risk)")
        model = TableModel(spec, eps, rows)
    else:  # counterexample
        _reject_extras(spec, ("decay_base",))
        if K != 2:
            raise ModelError("counterexample is defined for K = 2")
        if spec.decay_base is None:
            spec = ModelSpec(kind=kind, K=K, decay_base=0.5, z_max=spec.z_max)
        if not 0.0 < spec.decay_base < 1.0:
            raise ModelError("decay_base must lie in (0, 1)")
        model = Counterexample(spec)

    for z in range(K, model.z_max + 1):
        m = drift(model, z)
        if m > DRIFT_ATOL:
            raise ModelError(
                f"{kind}: drift {m:+.6g} > 0 at size {z} >= K = {K} "
                "(no carrying capacity)"
            )
    return model
