"""Simulation and verification toolkit for stepwise-changing populations
under a soft carrying capacity."""
from .engine import EnsembleConfig, EnsembleSummary, run_ensemble
from .excursions import ExcursionDecomposition, ExcursionStats, decompose, excursion_stats
from .models import (
    ChangePMF,
    Model,
    ModelError,
    ModelSpec,
    build_model,
    conditional_law,
    drift,
)
from .oracle import ExactSolution, OracleError, exact_absorption, gamblers_ruin_up
from .process import AbsorbedError, Trace, apply_change, simulate, step
from .rng import RngState, derive_stream, uniform
from .verify import (
    BoundReport,
    EpsilonK,
    ScalingTable,
    check_assumptions,
    check_doob_above,
    check_excursion_geometry,
    check_hit_zero,
    check_return_time,
    estimate_extinction,
    scan_capacity,
)

__version__ = "0.1.0"
