"""Multilevel decay into chiral (unidirectional) continua."""

from .dynamics import DecayTrace, bloch_scenario, propagate, quiescence_time, sigma_max_curve
from .manybody import StatisticsKind, chiral_decay_rate, nondecay_probability
from .model import (
    ChiralLinear,
    CosineBand,
    EffectiveHamiltonian,
    FloquetSawtooth,
    Level,
    LevelChain,
    TabulatedChiral,
    build_bidirectional,
    build_unidirectional,
    delta_numeric,
    find_bound_states,
    solve_resonance,
)

__version__ = "0.1.0"

__all__ = [
    "ChiralLinear",
    "CosineBand",
    "DecayTrace",
    "EffectiveHamiltonian",
    "FloquetSawtooth",
    "Level",
    "LevelChain",
    "StatisticsKind",
    "TabulatedChiral",
    "bloch_scenario",
    "build_bidirectional",
    "build_unidirectional",
    "chiral_decay_rate",
    "delta_numeric",
    "find_bound_states",
    "nondecay_probability",
    "propagate",
    "quiescence_time",
    "sigma_max_curve",
    "solve_resonance",
]
