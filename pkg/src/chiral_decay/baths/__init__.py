"""Exact microscopic baths used to validate the effective model."""

from .floquet import FloquetCycle, bath_cycle_operator, floquet_cycle_evolve, floquet_effective
from .hofstadter import Attachment, harper_bulk_bands, harper_edge_modes, hofstadter_evolve
from .integrate import ExactRun, LatticeState
from .metacrystal import Hoppings, metacrystal_evolve, metacrystal_hoppings

__all__ = [
    "Attachment",
    "ExactRun",
    "FloquetCycle",
    "Hoppings",
    "LatticeState",
    "bath_cycle_operator",
    "floquet_cycle_evolve",
    "floquet_effective",
    "harper_bulk_bands",
    "harper_edge_modes",
    "hofstadter_evolve",
    "metacrystal_evolve",
    "metacrystal_hoppings",
]
