"""Stay-or-switch game between a secondary network and a jamming network
sharing primary-licensed bands, with estimation, equilibrium, simulation
and verification tools."""

from .core_model import BASELINE, FullCensus, GameParams, MarkovParams
from .equilibrium import compute_equilibrium
from .estimation import MaliciousObservation, SecondaryObservation, expected_census, observe

__all__ = [
    "BASELINE", "FullCensus", "GameParams", "MarkovParams", "compute_equilibrium",
    "MaliciousObservation", "SecondaryObservation", "expected_census", "observe",
]
