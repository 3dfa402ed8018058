"""Semiclassical propagation of Wigner functions by the flow of chord tips."""

__version__ = "0.1.0"

from .dynamics import HamiltonianModel, TrajectorySegment, flow, get_model, wedge
from .errors import (
    CausticError,
    ChordflowError,
    ConfigError,
    DegenerateCenterError,
    DomainError,
    IntegrationError,
    PreconditionError,
    RootFindError,
    TruncationError,
)
from .leaf import Chord, Leaf, chord_area, find_chords, make_circle_leaf
from .propagation import leaf_evolution_engine, liouville_value, propagate_point, tips_flow
from .quartic import QuarticChordSpec, quartic_delta_S, quartic_new_center
from .wigner import evaluate

__all__ = [
    "CausticError",
    "Chord",
    "ChordflowError",
    "ConfigError",
    "DegenerateCenterError",
    "DomainError",
    "HamiltonianModel",
    "IntegrationError",
    "Leaf",
    "PreconditionError",
    "QuarticChordSpec",
    "RootFindError",
    "TrajectorySegment",
    "TruncationError",
    "chord_area",
    "evaluate",
    "find_chords",
    "flow",
    "get_model",
    "leaf_evolution_engine",
    "liouville_value",
    "make_circle_leaf",
    "propagate_point",
    "quartic_delta_S",
    "quartic_new_center",
    "tips_flow",
    "wedge",
]
