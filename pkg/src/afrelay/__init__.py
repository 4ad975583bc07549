"""Amplify-and-forward relay networks with one-bit feedback per relay.

Simulation, bit selection, long-term power loading, distributed Alamouti and
differential transmission, and error-rate bounds.
"""

from .channel import ChannelRealization, ChannelStats, draw_realization, make_rng, place_relays_geometry
from .sigmodel import FeedbackState, PowerProfile, simulate_two_hop
from .schemes import BitAlgorithm, Scheme, brs_select
from .harness import CurveResult, ExperimentConfig, run_experiment

__all__ = [
    "ChannelStats",
    "ChannelRealization",
    "draw_realization",
    "make_rng",
    "place_relays_geometry",
    "PowerProfile",
    "FeedbackState",
    "simulate_two_hop",
    "Scheme",
    "BitAlgorithm",
    "brs_select",
    "ExperimentConfig",
    "CurveResult",
    "run_experiment",
]

__version__ = "0.1.0"
