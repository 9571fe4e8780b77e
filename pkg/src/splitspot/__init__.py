"""Simulation and analysis of coincidence images from OAM-pumped type-I down-conversion."""

from .analysis import fit_two_spots, infer_l, summarize_rates
from .biphoton import Scene
from .counting import Detector, GateConfig, ScanGrid, simulate_scan, simulate_triple
from .lgbeam import LaguerreGaussianMode

__all__ = [
    "Detector",
    "GateConfig",
    "LaguerreGaussianMode",
    "ScanGrid",
    "Scene",
    "fit_two_spots",
    "infer_l",
    "simulate_scan",
    "simulate_triple",
    "summarize_rates",
]
__version__ = "0.1.0"
