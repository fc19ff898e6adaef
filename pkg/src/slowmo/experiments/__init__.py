"""Scenario runners, configuration, peak analysis and output."""
from .config import ExperimentConfig
from .peaks import PeakSet, find_peaks, side_peak
from .runners import (
    Comparison,
    TunnelingRun,
    run_comparison,
    run_kbar_scan,
    run_portraits,
    run_resonance,
    run_tunneling,
)

__all__ = [
    "Comparison",
    "ExperimentConfig",
    "PeakSet",
    "TunnelingRun",
    "find_peaks",
    "run_comparison",
    "run_kbar_scan",
    "run_portraits",
    "run_resonance",
    "run_tunneling",
    "side_peak",
]
