"""Shared types: parameters, grids, wave functions, histograms, Wigner functions."""
from .grid import (
    BAND_EDGE_CUTOFF,
    SpatialGrid,
    WaveFunction,
    band_edge_mass,
    build_grid,
    check_band_edge,
    from_momentum,
    init_packet,
    momentum_representation,
    moments,
)
from .histogram import (
    MomentumHistogram,
    classical_histogram,
    counts_histogram,
    density_histogram,
    momentum_histogram,
    quantum_histogram,
    uniform_edges,
)
from .params import (
    GaussianPacket,
    Modulation,
    Params,
    PhasePoint,
    RecoilModel,
    SpontaneousSettings,
    fold,
)
from .series import StroboscopicSeries
from .wigner import WignerGridState, gaussian_state, gaussian_wigner, wigner_of_wavefunction

__all__ = [
    "BAND_EDGE_CUTOFF",
    "GaussianPacket",
    "Modulation",
    "MomentumHistogram",
    "Params",
    "PhasePoint",
    "RecoilModel",
    "SpatialGrid",
    "SpontaneousSettings",
    "StroboscopicSeries",
    "WaveFunction",
    "WignerGridState",
    "band_edge_mass",
    "build_grid",
    "check_band_edge",
    "classical_histogram",
    "counts_histogram",
    "density_histogram",
    "fold",
    "from_momentum",
    "gaussian_state",
    "gaussian_wigner",
    "init_packet",
    "momentum_histogram",
    "momentum_representation",
    "moments",
    "quantum_histogram",
    "uniform_edges",
    "wigner_of_wavefunction",
]
