"""Quantum slow motion on period-one resonances of a modulated standing wave.

Subpackages and modules:

``core``        parameters, grids, wave functions, histograms, Wigner functions
``kernels``     numba / numpy inner loops
``classical``   leapfrog dynamics, stroboscopic maps, fixed points, ensembles
``moyal``       effective potential, Wigner right-hand sides, modified resonances
``quantum``     split-operator propagation
``qmc``         recoil trajectories and ensemble distributions
``experiments`` scenario runners, configuration and output
"""
from .core import GaussianPacket, Modulation, Params, PhasePoint, RecoilModel, SpontaneousSettings

__version__ = "0.1.0"

__all__ = ["GaussianPacket", "Modulation", "Params", "PhasePoint", "RecoilModel", "SpontaneousSettings", "__version__"]
