"""

GAAM Module

Spectral simulation and verification of the generalized Leray-alpha family of
damped fractional fluid models on the periodic box.

License: BSD 3-Clause

"""

from .attractor_diag import CheckReport, fractal_dim_bound, lieb_thirring_constant
from .dynamics import SimulationConfig, TrajectoryRecord, simulate, step
from .fields_metrics import ForcingField, random_divfree_field, sobolev_norm
from .spectral_core import ModelParams, SpectralGrid, VectorField, make_grid
from .stationary import StationarySolution, continuation_solve, smallness_report

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "ForcingField",
    "ModelParams",
    "SimulationConfig",
    "SpectralGrid",
    "StationarySolution",
    "TrajectoryRecord",
    "VectorField",
    "continuation_solve",
    "fractal_dim_bound",
    "lieb_thirring_constant",
    "make_grid",
    "random_divfree_field",
    "simulate",
    "smallness_report",
    "sobolev_norm",
    "step",
]
