"""Discretized dispersive readout of coupled qubits, idealized reference
measurements in a continuum of candidate bases, and certified diamond-norm
distances between them."""

__version__ = "0.1.0"

from .spectrum import (BasisAngle, CrossoverEstimates, EigenSystem,
                       SystemParams, crossover_estimates, eigenenergies,
                       mixing_angle, n_of_gamma, propagator, qubit_hamiltonian)
from .channels import (SuperOp, TruncationWarning, apply, chi_matrix,
                       g_coefficient, g_coefficient_table, ideal_channel,
                       nigg_girvin_channel)
from .metrics import (DiamondResult, choi_bounds, diamond_distance,
                      diamond_norm, partial_trace, trace_norm)
from .sweeps import (GammaScan, SweepRow, distance_row, find_crossover,
                     scan_gamma_chi, sweep_alpha, sweep_chi)

__all__ = [
    "__version__",
    "SystemParams", "BasisAngle", "EigenSystem", "CrossoverEstimates",
    "mixing_angle", "eigenenergies", "qubit_hamiltonian", "propagator",
    "n_of_gamma", "crossover_estimates",
    "SuperOp", "TruncationWarning", "g_coefficient", "g_coefficient_table",
    "chi_matrix", "nigg_girvin_channel", "ideal_channel", "apply",
    "DiamondResult", "trace_norm", "partial_trace", "choi_bounds",
    "diamond_norm", "diamond_distance",
    "SweepRow", "GammaScan", "distance_row", "sweep_chi", "sweep_alpha",
    "scan_gamma_chi", "find_crossover",
]
