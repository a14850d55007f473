"""Laplacian flow of closed G2 structures on periodic 7-dimensional lattices."""
from .algebra import (Metric, hodge_star, i_phi, j_phi, metric_from_phi, project2, project3,
                      psi_from_phi, standard_phi, standard_psi)
from .errors import (AxisTooSmall, ConfigInvalid, DegreeOutOfRange, G2FlowError, InsufficientData,
                     LeftPositiveCone, NotClosed, NotMonotone, NotPositive, ScaleCollapse,
                     SnapshotError, SpecMismatch)
from .flow import FlowConfig, DiagnosticsRecord, adaptive_dt, blowup_fit, rescale, run, step, velocity
from .identities import identity_residuals
from .lattice import LatticeField, LatticeSpec, exterior_d
from .soliton import SolitonCandidate, SolitonReport, soliton_residual
from .state import FlowState, Mode, perturbed_phi

__version__ = "0.1.0"

__all__ = [
    "Metric", "hodge_star", "i_phi", "j_phi", "metric_from_phi", "project2", "project3",
    "psi_from_phi", "standard_phi", "standard_psi",
    "AxisTooSmall", "ConfigInvalid", "DegreeOutOfRange", "G2FlowError", "InsufficientData",
    "LeftPositiveCone", "NotClosed", "NotMonotone", "NotPositive", "ScaleCollapse",
    "SnapshotError", "SpecMismatch",
    "FlowConfig", "DiagnosticsRecord", "adaptive_dt", "blowup_fit", "rescale", "run", "step", "velocity",
    "identity_residuals", "LatticeField", "LatticeSpec", "exterior_d",
    "SolitonCandidate", "SolitonReport", "soliton_residual", "FlowState", "Mode", "perturbed_phi",
]
