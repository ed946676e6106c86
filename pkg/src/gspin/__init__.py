"""Simulation and analysis of a tumbling spin-1 defect (silicon G center)."""

__version__ = "0.1.0"

from .geometry import OrientationEnsemble, SitePerturbation, site_axes
from .photodynamics import PhotoDynamics, g2_curve, saturation_curve, steady_state
from .sequences import Defect, Drive, SpinSystem
from .spin import ZfsParameters, correct_detuning, eigenstructure, zfs_from_transitions

__all__ = [
    "Defect",
    "Drive",
    "OrientationEnsemble",
    "PhotoDynamics",
    "SitePerturbation",
    "SpinSystem",
    "ZfsParameters",
    "correct_detuning",
    "eigenstructure",
    "g2_curve",
    "saturation_curve",
    "site_axes",
    "steady_state",
    "zfs_from_transitions",
]
