"""Homogeneous polyhedral cones: H-rep, V-rep, and the DD conversion."""
from .core import (DimensionMismatch, HRep, InvalidGrid, NumericalDegeneracyWarning,
                   ToleranceConfig, VRep, box_cone_hrep, checkerboard_hrep,
                   expand_generators, max_violation, membership)
from .dd import (DDPair, adjacency_test, dd_convert, dd_insert_halfspace,
                 initial_pair, split_lineality)
from .io import FormatError, read_hrep, read_vrep, write_hrep, write_vrep
from .verify import VerificationReport, cone_residual, verify_vrep

__all__ = [
    "DimensionMismatch", "HRep", "InvalidGrid", "NumericalDegeneracyWarning",
    "ToleranceConfig", "VRep", "box_cone_hrep", "checkerboard_hrep",
    "expand_generators", "max_violation", "membership", "DDPair",
    "adjacency_test", "dd_convert", "dd_insert_halfspace", "initial_pair",
    "split_lineality", "FormatError", "read_hrep", "read_vrep", "write_hrep",
    "write_vrep", "VerificationReport", "cone_residual", "verify_vrep",
]
