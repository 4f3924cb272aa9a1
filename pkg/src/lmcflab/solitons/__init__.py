"""Explicit special Lagrangians and mean curvature flow solitons in C^m."""

from .families import (
    KINDS,
    AdmissibilityError,
    AngleData,
    ConvergenceError,
    SolitonParams,
    SurfaceSample,
    expander_angles,
    family_angles,
    family_invert,
    lawlor_angles,
    soliton_phase,
    soliton_point,
    soliton_sample,
    translator_angles,
)
from .geometry import (
    asymptotic_decay,
    default_grid,
    frame_phase,
    laplace_beltrami,
    numeric_mean_curvature,
    soliton_residual,
    tangent_frame,
)
from .hl import hl_membership
from .profiles import Profile, angle_integrals, neck_area, profile
from .u1 import U1Solution, u1_point, u1_residual, u1_solve, polygon_mask

__all__ = [name for name in dir() if not name.startswith("_")]
