"""Graded curve shortening flow in C and on flat tori.

Curves are closed polylines carrying a phase lift, Maslov numbers,
holonomies and (in exact mode) a Liouville potential.  The flow moves them
by curvature, tracks crossings with their Novikov cochains, detects walls
and performs the one-dimensional surgeries.
"""

from .arrangement import (
    ArrangementError,
    Crossing,
    DegenerateCrossingError,
    Face,
    ObstructionReport,
    Sheet,
    area_rates,
    faces,
    obstruction_status,
    self_intersections,
    shoelace,
    winding_number,
)
from .curves import (
    PLANE,
    PRESETS,
    AmbientSurface,
    CurveError,
    ImmersedCurve,
    MaslovError,
    NotExactError,
    ResolutionError,
    build_curve,
    circle_loop,
    infinity_loop,
    preset,
    resample_loop,
    torus,
    torus_line_loop,
    wall_chain_loop,
)
from .flow import (
    FlowEvent,
    FlowPolicy,
    FlowState,
    InsufficientWindowError,
    ProbeResult,
    SingularityError,
    StepSizeError,
    SurgeryError,
    Trajectory,
    csf_step,
    curvature_velocity,
    init_state,
    run_with_surgeries,
    singularity_probe,
    stable_dt,
    surgery_collapse,
    surgery_open_neck,
    teardrop_extinction,
    transport_cochain,
    wall_limited_dt,
)
from .records import emit_frames, events_json, trajectory_csv, write_csv, write_events
