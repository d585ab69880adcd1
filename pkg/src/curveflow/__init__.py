"""curveflow: nonlocal inverse-curvature flows of convex closed plane curves.

Evolves nu = (1/kappa)^n on the normal-angle circle under either of two
length-decreasing, area-increasing nonlocal normalizations, verifies the
guaranteed monotonicity/inequality/decay properties as runtime diagnostics,
and cross-validates against an independent Lagrangian marker solver.
"""

__version__ = "0.1.0"

from .diagnostics import (
    DecayFit,
    DiagnosticsRecord,
    check_hoelder,
    check_lin_tsai,
    check_phi_principle,
    fit_decay,
    grad_energy_decay,
    limit_circle,
    theoretical_decay_rate,
)
from .errors import CurveFlowError
from .flow import FlowConfig, FlowRun, FlowState, FlowVariant, StepStatus, run, step
from .geometry import (
    AngularGrid,
    CurvePoints,
    GeometricSummary,
    RadiusProfile,
    area,
    build_grid,
    closure_defect,
    enclosed_area,
    initial_profile,
    moment,
    reconstruct_curve,
    summarize,
    support_function,
)
from .manifest import RunManifest, load_manifest, parse_manifest
from .markers import MarkerCurve, compare, marker_curvature_normal, marker_step

__all__ = [
    "__version__",
    "AngularGrid",
    "CurvePoints",
    "CurveFlowError",
    "DecayFit",
    "DiagnosticsRecord",
    "FlowConfig",
    "FlowRun",
    "FlowState",
    "FlowVariant",
    "GeometricSummary",
    "MarkerCurve",
    "RadiusProfile",
    "RunManifest",
    "StepStatus",
    "area",
    "build_grid",
    "check_hoelder",
    "check_lin_tsai",
    "check_phi_principle",
    "closure_defect",
    "compare",
    "enclosed_area",
    "fit_decay",
    "grad_energy_decay",
    "initial_profile",
    "limit_circle",
    "load_manifest",
    "marker_curvature_normal",
    "marker_step",
    "moment",
    "parse_manifest",
    "reconstruct_curve",
    "run",
    "step",
    "summarize",
    "support_function",
    "theoretical_decay_rate",
]
