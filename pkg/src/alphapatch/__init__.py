"""Contour dynamics for alpha-patches of the generalised SQG family, 0 < alpha <= 1."""
from .curve import (
    ArcChordReport,
    ClosedCurve,
    CurveError,
    NormReport,
    ReparametrizationError,
    arc_chord,
    curve_length,
    derivative,
    enclosed_area,
    norms,
    parameter_grid,
    read_curve_csv,
    reparametrize_uniform,
    sample_curve,
    trig_interpolate,
    write_curve_csv,
)
from .diagnostics import (
    BoundCurve,
    DiagnosticsRecord,
    PatchDiagnostics,
    bound_value,
    calibrate_constant,
    read_ndjson,
    record,
    write_ndjson,
)
from .dynamics import SimState, rhs
from .integrator import StepControl, TerminationVerdict, Trajectory, detect_stop, run, step_rk4
from .tangential import TangentialField, lambda_qg, speed_report, tangential_derivative_integrand
from .velocity import (
    NearSingularError,
    PatchConfig,
    RegularizationSpec,
    SingularKernelError,
    coupling_constant,
    external_velocity,
    mollify,
    normal_velocity,
    regularized_self_velocity,
    self_velocity,
)

__version__ = "0.1.0"
