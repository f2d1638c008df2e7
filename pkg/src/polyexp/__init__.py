"""Derivatives of noisy sampled data via spectral truncation.

The core pipeline projects noisy samples onto a truncated orthonormal
polynomial-exponential basis of L2(-R, R) and differentiates the
truncated expansion term by term.  Trigonometric-series, Tikhonov and
natural-cubic-spline differentiators are included as baselines, together
with a benchmark harness and CLI.
"""

__version__ = "0.1.0"

from .basis import (
    BasisSpec,
    DerivativeGramMatrix,
    MomentTable,
    basis_from_json,
    basis_tables,
    basis_to_json,
    build_basis,
    compute_moments,
    derivative_gram,
    eval_basis,
    orthonormality_defect,
)
from .baselines import (
    SplineCurve,
    TikhonovScan,
    TrigCoeffs,
    lcurve_corner,
    spline_derivative,
    spline_fit,
    tikhonov_first_derivative,
    tikhonov_second_derivative,
    trig_derivative,
    trig_project,
    trig_select_cutoff,
)
from .errors import (
    BasisConstructionError,
    CsvFormatError,
    SolverError,
    UndefinedMetricError,
)
from .experiments import (
    ErrorReport,
    NoiseConfig,
    TestCase,
    TEST_CASES,
    apply_noise,
    error_curves,
    reproduce_table,
    run_test,
)
from .grids import (
    Grid1D,
    Grid2D,
    SampledField2D,
    SampledFunction1D,
    read_csv_1d,
    read_csv_2d,
    relative_l2_error,
    sup_norm,
    trapezoid_integral_1d,
    trapezoid_integral_2d,
    write_csv_1d,
    write_csv_2d,
)
from .spectral import (
    CutoffReport,
    Cutoff2DReport,
    DerivativeResult,
    SpectralCoeffs1D,
    SpectralCoeffs2D,
    derivative_2d,
    project_1d,
    project_2d,
    reconstruct_1d,
    residual_sup,
    select_cutoff,
    select_cutoff_2d,
)

__all__ = [name for name in dir() if not name.startswith("_")]
