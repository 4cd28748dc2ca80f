"""Filtering, retrofiltering, smoothing, and realizability checks for
linear Gaussian quantum systems under continuous diffusive measurement."""

from .errors import ConvergenceError, NumericError, SingularityError
from .model import (
    GaussianState,
    ModelFile,
    SystemModel,
    Unravelling,
    cov_matrix,
    empty_unravelling,
    half_hbar_units,
    kappa,
    load_model,
    make_heterodyne,
    make_homodyne,
    model_hash,
    stack,
    symplectic_form,
)
from .realizability import (
    FilterContext,
    PutativeParams,
    RealizabilityReport,
    check_realizable,
    classify,
    cov_to_params,
    default_tol,
    fits_within,
    is_psd,
    param_to_cov,
    purity,
    steady_context,
    uncertainty_ok,
)
from .riccati import (
    CovSeries,
    SteadySolveConfig,
    UnconditionedBound,
    filtered_steady,
    integrate_cov,
    realizability_residual,
    retrofiltered_steady,
    true_steady,
    unconditioned_bound,
)
from .smoothing import (
    smoothed_cov,
    smoothed_det_normalized,
    theorem_B_check,
    theorem_C_check,
)
from .sweep import (
    BoundaryPoint,
    GridSpec,
    SweepRow,
    homodyne_boundary,
    sweep_grid,
    write_boundary_csv,
    write_sweep_csv,
)
from .trajectory import (
    Record,
    SnapshotPaths,
    TrajectoryBundle,
    ellipse_points,
    evolve_snapshot,
    innovations,
    mixture_statistic,
    simulate_joint,
    write_bundle_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "NumericError",
    "SingularityError",
    "GaussianState",
    "ModelFile",
    "SystemModel",
    "Unravelling",
    "cov_matrix",
    "empty_unravelling",
    "half_hbar_units",
    "kappa",
    "load_model",
    "make_heterodyne",
    "make_homodyne",
    "model_hash",
    "stack",
    "symplectic_form",
    "FilterContext",
    "PutativeParams",
    "RealizabilityReport",
    "check_realizable",
    "classify",
    "cov_to_params",
    "default_tol",
    "fits_within",
    "is_psd",
    "param_to_cov",
    "purity",
    "steady_context",
    "uncertainty_ok",
    "CovSeries",
    "SteadySolveConfig",
    "UnconditionedBound",
    "filtered_steady",
    "integrate_cov",
    "realizability_residual",
    "retrofiltered_steady",
    "true_steady",
    "unconditioned_bound",
    "smoothed_cov",
    "smoothed_det_normalized",
    "theorem_B_check",
    "theorem_C_check",
    "BoundaryPoint",
    "GridSpec",
    "SweepRow",
    "homodyne_boundary",
    "sweep_grid",
    "write_boundary_csv",
    "write_sweep_csv",
    "Record",
    "SnapshotPaths",
    "TrajectoryBundle",
    "ellipse_points",
    "evolve_snapshot",
    "innovations",
    "mixture_statistic",
    "simulate_joint",
    "write_bundle_csv",
]
