"""Grid scans over putative-covariance parameters and unobserved homodyne phases.

``sweep_grid`` classifies every point of a (gamma, delta) grid and attaches
the normalized determinant of the smoothed covariance built from it;
``homodyne_boundary`` traces the extremal set generated by single-channel
homodyne completions of the observed monitoring.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SingularityError
from .model import Matrix, SystemModel, Unravelling, make_homodyne
from .realizability import (
    FilterContext,
    PutativeParams,
    RealizabilityReport,
    RealizableCheck,
    check_realizable,
    classify,
    cov_to_params,
    default_tol,
    param_to_cov,
    purity,
    steady_context,
)
from .riccati import SteadySolveConfig, true_steady
from .smoothing import smoothed_cov, smoothed_det_normalized

#: Band around purity 1 inside which a grid row is flagged pure.
_PURITY_BAND = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Inclusive (lo, hi, steps) ranges for the gamma and delta axes."""

    gamma_range: tuple[float, float, int]
    delta_range: tuple[float, float, int]

    def __post_init__(self):
        for name, (lo, hi, steps) in (
            ("gamma_range", self.gamma_range),
            ("delta_range", self.delta_range),
        ):
            if not lo < hi:
                raise ValueError(f"{name}: lo must be smaller than hi")
            if steps < 2:
                raise ValueError(f"{name}: steps must be at least 2")
        g_lo, _, _ = self.gamma_range
        if g_lo <= 0:
            raise ValueError("gamma_range must be positive")
        d_lo, d_hi, _ = self.delta_range
        if d_lo <= -1 or d_hi >= 1:
            raise ValueError("delta_range must stay within (-1, 1)")

    def gamma_values(self) -> np.ndarray:
        lo, hi, steps = self.gamma_range
        return np.linspace(lo, hi, steps)

    def delta_values(self) -> np.ndarray:
        lo, hi, steps = self.delta_range
        return np.linspace(lo, hi, steps)

    @property
    def n_points(self) -> int:
        return self.gamma_range[2] * self.delta_range[2]


@dataclass(frozen=True)
class SweepRow:
    """Classification and smoothed-state determinant at one grid point."""

    gamma: float
    delta: float
    report: RealizabilityReport
    det_vs: float
    singular: bool


def _eval_point(
    ctx: FilterContext, tol: float, gamma: float, delta: float
) -> SweepRow:
    V_T = param_to_cov(PutativeParams(gamma=gamma, delta=delta), ctx.model)
    report = classify(ctx.model, ctx.u_o, V_T, tol=tol, context=ctx)
    try:
        V_S = smoothed_cov(ctx.V_F, ctx.V_R, V_T)
        det_vs = smoothed_det_normalized(V_S, ctx.model)
        singular = False
    except SingularityError:
        det_vs = float("nan")
        singular = True
    return SweepRow(gamma=gamma, delta=delta, report=report, det_vs=det_vs, singular=singular)


def _eval_gamma_row(payload) -> list[SweepRow]:
    ctx, tol, gamma, deltas = payload
    return [_eval_point(ctx, tol, gamma, delta) for delta in deltas]


def sweep_grid(
    model: SystemModel,
    u_o: Unravelling,
    grid: GridSpec,
    cfg: SteadySolveConfig | None = None,
    tol: float | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Classify every grid point, row-major over gamma then delta.

    Per-point singularities of the smoothing formula are flagged on the row
    and never abort the sweep.  With ``workers`` > 1 the gamma rows are
    evaluated in parallel; output order is deterministic either way.
    """
    ctx = steady_context(model, u_o, cfg)
    _ = ctx.V_R  # solve before fanning out so workers inherit it
    if tol is None:
        tol = default_tol(model)
    gammas = grid.gamma_values()
    deltas = grid.delta_values()
    payloads = [(ctx, tol, gamma, deltas) for gamma in gammas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_row = list(pool.map(_eval_gamma_row, payloads))
    else:
        per_row = [_eval_gamma_row(p) for p in payloads]
    return [row for chunk in per_row for row in chunk]


@dataclass(frozen=True)
class BoundaryPoint:
    """True covariance generated by one unobserved homodyne phase."""

    theta_u: float
    V_T: Matrix
    params: PutativeParams
    check: RealizableCheck
    purity: float


def observed_efficiency(model: SystemModel, u_o: Unravelling) -> float:
    """Efficiency of a single-channel homodyne read off its output-map row."""
    if u_o.M != 1:
        raise ValueError("efficiency is only defined here for single-channel unravellings")
    row = u_o.C[0]
    return float(model.hbar * (row @ row) / 4.0)


def homodyne_boundary(
    model: SystemModel,
    u_o: Unravelling,
    n_phases: int,
    cfg: SteadySolveConfig | None = None,
    tol: float | None = None,
    eta_u: float | None = None,
) -> list[BoundaryPoint]:
    """Trace the extremal true covariances over homodyne phases in [0, pi).

    Each phase completes the observed monitoring with a single homodyne
    channel carrying the remaining efficiency (overridable via ``eta_u``),
    making the total monitoring efficient and the true state pure.
    """
    if model.N != 1:
        raise ValueError("homodyne_boundary covers single-mode models only")
    if u_o.M != 1:
        raise ValueError("homodyne_boundary expects a single observed channel")
    if n_phases < 1:
        raise ValueError("n_phases must be positive")
    if eta_u is None:
        eta_u = 1.0 - observed_efficiency(model, u_o)
        if eta_u <= 1e-9:
            raise ValueError(
                "observed monitoring is already efficient; pass eta_u explicitly"
            )
    if tol is None:
        tol = default_tol(model)
    points = []
    for theta_u in np.linspace(0.0, np.pi, n_phases, endpoint=False):
        u_u = make_homodyne(model, eta_u, float(theta_u))
        try:
            V_T = true_steady(model, u_o, u_u, cfg)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"homodyne_boundary: phase {theta_u:.6f} failed to converge",
                exc.residual,
            ) from exc
        points.append(
            BoundaryPoint(
                theta_u=float(theta_u),
                V_T=V_T,
                params=cov_to_params(V_T, model),
                check=check_realizable(model, u_o, V_T, tol),
                purity=purity(V_T, model),
            )
        )
    return points


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _write_csv(path, metadata: dict | None, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}={value}\n")
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")


def write_sweep_csv(rows: list[SweepRow], path, metadata: dict | None = None) -> None:
    """Write sweep rows with the documented column set."""
    header = [
        "gamma", "delta", "pure", "sclass", "unc_fit", "filt_fit",
        "realizable", "extremal", "det_vs", "singular",
    ]

    def format_row(row: SweepRow):
        report = row.report
        pure = abs(report.purity - 1.0) <= _PURITY_BAND
        return [
            f"{row.gamma:.17g}",
            f"{row.delta:.17g}",
            str(int(pure)),
            str(int(report.uncertainty_ok)),
            str(int(report.fits_unconditioned)),
            str(int(report.fits_filtered)),
            str(int(report.realizable)),
            str(int(report.extremal)),
            "nan" if row.singular else f"{row.det_vs:.17g}",
            str(int(row.singular)),
        ]

    _write_csv(path, metadata, header, (format_row(r) for r in rows))


def write_boundary_csv(points: list[BoundaryPoint], path, metadata: dict | None = None) -> None:
    """Write boundary points: phase, covariance entries, chart coordinates, flags."""
    header = [
        "theta_u", "v_qq", "v_qp", "v_pp", "gamma", "delta",
        "realizable", "extremal", "min_eig", "purity",
    ]

    def format_point(pt: BoundaryPoint):
        return [
            f"{pt.theta_u:.17g}",
            f"{pt.V_T[0, 0]:.17g}",
            f"{pt.V_T[0, 1]:.17g}",
            f"{pt.V_T[1, 1]:.17g}",
            f"{pt.params.gamma:.17g}",
            f"{pt.params.delta:.17g}",
            str(int(pt.check.ok)),
            str(int(pt.check.extremal)),
            f"{pt.check.min_eig:.17g}",
            f"{pt.purity:.17g}",
        ]

    _write_csv(path, metadata, header, (format_point(p) for p in points))
