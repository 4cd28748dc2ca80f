"""Seeded stochastic simulation of the observed/unobserved measurement scenario.

One observer (the filter) sees only part of the monitoring; a second,
omniscient record conditions the true state.  The simulation propagates the
true mean under the full monitoring at its steady covariance, generates the
record increments, runs the partial-information filter on the observed
channels only, and exposes the pieces needed to check that the filtered
state is the mixture of true states over the missing record.

Randomness comes from ``numpy.random.default_rng`` (PCG64) with a 64-bit
seed, so runs are bit-reproducible; per-trajectory seeds are derived as
``seed ^ trajectory_index``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import NumericError
from .model import (
    GaussianState,
    Matrix,
    SystemModel,
    Unravelling,
    kappa,
    stack,
    symmetrize,
)
from .riccati import (
    CovSeries,
    SteadySolveConfig,
    filtered_steady,
    integrate_cov,
    true_steady,
)

_FINITE_CHECK_EVERY = 1024


@dataclass(frozen=True)
class Record:
    """Measurement results of one unravelling: M channels by K steps.

    ``values[r, k]`` is the record value y_r over step k, i.e. the increment
    divided by dt.
    """

    dt: float
    values: NDArray[np.float64]

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be an M x K array")
        if not np.all(np.isfinite(values)):
            raise ValueError("record has non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TrajectoryBundle:
    """True and filtered means plus both records from one seeded run.

    Means are stored column-per-step (after the step); both observers start
    from the zero mean, the steady-state value.
    """

    true_means: NDArray[np.float64]
    filtered_means: NDArray[np.float64]
    observed: Record
    unobserved: Record
    seed: int

    def __post_init__(self):
        k = self.true_means.shape[1]
        if self.filtered_means.shape[1] != k:
            raise ValueError("true and filtered means disagree on step count")
        for rec in (self.observed, self.unobserved):
            if rec.n_steps != k:
                raise ValueError("record step count does not match the means")

    @property
    def dt(self) -> float:
        return self.observed.dt

    @property
    def n_steps(self) -> int:
        return self.true_means.shape[1]


def simulate_joint(
    model: SystemModel,
    u_o: Unravelling,
    u_u: Unravelling,
    T: float,
    dt: float,
    seed: int,
    cfg: SteadySolveConfig | None = None,
) -> TrajectoryBundle:
    """Simulate the joint true/filtered evolution over [0, T] in steps of dt.

    Both conditioned covariances are pinned at their steady values (the
    steady-state regime), so only the means are stochastic.  The filter sees
    the observed channels only, driven by its innovations.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("T must cover at least one step")
    total = stack(u_o, u_u)
    V_F = filtered_steady(model, u_o, cfg)
    V_T = true_steady(model, u_o, u_u, cfg)
    K_T = kappa(V_T, total, +1)
    K_F = kappa(V_F, u_o, +1)
    A = model.A
    C_tot = total.C
    C_o = u_o.C
    m_obs = u_o.M

    n_steps = int(round(T / dt))
    sqrt_dt = np.sqrt(dt)
    rng = np.random.default_rng(seed)

    x_true = np.zeros(model.dim)
    x_filt = np.zeros(model.dim)
    true_means = np.empty((model.dim, n_steps))
    filt_means = np.empty((model.dim, n_steps))
    records = np.empty((total.M, n_steps))

    for k in range(n_steps):
        dw = rng.standard_normal(total.M) * sqrt_dt
        y_dt = C_tot @ x_true * dt + dw
        x_true = x_true + A @ x_true * dt + K_T @ dw
        innovation = y_dt[:m_obs] - C_o @ x_filt * dt
        x_filt = x_filt + A @ x_filt * dt + K_F @ innovation
        true_means[:, k] = x_true
        filt_means[:, k] = x_filt
        records[:, k] = y_dt / dt
        if k % _FINITE_CHECK_EVERY == 0 and not np.all(np.isfinite(x_true)):
            raise NumericError(f"simulate_joint: mean diverged by step {k}")

    if not (np.all(np.isfinite(true_means)) and np.all(np.isfinite(filt_means))):
        raise NumericError("simulate_joint: mean diverged")
    return TrajectoryBundle(
        true_means=true_means,
        filtered_means=filt_means,
        observed=Record(dt=dt, values=records[:m_obs]),
        unobserved=Record(dt=dt, values=records[m_obs:]),
        seed=seed,
    )


def innovations(bundle: TrajectoryBundle, u_o: Unravelling) -> NDArray[np.float64]:
    """Reconstruct the filter innovations from a bundle (steps 1..K-1).

    The innovation over step k uses the filtered mean from the end of step
    k-1, so the very first step (whose prior mean is the fixed zero initial
    condition) is omitted.
    """
    dt = bundle.dt
    y_dt = bundle.observed.values[:, 1:] * dt
    prior_means = bundle.filtered_means[:, :-1]
    return y_dt - (u_o.C @ prior_means) * dt


def mixture_statistic(bundle: TrajectoryBundle, burn_in: float) -> Matrix:
    """Ergodic average of the outer product of (true mean - filtered mean).

    For long runs this estimates the covariance of the true mean around the
    filtered mean, which the mixture decomposition pins at V_F - V_T.
    """
    total_time = bundle.n_steps * bundle.dt
    if burn_in >= total_time:
        raise ValueError(f"burn_in {burn_in} must be smaller than the run time {total_time}")
    t = (np.arange(bundle.n_steps) + 1) * bundle.dt
    keep = t >= burn_in
    diff = (bundle.true_means - bundle.filtered_means)[:, keep]
    return symmetrize(diff @ diff.T / diff.shape[1])


class SnapshotPaths(NamedTuple):
    """Seeded mean path and deterministic covariance path from one snapshot."""

    t: NDArray[np.float64]
    mean_path: NDArray[np.float64]
    cov_path: CovSeries


def evolve_snapshot(
    model: SystemModel,
    u_o: Unravelling,
    V_T: Matrix,
    mean0: NDArray[np.float64],
    dt: float,
    T: float,
    seed: int,
) -> SnapshotPaths:
    """Evolve a snapshot state under continued observed monitoring.

    The covariance follows the deterministic conditioned-covariance flow
    started from ``V_T``; the mean is kicked by seeded record noise through
    the time-dependent gain.  Only the mean depends on the seed.
    """
    series = integrate_cov(model, u_o, V_T, dt, T)
    n_steps = series.covs.shape[0] - 1
    rng = np.random.default_rng(seed)
    sqrt_dt = np.sqrt(dt)
    x = np.array(mean0, dtype=float).reshape(model.dim)
    means = np.empty((model.dim, n_steps + 1))
    means[:, 0] = x
    for k in range(n_steps):
        gain = kappa(series.covs[k], u_o, +1)
        dw = rng.standard_normal(u_o.M) * sqrt_dt
        x = x + model.A @ x * dt + gain @ dw
        means[:, k + 1] = x
    if not np.all(np.isfinite(means)):
        raise NumericError("evolve_snapshot: mean diverged")
    return SnapshotPaths(t=series.t, mean_path=means, cov_path=series)


def ellipse_points(state: GaussianState, n_points: int) -> NDArray[np.float64]:
    """Points on the 1-standard-deviation contour of a single-mode state.

    Uses the symmetric square root of the covariance: x = mean + sqrt(V) u
    for u on the unit circle.  Returns an (n_points, 2) array; the contour
    is not explicitly closed.
    """
    if n_points < 3:
        raise ValueError("n_points must be at least 3")
    if state.cov.shape != (2, 2):
        raise ValueError("ellipse_points needs a single-mode (2x2) covariance")
    eigvals, eigvecs = np.linalg.eigh(state.cov)
    scale = max(1.0, float(np.abs(state.cov).max()))
    if eigvals.min() < -1e-10 * scale:
        raise ValueError(f"covariance is not positive semidefinite (min eig {eigvals.min():.3e})")
    root = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    phi = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    circle = np.vstack([np.cos(phi), np.sin(phi)])
    return (state.mean[:, None] + root @ circle).T


def trajectory_column_names(model: SystemModel, m_observed: int, m_unobserved: int) -> list[str]:
    """Column labels for the bundle CSV; single-mode models use the plain names."""
    if model.N == 1:
        mean_cols = ["true_q", "true_p", "filt_q", "filt_p"]
    else:
        mean_cols = [f"true_{q}{i + 1}" for i in range(model.N) for q in ("q", "p")]
        mean_cols += [f"filt_{q}{i + 1}" for i in range(model.N) for q in ("q", "p")]
    record_cols = [f"y_{r + 1}" for r in range(m_observed + m_unobserved)]
    return ["t"] + mean_cols + record_cols


def write_bundle_csv(bundle: TrajectoryBundle, model: SystemModel, path, metadata=None) -> None:
    """Write a bundle as CSV: time, means, then observed and unobserved records."""
    names = trajectory_column_names(
        model, bundle.observed.values.shape[0], bundle.unobserved.values.shape[0]
    )
    t = (np.arange(bundle.n_steps) + 1) * bundle.dt
    table = np.vstack(
        [t, bundle.true_means, bundle.filtered_means,
         bundle.observed.values, bundle.unobserved.values]
    ).T
    header_lines = [f"seed={bundle.seed}", f"dt={bundle.dt!r}"]
    for key, value in (metadata or {}).items():
        header_lines.append(f"{key}={value}")
    with open(path, "w", encoding="utf-8") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        handle.write(",".join(names) + "\n")
        np.savetxt(handle, table, delimiter=",", fmt="%.17g")
