"""Steady-state and transient covariance equations.

The conditioned covariance of a monitored linear Gaussian model obeys a
matrix Riccati differential equation,

    dV/dt = A V + V A^T + D - K[V] K[V]^T,    K[V] = V C^T +/- Gamma^T,

with the + gain for filtering (conditioning on the past record) and the -
gain for retrofiltering (the likelihood of the future record).  Steady
states are found by integrating this flow with fixed-step explicit Euler
until the residual drops below a threshold; for the models of interest the
drift alone need not be stable (the measurement does the stabilizing), so
forward integration is used instead of an algebraic factorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import schur, solve_continuous_lyapunov

from .errors import ConvergenceError, NumericError
from .model import (
    Matrix,
    SystemModel,
    Unravelling,
    cov_matrix,
    kappa,
    stack,
    symmetrize,
)

#: How many Euler steps to take between residual checks.
_CHECK_EVERY = 50


@dataclass(frozen=True)
class SteadySolveConfig:
    """Integration controls for the steady-state solvers.

    ``dt`` and ``t_max`` default to 1e-4 and 200 times the slowest damping
    time of ``A`` (1/min |Re eig| over damped directions; 1 if there is no
    damped direction).  A converging solve stops as soon as the residual
    Frobenius norm drops below ``tol``, so a generous cutoff only costs
    time on genuinely non-convergent models.
    """

    dt: float | None = None
    t_max: float | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.dt is not None and self.t_max is not None and self.dt >= self.t_max:
            raise ValueError("dt must be smaller than t_max")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def resolve(self, model: SystemModel) -> tuple[float, float]:
        """Return concrete (dt, t_max) for the given model."""
        if self.dt is not None and self.t_max is not None:
            return self.dt, self.t_max
        rates = np.abs(np.linalg.eigvals(model.A).real)
        damped = rates[rates > 1e-12]
        tau = 1.0 / float(damped.min()) if damped.size else 1.0
        dt = self.dt if self.dt is not None else 1e-4 * tau
        t_max = self.t_max if self.t_max is not None else 200.0 * tau
        if dt >= t_max:
            raise ValueError(f"resolved dt {dt} is not smaller than t_max {t_max}")
        return dt, t_max


def riccati_rhs(model: SystemModel, u: Unravelling, V: Matrix, sign: int) -> Matrix:
    """Symmetrized right-hand side A V + V A^T + D - K[V] K[V]^T."""
    K = kappa(V, u, sign)
    return symmetrize(model.A @ V + V @ model.A.T + model.D - K @ K.T)


def realizability_residual(V: Matrix, model: SystemModel, u_o: Unravelling) -> Matrix:
    """Residual whose positive semidefiniteness certifies a realizable true covariance."""
    return riccati_rhs(model, u_o, np.asarray(V, dtype=float), +1)


def _solve_steady(
    model: SystemModel,
    u: Unravelling,
    sign: int,
    cfg: SteadySolveConfig,
    label: str,
) -> Matrix:
    dt, t_max = cfg.resolve(model)
    n_steps = max(1, int(round(t_max / dt)))
    V = 0.5 * model.hbar * np.eye(model.dim)

    # The Euler step below is the algebraic expansion of riccati_rhs: with
    # Ab = A - sign*Gamma^T C and Db = D - Gamma^T Gamma the quadratic gain
    # term reduces to (V C^T)(V C^T)^T, saving work in the hot loop.
    Ab = model.A - sign * (u.Gamma.T @ u.C)
    Db = model.D - u.Gamma.T @ u.Gamma
    Ct = u.C.T

    done = 0
    residual = np.inf
    while done < n_steps:
        rhs = riccati_rhs(model, u, V, sign)
        residual = float(np.sqrt((rhs * rhs).sum()))
        if not np.isfinite(residual):
            raise NumericError(f"{label}: covariance integration diverged")
        if residual <= cfg.tol:
            return cov_matrix(V)
        chunk = min(_CHECK_EVERY, n_steps - done)
        for _ in range(chunk):
            VCt = V @ Ct
            step = Ab @ V
            step = step + step.T + Db - VCt @ VCt.T
            V = V + dt * step
            V = 0.5 * (V + V.T)
        done += chunk

    rhs = riccati_rhs(model, u, V, sign)
    residual = float(np.sqrt((rhs * rhs).sum()))
    if residual <= cfg.tol:
        return cov_matrix(V)
    raise ConvergenceError(
        f"{label}: no steady state within t_max={t_max:g} (dt={dt:g})", residual
    )


def filtered_steady(
    model: SystemModel, u_o: Unravelling, cfg: SteadySolveConfig | None = None
) -> Matrix:
    """Steady covariance conditioned on the past observed record."""
    return _solve_steady(model, u_o, +1, cfg or SteadySolveConfig(), "filtered_steady")


def retrofiltered_steady(
    model: SystemModel, u_o: Unravelling, cfg: SteadySolveConfig | None = None
) -> Matrix:
    """Steady covariance of the retrofiltered effect (adjoint gain)."""
    return _solve_steady(
        model, u_o, -1, cfg or SteadySolveConfig(), "retrofiltered_steady"
    )


def true_steady(
    model: SystemModel,
    u_o: Unravelling,
    u_u: Unravelling,
    cfg: SteadySolveConfig | None = None,
) -> Matrix:
    """Steady covariance conditioned on observed plus unobserved records.

    This is the filtered covariance under the stacked unravelling; when the
    combined monitoring is efficient the result is pure.
    """
    return _solve_steady(
        model, stack(u_o, u_u), +1, cfg or SteadySolveConfig(), "true_steady"
    )


class CovSeries(NamedTuple):
    """Time series of covariance matrices; ``covs[0]`` is the initial value."""

    t: NDArray[np.float64]
    covs: NDArray[np.float64]


def integrate_cov(
    model: SystemModel,
    u: Unravelling,
    V0: Matrix,
    dt: float,
    T: float,
) -> CovSeries:
    """Integrate the conditioned-covariance flow from ``V0`` over [0, T].

    Returns the full Euler trajectory, one covariance per step, with the
    initial covariance first.  The path is deterministic: the covariance
    equation has no noise term.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    V = np.array(cov_matrix(V0, model.dim))
    n_steps = int(round(T / dt))
    out = np.empty((n_steps + 1, model.dim, model.dim))
    out[0] = V
    for k in range(n_steps):
        V = V + dt * riccati_rhs(model, u, V, +1)
        V = 0.5 * (V + V.T)
        if not np.all(np.isfinite(V)):
            raise NumericError(f"integrate_cov: non-finite covariance at step {k + 1}")
        out[k + 1] = V
    t = dt * np.arange(n_steps + 1)
    return CovSeries(t=t, covs=out)


@dataclass(frozen=True)
class UnconditionedBound:
    """Unconditioned steady covariance, split into finite and divergent parts.

    ``finite_basis`` holds orthonormal columns spanning the directions along
    which the unmonitored variance stays bounded; ``cov_finite`` is the
    steady covariance restricted to that subspace.  The remaining
    ``n_infinite`` directions grow without bound, so any containment check
    against this bound is automatically satisfied along them.
    """

    finite_basis: Matrix
    cov_finite: Matrix
    n_infinite: int

    def __post_init__(self):
        basis = np.array(self.finite_basis, dtype=float)
        cov = np.array(self.cov_finite, dtype=float)
        basis.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "finite_basis", basis)
        object.__setattr__(self, "cov_finite", cov)

    @property
    def dim(self) -> int:
        return self.finite_basis.shape[0]

    @property
    def n_finite(self) -> int:
        return self.finite_basis.shape[1]

    def project(self, V: Matrix) -> Matrix:
        """Restrict a full covariance to the finite subspace."""
        V = np.asarray(V, dtype=float)
        if V.shape != (self.dim, self.dim):
            raise ValueError(f"V shape {V.shape} does not match bound on {self.dim}")
        return symmetrize(self.finite_basis.T @ V @ self.finite_basis)

    def full_matrix(self) -> Matrix:
        """The bound as a plain covariance; only valid with no divergent direction."""
        if self.n_infinite:
            raise ValueError("bound has divergent directions; no full matrix exists")
        return cov_matrix(self.finite_basis @ self.cov_finite @ self.finite_basis.T)


def unconditioned_bound(model: SystemModel) -> UnconditionedBound:
    """Long-time covariance of the unmonitored model, with divergence markers.

    A real Schur decomposition of ``A`` separates strictly damped directions
    from the rest.  On the damped invariant subspace the covariance settles
    to the solution of the projected Lyapunov equation; every other
    direction is marked divergent.
    """
    scale = max(1.0, float(np.abs(model.A).max()))
    eig_tol = 1e-9 * scale

    def _non_damped(re: float, im: float) -> bool:
        return re >= -eig_tol

    T, Z, sdim = schur(model.A, output="real", sort=_non_damped)
    n_inf = int(sdim)
    basis = Z[:, n_inf:]
    if basis.shape[1] == 0:
        cov = np.zeros((0, 0))
    else:
        T_s = T[n_inf:, n_inf:]
        D_s = basis.T @ model.D @ basis
        cov = symmetrize(solve_continuous_lyapunov(T_s, -D_s))
    return UnconditionedBound(finite_basis=basis, cov_finite=cov, n_infinite=n_inf)
