"""Steady-state smoothed covariance and its containment guarantees.

The smoothed covariance combines the filtered covariance V_F, the
retrofiltered covariance V_R, and a putative true covariance V_T:

    V_S = [(V_F - V_T)^-1 + (V_R + V_T)^-1]^-1 + V_T.

The formula is applied verbatim even when V_F - V_T is indefinite: part of
the point of the containment theorems is that the result can look like a
perfectly fine state regardless.  Singular or severely ill-conditioned
inputs raise ``SingularityError`` instead of returning noise.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularityError
from .model import Matrix, SystemModel, Unravelling, symmetrize
from .realizability import (
    PsdCheck,
    default_tol,
    fits_within,
    steady_context,
    uncertainty_ok,
)
from .riccati import SteadySolveConfig

#: Condition-number cap for every inversion in the smoothing formula.
_COND_CAP = 1e12


def _guarded_inverse(mat: Matrix, name: str) -> Matrix:
    """Invert a symmetric (possibly indefinite) matrix via eigendecomposition."""
    sym = symmetrize(np.asarray(mat, dtype=float))
    eigvals, eigvecs = np.linalg.eigh(sym)
    magnitudes = np.abs(eigvals)
    smallest = float(magnitudes.min())
    largest = float(magnitudes.max())
    if smallest == 0.0 or largest / smallest > _COND_CAP:
        condition = np.inf if smallest == 0.0 else largest / smallest
        raise SingularityError(name, condition)
    return symmetrize((eigvecs / eigvals) @ eigvecs.T)


def smoothed_cov(V_F: Matrix, V_R: Matrix, V_T: Matrix) -> Matrix:
    """Smoothed covariance from filtered, retrofiltered, and true covariances."""
    V_F = np.asarray(V_F, dtype=float)
    V_R = np.asarray(V_R, dtype=float)
    V_T = np.asarray(V_T, dtype=float)
    gain = _guarded_inverse(V_F - V_T, "V_F - V_T")
    loss = _guarded_inverse(V_R + V_T, "V_R + V_T")
    middle = _guarded_inverse(gain + loss, "(V_F - V_T)^-1 + (V_R + V_T)^-1")
    return symmetrize(middle + V_T)


def smoothed_det_normalized(V_S: Matrix, model: SystemModel) -> float:
    """det(V_S) in vacuum units: (2/hbar)^(2N) det(V_S); 1 marks the class boundary."""
    V_S = np.asarray(V_S, dtype=float)
    return float((2.0 / model.hbar) ** (2 * model.N) * np.linalg.det(V_S))


def theorem_B_check(
    model: SystemModel,
    u_o: Unravelling,
    V_T: Matrix,
    cfg: SteadySolveConfig | None = None,
    tol: float | None = None,
) -> bool:
    """Whether the smoothed state built from ``V_T`` satisfies the uncertainty relation.

    When ``V_T`` itself satisfies the uncertainty relation and fits inside
    the filtered covariance, this conclusion is guaranteed; the check
    reports the conclusion regardless of whether the premises hold.
    """
    ctx = steady_context(model, u_o, cfg)
    V_S = smoothed_cov(ctx.V_F, ctx.V_R, V_T)
    return bool(uncertainty_ok(V_S, model, tol if tol is not None else default_tol(model)))


def theorem_C_check(
    model: SystemModel,
    u_o: Unravelling,
    V_T: Matrix,
    cfg: SteadySolveConfig | None = None,
    tol: float | None = None,
) -> dict[str, bool]:
    """Containment of the smoothed covariance, for any putative ``V_T``.

    Returns whether V_S fits inside the filtered covariance and inside the
    unconditioned bound; both hold for arbitrary symmetric ``V_T`` with
    invertible differences.
    """
    if tol is None:
        tol = default_tol(model)
    ctx = steady_context(model, u_o, cfg)
    V_S = smoothed_cov(ctx.V_F, ctx.V_R, V_T)
    filt: PsdCheck = fits_within(ctx.V_F, V_S, tol)
    unc: PsdCheck = fits_within(ctx.bound, V_S, tol)
    return {"fits_filtered": filt.ok, "fits_unconditioned": unc.ok}
