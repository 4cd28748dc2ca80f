"""Tiered physical-constraint checks on putative true covariances.

A candidate true covariance faces a ladder of tests, from weakest to
strongest: fit inside the unconditioned steady state, fit inside the
filtered steady state, and positive semidefiniteness of the realizability
residual, which is necessary and sufficient for the covariance to arise
from some fixed diffusive unobserved measurement.  ``classify`` runs the
whole ladder and returns a report with the margin eigenvalues.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .model import (
    Matrix,
    SystemModel,
    Unravelling,
    symmetrize,
    symplectic_form,
)
from .riccati import (
    SteadySolveConfig,
    UnconditionedBound,
    filtered_steady,
    realizability_residual,
    retrofiltered_steady,
    unconditioned_bound,
)

#: Largest relative asymmetry tolerated by the eigenvalue-based predicates.
_ASYM_GUARD = 1e-9


def default_tol(model: SystemModel) -> float:
    """Default eigenvalue slack for all semidefiniteness predicates."""
    return 1e-8 * model.hbar


class PsdCheck(NamedTuple):
    """Outcome of a semidefiniteness test.

    ``boundary`` is set when the margin eigenvalue sits inside the
    tolerance band [-tol, tol]: the point lies on the constraint surface.
    """

    ok: bool
    min_eig: float
    boundary: bool

    def __bool__(self) -> bool:  # allow `if fits_within(...)`
        return self.ok


class RealizableCheck(NamedTuple):
    """Outcome of the realizability test; ``extremal`` flags a rank-deficient residual."""

    ok: bool
    min_eig: float
    extremal: bool

    def __bool__(self) -> bool:
        return self.ok


def _require_symmetric(mat: Matrix, name: str) -> Matrix:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.T).max() > _ASYM_GUARD * scale:
        raise ValueError(f"{name} is not symmetric")
    return symmetrize(mat)


def is_psd(mat: Matrix, tol: float) -> PsdCheck:
    """Eigenvalue test for positive semidefiniteness with slack ``tol``."""
    sym = _require_symmetric(mat, "matrix")
    if sym.shape[0] == 0:
        return PsdCheck(ok=True, min_eig=np.inf, boundary=False)
    min_eig = float(np.linalg.eigvalsh(sym).min())
    return PsdCheck(ok=min_eig >= -tol, min_eig=min_eig, boundary=abs(min_eig) <= tol)


def uncertainty_ok(V: Matrix, model: SystemModel, tol: float | None = None) -> PsdCheck:
    """Schroedinger-Heisenberg uncertainty test: V + i(hbar/2) Sigma >= 0.

    For a single mode the test is equivalent to det(V) >= hbar^2/4; both
    routes are evaluated and must agree.
    """
    if tol is None:
        tol = default_tol(model)
    sym = _require_symmetric(V, "V")
    sigma = symplectic_form(model.N)
    herm = sym + 0.5j * model.hbar * sigma
    min_eig = float(np.linalg.eigvalsh(herm).min())
    check = PsdCheck(ok=min_eig >= -tol, min_eig=min_eig, boundary=abs(min_eig) <= tol)
    if model.N == 1 and np.all(np.diag(sym) >= -tol):
        # Single-mode cross-check; the two routes may disagree only inside a
        # narrow band around the constraint surface.
        quarter = 0.25 * model.hbar**2
        det_margin = float(np.linalg.det(sym)) - quarter * (1.0 - max(tol, 1e-12))
        band = 10.0 * tol * max(1.0, abs(float(np.trace(sym))))
        det_ok = det_margin >= 0
        clearly_off_surface = abs(det_margin) > band and abs(min_eig) > 10.0 * tol
        if det_ok != check.ok and clearly_off_surface:
            raise AssertionError(
                "uncertainty predicates disagree: "
                f"eigencheck {check.ok}, determinant check {det_ok}"
            )
    return check


def purity(V: Matrix, model: SystemModel) -> float:
    """Gaussian purity (hbar/2)^N / sqrt(det V); 1 for pure states."""
    sym = _require_symmetric(V, "V")
    det = float(np.linalg.det(sym))
    if det <= 0:
        raise ValueError(f"V is singular or indefinite (det {det:.3e}); purity undefined")
    return float((0.5 * model.hbar) ** model.N / np.sqrt(det))


def fits_within(
    V_outer: Matrix | UnconditionedBound, V_inner: Matrix, tol: float
) -> PsdCheck:
    """Test whether ``V_inner`` fits inside ``V_outer`` in phase space.

    ``V_outer`` may be an ``UnconditionedBound``; divergent directions are
    then automatically satisfied and the test runs on the finite subspace.
    """
    if isinstance(V_outer, UnconditionedBound):
        if V_outer.n_finite == 0:
            return PsdCheck(ok=True, min_eig=np.inf, boundary=False)
        diff = V_outer.cov_finite - V_outer.project(V_inner)
        return is_psd(diff, tol)
    outer = _require_symmetric(V_outer, "V_outer")
    inner = _require_symmetric(V_inner, "V_inner")
    if outer.shape != inner.shape:
        raise ValueError(f"shape mismatch: {outer.shape} vs {inner.shape}")
    return is_psd(outer - inner, tol)


def check_realizable(
    model: SystemModel, u_o: Unravelling, V: Matrix, tol: float | None = None
) -> RealizableCheck:
    """Realizability test of a putative true covariance.

    The covariance is realizable when the residual of the filtered
    steady-state equation, evaluated at ``V``, is positive semidefinite.
    It is extremal when that residual is additionally rank-deficient
    (an eigenvalue within ``tol`` of zero).
    """
    if tol is None:
        tol = default_tol(model)
    residual = realizability_residual(V, model, u_o)
    eigs = np.linalg.eigvalsh(residual)
    min_eig = float(eigs.min())
    ok = min_eig >= -tol
    extremal = ok and bool(np.any(np.abs(eigs) <= tol))
    return RealizableCheck(ok=ok, min_eig=min_eig, extremal=extremal)


# ---------------------------------------------------------------------------
# Putative-covariance parameterization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PutativeParams:
    """Two-parameter chart of single-mode pure covariances.

    ``gamma`` is the p-variance in units of hbar/2; ``delta`` is the
    normalized correlation.  The q-variance is fixed by purity.
    """

    gamma: float
    delta: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not abs(self.delta) < 1:
            raise ValueError(
                f"|delta| must be < 1 for a pure state, got {self.delta}"
            )


def param_to_cov(params: PutativeParams, model: SystemModel) -> Matrix:
    """Covariance (hbar/2) [[alpha, beta], [beta, gamma]] of the pure state.

    beta = delta / sqrt(1 - delta^2) and alpha = 1 / (gamma (1 - delta^2)),
    which enforces alpha*gamma - beta^2 = 1 exactly.
    """
    if model.N != 1:
        raise ValueError("the (gamma, delta) chart covers single-mode models only")
    g = params.gamma
    d = params.delta
    one_minus = 1.0 - d * d
    beta = d / np.sqrt(one_minus)
    alpha = 1.0 / (g * one_minus)
    return 0.5 * model.hbar * np.array([[alpha, beta], [beta, g]])


def cov_to_params(V: Matrix, model: SystemModel) -> PutativeParams:
    """Read (gamma, delta) coordinates off a single-mode covariance."""
    if model.N != 1:
        raise ValueError("the (gamma, delta) chart covers single-mode models only")
    sym = _require_symmetric(V, "V")
    half = 0.5 * model.hbar
    alpha = sym[0, 0] / half
    beta = sym[0, 1] / half
    gamma = sym[1, 1] / half
    if alpha <= 0 or gamma <= 0:
        raise ValueError("covariance has non-positive diagonal; no chart coordinates")
    return PutativeParams(gamma=float(gamma), delta=float(beta / np.sqrt(alpha * gamma)))


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

class FilterContext:
    """Steady-state quantities shared by every classification of one model.

    The filtered covariance and the unconditioned bound are computed once;
    the retrofiltered covariance is solved lazily on first use.
    """

    def __init__(
        self,
        model: SystemModel,
        u_o: Unravelling,
        cfg: SteadySolveConfig | None = None,
    ):
        self.model = model
        self.u_o = u_o
        self.cfg = cfg or SteadySolveConfig()
        self.V_F = filtered_steady(model, u_o, self.cfg)
        self.bound = unconditioned_bound(model)

    @cached_property
    def V_R(self) -> Matrix:
        return retrofiltered_steady(self.model, self.u_o, self.cfg)


_CONTEXT_CACHE: dict[tuple, FilterContext] = {}
_CONTEXT_LOCK = threading.Lock()


def steady_context(
    model: SystemModel, u_o: Unravelling, cfg: SteadySolveConfig | None = None
) -> FilterContext:
    """Return a (cached) ``FilterContext``; cache keys compare by value."""
    cfg = cfg or SteadySolveConfig()
    key = (
        model.N,
        model.hbar,
        model.A.tobytes(),
        model.D.tobytes(),
        u_o.C.tobytes(),
        u_o.Gamma.tobytes(),
        cfg.dt,
        cfg.t_max,
        cfg.tol,
    )
    with _CONTEXT_LOCK:
        ctx = _CONTEXT_CACHE.get(key)
    if ctx is None:
        ctx = FilterContext(model, u_o, cfg)
        with _CONTEXT_LOCK:
            _CONTEXT_CACHE.setdefault(key, ctx)
    return ctx


@dataclass(frozen=True)
class RealizabilityReport:
    """Aggregated outcome of all tiers for one putative true covariance."""

    is_symmetric: bool
    uncertainty_ok: bool
    purity: float
    fits_unconditioned: bool
    fits_filtered: bool
    realizable: bool
    extremal: bool
    min_eigs: dict[str, float]
    tol: float

    def boundary_flags(self) -> dict[str, bool]:
        """Checks whose margin eigenvalue lies in the tolerance band."""
        return {
            name: abs(value) <= self.tol
            for name, value in self.min_eigs.items()
            if np.isfinite(value)
        }

    def to_dict(self) -> dict:
        return {
            "is_symmetric": self.is_symmetric,
            "uncertainty_ok": self.uncertainty_ok,
            "purity": self.purity,
            "fits_unconditioned": self.fits_unconditioned,
            "fits_filtered": self.fits_filtered,
            "realizable": self.realizable,
            "extremal": self.extremal,
            "min_eigs": dict(self.min_eigs),
            "boundary": self.boundary_flags(),
            "tol": self.tol,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def classify(
    model: SystemModel,
    u_o: Unravelling,
    V: Matrix,
    cfg: SteadySolveConfig | None = None,
    tol: float | None = None,
    context: FilterContext | None = None,
) -> RealizabilityReport:
    """Run every tier check on ``V`` and collect the margins."""
    if tol is None:
        tol = default_tol(model)
    ctx = context if context is not None else steady_context(model, u_o, cfg)
    sym = _require_symmetric(V, "V")
    scale = max(1.0, float(np.abs(sym).max()))
    is_symmetric = bool(
        np.abs(np.asarray(V, dtype=float) - np.asarray(V, dtype=float).T).max()
        <= 1e-12 * scale
    )

    unc = uncertainty_ok(sym, model, tol)
    try:
        pur = purity(sym, model)
    except ValueError:
        pur = float("nan")
    fit_unc = fits_within(ctx.bound, sym, tol)
    fit_filt = fits_within(ctx.V_F, sym, tol)
    realizable = check_realizable(model, u_o, sym, tol)

    return RealizabilityReport(
        is_symmetric=is_symmetric,
        uncertainty_ok=unc.ok,
        purity=pur,
        fits_unconditioned=fit_unc.ok,
        fits_filtered=fit_filt.ok,
        realizable=realizable.ok,
        extremal=realizable.extremal,
        min_eigs={
            "uncertainty": unc.min_eig,
            "unconditioned_fit": fit_unc.min_eig,
            "filtered_fit": fit_filt.min_eig,
            "realizable": realizable.min_eig,
        },
        tol=tol,
    )
