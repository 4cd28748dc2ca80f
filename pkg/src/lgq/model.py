"""System and measurement-unravelling data types for linear Gaussian quantum models.

A model is an Ornstein-Uhlenbeck evolution of the phase-space vector
x = (q_1, p_1, ..., q_N, p_N): the mean drifts with matrix ``A`` and the
covariance picks up diffusion ``D``.  A continuous measurement record is
described by an output map ``C`` (what the record reads out) and a
back-action map ``Gamma`` (how the record conditions the state).  Both are
M x 2N for M simultaneous record channels.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

Matrix = NDArray[np.float64]

#: Relative asymmetry accepted when validating covariance matrices.
SYMMETRY_RTOL = 1e-12


def _as_matrix(value, shape: tuple[int, int], name: str) -> Matrix:
    out = np.array(value, dtype=float)
    if out.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} has non-finite entries")
    out.setflags(write=False)
    return out


def symmetrize(mat: Matrix) -> Matrix:
    """Return the symmetric part (M + M^T)/2."""
    return 0.5 * (mat + mat.T)


def cov_matrix(entries, dim: int | None = None) -> Matrix:
    """Validate and return a covariance matrix.

    The input must be square with even dimension, finite, and symmetric to
    within ``SYMMETRY_RTOL`` relative to its magnitude.  The returned array
    is exactly symmetric and read-only.
    """
    mat = np.array(entries, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"covariance must be square, got shape {mat.shape}")
    if dim is not None and mat.shape[0] != dim:
        raise ValueError(f"covariance must be {dim}x{dim}, got {mat.shape}")
    if mat.shape[0] % 2 != 0:
        raise ValueError("covariance dimension must be even (2 per mode)")
    if not np.all(np.isfinite(mat)):
        raise ValueError("covariance has non-finite entries")
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.T).max() > SYMMETRY_RTOL * scale:
        raise ValueError("covariance is not symmetric")
    sym = symmetrize(mat)
    sym.setflags(write=False)
    return sym


@dataclass(frozen=True)
class SystemModel:
    """Drift/diffusion description of N bosonic modes.

    Attributes
    ----------
    N:
        Number of modes; the phase-space dimension is 2N.
    hbar:
        Action unit.  Covariances are often displayed in units of hbar/2.
    A:
        2N x 2N drift matrix of the mean.
    D:
        2N x 2N symmetric positive-semidefinite diffusion matrix.
    """

    N: int
    A: Matrix
    D: Matrix
    hbar: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        dim = 2 * self.N
        object.__setattr__(self, "A", _as_matrix(self.A, (dim, dim), "A"))
        object.__setattr__(self, "D", cov_matrix(self.D, dim))
        dmin = float(np.linalg.eigvalsh(self.D).min())
        if dmin < -1e-10 * max(1.0, float(np.abs(self.D).max())):
            raise ValueError(f"D must be positive semidefinite (min eig {dmin:.3e})")

    @property
    def dim(self) -> int:
        return 2 * self.N

    def vacuum(self) -> Matrix:
        """Covariance of the N-mode vacuum, (hbar/2) I."""
        return cov_matrix(0.5 * self.hbar * np.eye(self.dim))


@dataclass(frozen=True)
class Unravelling:
    """One diffusive measurement scheme: M record channels on 2N quadratures.

    ``C`` maps the true mean into the record drift, ``Gamma`` encodes the
    measurement back-action.  M = 0 is allowed and represents "no record".
    """

    C: Matrix
    Gamma: Matrix

    def __post_init__(self):
        c = np.array(self.C, dtype=float)
        if c.ndim != 2:
            raise ValueError("C must be a 2-d array")
        object.__setattr__(self, "C", _as_matrix(c, c.shape, "C"))
        object.__setattr__(self, "Gamma", _as_matrix(self.Gamma, c.shape, "Gamma"))

    @property
    def M(self) -> int:
        return self.C.shape[0]

    @property
    def dim(self) -> int:
        return self.C.shape[1]


@dataclass(frozen=True)
class GaussianState:
    """Phase-space mean and covariance of a Gaussian state."""

    mean: NDArray[np.float64]
    cov: Matrix

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = cov_matrix(self.cov)
        if mean.size != cov.shape[0]:
            raise ValueError(
                f"mean length {mean.size} does not match covariance {cov.shape}"
            )
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def symplectic_form(n_modes: int) -> Matrix:
    """Block-diagonal symplectic form: N copies of [[0, 1], [-1, 0]]."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.kron(np.eye(n_modes), block)
    out.setflags(write=False)
    return out


def make_homodyne(
    model: SystemModel, eta: float, theta: float, mode_index: int = 0
) -> Unravelling:
    """Single-channel homodyne detection of one mode's rotated quadrature.

    Parameters
    ----------
    eta:
        Detection efficiency in (0, 1].
    theta:
        Local-oscillator phase in radians; theta = 0 reads out q.
    mode_index:
        Which mode the detector watches.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    if not 0 <= mode_index < model.N:
        raise ValueError(f"mode_index {mode_index} out of range for N={model.N}")
    c = np.zeros((1, model.dim))
    amp = 2.0 * np.sqrt(eta / model.hbar)
    c[0, 2 * mode_index] = amp * np.cos(theta)
    c[0, 2 * mode_index + 1] = amp * np.sin(theta)
    return Unravelling(C=c, Gamma=-0.5 * model.hbar * c)


def make_heterodyne(
    model: SystemModel, eta: float, theta: float, mode_index: int = 0
) -> Unravelling:
    """Balanced heterodyne detection: two homodyne channels split 50/50.

    Modeled as simultaneous homodynes at phases theta and theta + pi/2,
    each carrying half the total efficiency ``eta``.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    first = make_homodyne(model, eta / 2.0, theta, mode_index)
    second = make_homodyne(model, eta / 2.0, theta + np.pi / 2.0, mode_index)
    return stack(first, second)


def empty_unravelling(model: SystemModel) -> Unravelling:
    """The zero-channel unravelling (no record at all)."""
    shape = (0, model.dim)
    return Unravelling(C=np.zeros(shape), Gamma=np.zeros(shape))


def stack(u1: Unravelling, u2: Unravelling) -> Unravelling:
    """Concatenate two unravellings into one with M1 + M2 channels."""
    if u1.dim != u2.dim:
        raise ValueError(f"cannot stack unravellings on {u1.dim} and {u2.dim} quadratures")
    return Unravelling(
        C=np.vstack([u1.C, u2.C]), Gamma=np.vstack([u1.Gamma, u2.Gamma])
    )


def kappa(V: Matrix, u: Unravelling, sign: int) -> Matrix:
    """Conditioning gain K_sign[V] = V C^T + sign * Gamma^T (2N x M)."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    V = np.asarray(V, dtype=float)
    if V.shape != (u.dim, u.dim):
        raise ValueError(f"V shape {V.shape} does not match unravelling on {u.dim}")
    return V @ u.C.T + sign * u.Gamma.T


def half_hbar_units(mat: Matrix, model: SystemModel) -> Matrix:
    """Rescale a covariance-like matrix into units of hbar/2 for display."""
    return np.asarray(mat, dtype=float) * (2.0 / model.hbar)


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelFile:
    """A system model plus its named unravellings, as loaded from JSON."""

    model: SystemModel
    unravellings: dict[str, Unravelling] = field(default_factory=dict)

    def unravelling(self, name: str) -> Unravelling:
        try:
            return self.unravellings[name]
        except KeyError:
            known = ", ".join(sorted(self.unravellings)) or "(none)"
            raise ValueError(f"unknown unravelling {name!r}; known: {known}") from None


def _unravelling_from_spec(model: SystemModel, name: str, spec: dict) -> Unravelling:
    kind = spec.get("type")
    if kind == "homodyne":
        return make_homodyne(
            model, float(spec["eta"]), float(spec["theta"]),
            int(spec.get("mode_index", 0)),
        )
    if kind == "heterodyne":
        return make_heterodyne(
            model, float(spec["eta"]), float(spec["theta"]),
            int(spec.get("mode_index", 0)),
        )
    if kind == "explicit":
        c = np.array(spec["C"], dtype=float)
        g = np.array(spec["Gamma"], dtype=float)
        if c.ndim != 2 or c.shape[1] != model.dim:
            raise ValueError(f"unravelling {name!r}: C must be M x {model.dim}")
        return Unravelling(C=c, Gamma=g)
    raise ValueError(f"unravelling {name!r} has unknown type {kind!r}")


def model_from_dict(doc: dict) -> ModelFile:
    """Build a model and its unravellings from a parsed JSON document."""
    try:
        n = int(doc["N"])
        a = doc["A"]
        d = doc["D"]
    except KeyError as exc:
        raise ValueError(f"model document missing required key {exc}") from None
    model = SystemModel(N=n, A=a, D=d, hbar=float(doc.get("hbar", 1.0)))
    unravellings = {
        name: _unravelling_from_spec(model, name, spec)
        for name, spec in doc.get("unravellings", {}).items()
    }
    return ModelFile(model=model, unravellings=unravellings)


def load_model(path: str | Path) -> ModelFile:
    """Load a model JSON file (angles in radians, matrices row-major)."""
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: model document must be a JSON object")
    return model_from_dict(doc)


def model_to_dict(model: SystemModel) -> dict:
    return {
        "N": model.N,
        "hbar": model.hbar,
        "A": model.A.tolist(),
        "D": model.D.tolist(),
    }


def model_hash(model: SystemModel) -> str:
    """Short content hash of the model, for embedding in output files."""
    payload = json.dumps(model_to_dict(model), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:12]
