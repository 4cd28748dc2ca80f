"""Built-in example system: the on-threshold optical parametric oscillator.

The preset pins the standard case study: drift diag(0, -2), diffusion
hbar I, a half-efficient homodyne observer at phase 3*pi/8, and two named
completions of the monitoring (a homodyne at -pi/8 and a balanced
heterodyne).  Four putative true covariances are shipped as fixtures; the
``c`` fixture keeps its published hbar/3 prefactor, with the hbar/2 variant
available separately as ``c_hbar2``.
"""

from __future__ import annotations

import numpy as np

from .model import (
    Matrix,
    ModelFile,
    SystemModel,
    make_heterodyne,
    make_homodyne,
)

#: Observed homodyne parameters of the preset.
OPO_ETA_OBSERVED = 0.5
OPO_THETA_OBSERVED = 3.0 * np.pi / 8.0

#: Named unobserved completions.
UNOBSERVED_HOMODYNE = "homodyne:-pi/8"
UNOBSERVED_HETERODYNE = "heterodyne:balanced"


def opo_model(hbar: float = 1.0) -> ModelFile:
    """The on-threshold OPO with its named unravellings."""
    model = SystemModel(
        N=1,
        A=np.diag([0.0, -2.0]),
        D=hbar * np.eye(2),
        hbar=hbar,
    )
    unravellings = {
        "alice": make_homodyne(model, OPO_ETA_OBSERVED, OPO_THETA_OBSERVED),
        UNOBSERVED_HOMODYNE: make_homodyne(
            model, 1.0 - OPO_ETA_OBSERVED, -np.pi / 8.0
        ),
        UNOBSERVED_HETERODYNE: make_heterodyne(model, 1.0 - OPO_ETA_OBSERVED, 0.0),
    }
    return ModelFile(model=model, unravellings=unravellings)


def opo_test_covariances(hbar: float = 1.0) -> dict[str, Matrix]:
    """The four putative true covariances used throughout the OPO example.

    ``c`` uses the hbar/3 prefactor exactly as published; ``c_hbar2`` is the
    same matrix with an hbar/2 prefactor, under which it is (nearly) pure.
    """
    half = hbar / 2.0
    third = hbar / 3.0
    return {
        "a": half * np.array([[2.41, 0.0], [0.0, 0.41]]),
        "b": half * np.array([[3.18, 0.49], [0.49, 0.39]]),
        "c": third * np.array([[5.02, -0.50], [-0.50, 0.25]]),
        "c_hbar2": half * np.array([[5.02, -0.50], [-0.50, 0.25]]),
        "d": half * np.array([[1.93, 0.79], [0.79, 0.84]]),
    }


PRESET_MODELS = {"opo": opo_model}


def load_preset(name: str) -> ModelFile:
    try:
        factory = PRESET_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(PRESET_MODELS))
        raise ValueError(f"unknown preset {name!r}; known presets: {known}") from None
    return factory()
