"""Synthetic CSV fixtures matching the lgq file formats."""

import numpy as np
import pytest


def write_synthetic_sweep(path):
    """A 6x5 grid: tier cuts at gamma 0.5/0.35/0.3, class boundary at 1.0."""
    gammas = np.linspace(0.1, 1.1, 6)
    deltas = np.linspace(-0.4, 0.4, 5)
    lines = [
        "# model_hash=synthetic",
        "# grid=0.1:1.1:6,-0.4:0.4:5",
        "gamma,delta,pure,sclass,unc_fit,filt_fit,realizable,extremal,det_vs,singular",
    ]
    for i, g in enumerate(gammas):
        for j, d in enumerate(deltas):
            singular = int(i == 2 and j == 2)
            det = "nan" if singular else f"{2.0 - g:.6f}"
            lines.append(
                f"{g:.6f},{d:.6f},1,1,{int(g < 0.5)},{int(g < 0.35)},"
                f"{int(g < 0.3)},0,{det},{singular}"
            )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_synthetic_ellipses(path):
    """One panel with all five contour roles; circles plus two open lines."""
    phi = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    lines = [
        "# seed=0",
        "panel,contour,segment,idx,q,p",
    ]

    def add_circle(contour, radius, center=(0.0, 0.0)):
        for idx, angle in enumerate(phi):
            q = center[0] + radius * np.cos(angle)
            p = center[1] + radius * np.sin(angle)
            lines.append(f"a,{contour},0,{idx},{q:.9f},{p:.9f}")

    add_circle("initial", 1.0)
    add_circle("translated", 1.0, center=(0.5, 0.2))
    add_circle("evolved", 1.5, center=(0.5, 0.2))
    add_circle("filtered", 2.0)
    for segment, sign in ((0, 1.0), (1, -1.0)):
        for idx, q in enumerate(np.linspace(-3, 3, 12)):
            lines.append(f"a,unconditioned,{segment},{idx},{q:.9f},{0.5 * sign:.9f}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_synthetic_markers(path):
    lines = [
        "label,gamma,delta,purity,sclass,unc_fit,filt_fit,realizable,extremal",
        "triangle,0.41,0.0,1.0,1,1,1,1,1",
        "star,0.39,0.16,1.0,1,1,1,1,0",
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def sweep_csv(tmp_path):
    return write_synthetic_sweep(tmp_path / "sweep.csv")


@pytest.fixture
def ellipses_csv(tmp_path):
    return write_synthetic_ellipses(tmp_path / "fig2.csv")


@pytest.fixture
def markers_csv(tmp_path):
    return write_synthetic_markers(tmp_path / "markers.csv")
