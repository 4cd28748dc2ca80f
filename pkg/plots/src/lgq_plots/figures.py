"""Figure rendering from the lgq CSV outputs.

Two figures are supported: a multi-panel phase-space view of covariance
contours before and after evolution, and a heat map of the smoothed-state
determinant over the putative-covariance chart with the constraint
boundaries and marker overlays.  Rendering is purely presentational; all
curves and markers are read from the CSV columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    InputError,
    read_boundary,
    read_ellipses,
    read_markers,
    read_sweep,
)

#: Line styles per contour role in the ellipse panels.
CONTOUR_STYLES = {
    "initial": {"color": "0.25", "linestyle": "-", "linewidth": 1.6},
    "translated": {"color": "0.25", "linestyle": "--", "linewidth": 1.2},
    "evolved": {"color": "0.65", "linestyle": "-", "linewidth": 1.6},
    "filtered": {"color": "tab:blue", "linestyle": "-.", "linewidth": 1.1},
    "unconditioned": {"color": "tab:red", "linestyle": "-.", "linewidth": 1.1},
}

#: Marker glyphs for the classification overlays.
MARKER_GLYPHS = {
    "triangle": "^",
    "square": "s",
    "circle": "o",
    "diamond": "D",
    "star": "*",
}

#: Contours that represent open curves and must not be closed.
_OPEN_CONTOURS = {"unconditioned"}


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSVs, output image, panel and overlay choices."""

    source_csv: Path
    output: Path
    panels: tuple[str, ...] | None = None
    markers_csv: Path | None = None
    boundary_csv: Path | None = None
    dpi: int = 200

    def __post_init__(self):
        object.__setattr__(self, "source_csv", Path(self.source_csv))
        object.__setattr__(self, "output", Path(self.output))
        if not self.source_csv.exists():
            raise InputError(f"input file {self.source_csv} does not exist")
        for attr in ("markers_csv", "boundary_csv"):
            value = getattr(self, attr)
            if value is not None:
                value = Path(value)
                object.__setattr__(self, attr, value)
                if not value.exists():
                    raise InputError(f"input file {value} does not exist")


def plot_ellipses(spec: FigureSpec) -> dict:
    """Render the covariance-contour panels; returns a drawing summary."""
    table = read_ellipses(spec.source_csv)
    panels = list(spec.panels) if spec.panels else table.panels
    unknown = [p for p in panels if p not in table.panels]
    if unknown:
        raise InputError(f"panel(s) {', '.join(unknown)} not present in {spec.source_csv}")

    n = len(panels)
    ncols = 2 if n >= 2 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.2 * ncols, 3.6 * nrows), squeeze=False
    )
    drawn: dict[str, list[str]] = {}
    for index, panel in enumerate(panels):
        ax = axes[index // ncols][index % ncols]
        drawn[panel] = []
        for (name, contour, segment), points in table.groups.items():
            if name != panel:
                continue
            closed = contour not in _OPEN_CONTOURS
            xy = np.vstack([points, points[:1]]) if closed else points
            style = CONTOUR_STYLES.get(contour, {"color": "k", "linestyle": ":"})
            label = contour if contour not in drawn[panel] else None
            ax.plot(xy[:, 0], xy[:, 1], label=label, **style)
            if contour not in drawn[panel]:
                drawn[panel].append(contour)
        ax.set_title(f"({panel})")
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        ax.set_aspect("equal")
        ax.axhline(0.0, color="0.9", linewidth=0.6, zorder=0)
        ax.axvline(0.0, color="0.9", linewidth=0.6, zorder=0)
    for index in range(n, nrows * ncols):
        axes[index // ncols][index % ncols].set_axis_off()
    axes[0][0].legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=spec.dpi)
    plt.close(fig)
    return {"output": str(spec.output), "panels": panels, "contours": drawn}


def _boundary_segments(ax, gammas, deltas, field, **style):
    """Marching-squares boundary of a boolean field, via a mid-level contour."""
    contour = ax.contour(
        gammas, deltas, field.T.astype(float), levels=[0.5], **style
    )
    return [np.asarray(seg) for seg in contour.allsegs[0]]


def plot_heatmap(spec: FigureSpec) -> dict:
    """Render the smoothed-determinant heat map; returns a drawing summary."""
    table = read_sweep(spec.source_csv)
    values = np.ma.masked_invalid(table.det_vs)
    values = np.ma.masked_where(table.singular, values)

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    mesh = ax.pcolormesh(
        table.gammas, table.deltas, values.T, shading="nearest", cmap="viridis"
    )
    fig.colorbar(mesh, ax=ax, label="normalized smoothed determinant")

    summary: dict = {"output": str(spec.output), "masked_cells": int(values.mask.sum())}

    finite = np.where(np.isfinite(table.det_vs), table.det_vs, 0.0)
    class_contour = ax.contour(
        table.gammas, table.deltas, finite.T, levels=[1.0],
        colors="black", linewidths=1.6, linestyles="solid",
    )
    summary["class_boundary_segments"] = len(class_contour.allsegs[0])

    tier_styles = {
        "unc_fit": {"colors": "tab:orange", "linestyles": "dashdot"},
        "filt_fit": {"colors": "tab:green", "linestyles": "dotted"},
        "realizable": {"colors": "tab:blue", "linestyles": "dashed"},
    }
    for tier, style in tier_styles.items():
        segments = _boundary_segments(
            ax, table.gammas, table.deltas, table.tiers[tier],
            linewidths=1.2, **style,
        )
        summary[f"{tier}_boundary_segments"] = len(segments)
        summary[f"{tier}_boundary_points"] = (
            np.vstack(segments) if segments else np.empty((0, 2))
        )

    if spec.boundary_csv is not None:
        boundary = read_boundary(spec.boundary_csv)
        ax.plot(
            boundary.gammas, boundary.deltas, color="white",
            linewidth=0.8, marker=".", markersize=2, linestyle="none",
        )
        summary["extremal_points"] = len(boundary.gammas)

    markers_drawn: list[str] = []
    if spec.markers_csv is not None:
        markers = read_markers(spec.markers_csv)
        for label, gamma, delta in zip(markers.labels, markers.gammas, markers.deltas):
            glyph = MARKER_GLYPHS.get(label, "x")
            ax.plot(
                gamma, delta, marker=glyph, color="white",
                markeredgecolor="black", markersize=9, linestyle="none",
            )
            markers_drawn.append(label)
    summary["markers"] = markers_drawn

    ax.set_xlabel("gamma")
    ax.set_ylabel("delta")
    ax.set_xlim(table.gammas[0], table.gammas[-1])
    ax.set_ylim(table.deltas[0], table.deltas[-1])
    fig.tight_layout()
    fig.savefig(spec.output, dpi=spec.dpi)
    plt.close(fig)
    return summary
