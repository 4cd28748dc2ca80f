"""Readers for the lgq CSV formats.

All files start with ``# key=value`` comment lines followed by a header
row.  The readers validate the headers they depend on and never recompute
any physics: every number plotted comes straight out of a column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """An input CSV is missing, malformed, or lacks required columns."""


def read_table(path: Path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Parse a CSV into (metadata, header, rows of strings)."""
    if not Path(path).exists():
        raise InputError(f"input file {path} does not exist")
    metadata: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, newline="", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    metadata[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
            else:
                rows.append(cells)
    if header is None:
        raise InputError(f"{path}: no header row found")
    return metadata, header, rows


def _require_columns(path: Path, header: list[str], needed: list[str]) -> dict[str, int]:
    missing = [name for name in needed if name not in header]
    if missing:
        raise InputError(f"{path}: missing column(s) {', '.join(missing)}")
    return {name: header.index(name) for name in needed}


@dataclass(frozen=True)
class EllipseTable:
    """Contour points grouped by (panel, contour, segment), in file order."""

    metadata: dict[str, str]
    panels: list[str]
    groups: dict[tuple[str, str, int], np.ndarray]


def read_ellipses(path: Path) -> EllipseTable:
    metadata, header, rows = read_table(path)
    cols = _require_columns(path, header, ["panel", "contour", "segment", "idx", "q", "p"])
    panels: list[str] = []
    points: dict[tuple[str, str, int], list[tuple[float, float]]] = {}
    for row in rows:
        panel = row[cols["panel"]]
        key = (panel, row[cols["contour"]], int(row[cols["segment"]]))
        if panel not in panels:
            panels.append(panel)
        points.setdefault(key, []).append(
            (float(row[cols["q"]]), float(row[cols["p"]]))
        )
    groups = {key: np.array(value) for key, value in points.items()}
    return EllipseTable(metadata=metadata, panels=panels, groups=groups)


@dataclass(frozen=True)
class SweepTable:
    """The (gamma, delta) scan as 2-d arrays indexed [i_gamma, i_delta]."""

    metadata: dict[str, str]
    gammas: np.ndarray
    deltas: np.ndarray
    det_vs: np.ndarray
    singular: np.ndarray
    tiers: dict[str, np.ndarray]  # boolean fields: unc_fit, filt_fit, realizable


def read_sweep(path: Path) -> SweepTable:
    metadata, header, rows = read_table(path)
    needed = ["gamma", "delta", "unc_fit", "filt_fit", "realizable", "det_vs", "singular"]
    cols = _require_columns(path, header, needed)
    raw = {
        name: np.array([float(row[cols[name]]) for row in rows]) for name in needed
    }
    gammas = np.unique(raw["gamma"])
    deltas = np.unique(raw["delta"])
    shape = (gammas.size, deltas.size)
    if gammas.size * deltas.size != len(rows):
        raise InputError(f"{path}: rows do not form a complete gamma x delta grid")
    # sort gamma-major so reshape lands every row in its grid cell
    order = np.lexsort((raw["delta"], raw["gamma"]))

    def grid(name: str) -> np.ndarray:
        return raw[name][order].reshape(shape)

    return SweepTable(
        metadata=metadata,
        gammas=gammas,
        deltas=deltas,
        det_vs=grid("det_vs"),
        singular=grid("singular").astype(bool),
        tiers={
            "unc_fit": grid("unc_fit").astype(bool),
            "filt_fit": grid("filt_fit").astype(bool),
            "realizable": grid("realizable").astype(bool),
        },
    )


@dataclass(frozen=True)
class MarkerTable:
    metadata: dict[str, str]
    labels: list[str]
    gammas: np.ndarray
    deltas: np.ndarray


def read_markers(path: Path) -> MarkerTable:
    metadata, header, rows = read_table(path)
    cols = _require_columns(path, header, ["label", "gamma", "delta"])
    labels = [row[cols["label"]] for row in rows]
    gammas = np.array([float(row[cols["gamma"]]) for row in rows])
    deltas = np.array([float(row[cols["delta"]]) for row in rows])
    return MarkerTable(metadata=metadata, labels=labels, gammas=gammas, deltas=deltas)


@dataclass(frozen=True)
class BoundaryTable:
    metadata: dict[str, str]
    thetas: np.ndarray
    gammas: np.ndarray
    deltas: np.ndarray


def read_boundary(path: Path) -> BoundaryTable:
    metadata, header, rows = read_table(path)
    cols = _require_columns(path, header, ["theta_u", "gamma", "delta"])
    thetas = np.array([float(row[cols["theta_u"]]) for row in rows])
    gammas = np.array([float(row[cols["gamma"]]) for row in rows])
    deltas = np.array([float(row[cols["delta"]]) for row in rows])
    order = np.argsort(thetas)
    return BoundaryTable(
        metadata=metadata,
        thetas=thetas[order],
        gammas=gammas[order],
        deltas=deltas[order],
    )
