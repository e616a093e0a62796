"""Voxel-based coverage of a behaviour database.

The discovered behaviours define the bounds of the measurable space;
the box is partitioned into voxels of a chosen edge length and the
substrate's quality is the number of voxels occupied at least once.
Comparisons between databases always share the union bounding box so
the counts are commensurable.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .exceptions import ConfigurationError

DEFAULT_VOXEL_EDGE = 10.0


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 3)
    if arr.ndim != 2:
        raise ValueError(f"behaviour points must form an (n, d) array, got shape {arr.shape}")
    return arr


def _as_edges(edge_lengths, dim: int) -> np.ndarray:
    edges = np.asarray(edge_lengths, dtype=float)
    if edges.ndim == 0:
        edges = np.full(dim, float(edges))
    if edges.shape != (dim,):
        raise ConfigurationError(f"need one voxel edge per axis ({dim}), got {edge_lengths!r}")
    if np.any(edges <= 0) or not np.all(np.isfinite(edges)):
        raise ConfigurationError(f"voxel edges must be positive and finite, got {edge_lengths!r}")
    return edges


def bounds_of(points) -> tuple[np.ndarray, np.ndarray]:
    points = _as_points(points)
    if points.shape[0] == 0:
        raise ValueError("cannot take bounds of an empty point set")
    return points.min(axis=0), points.max(axis=0)


def union_bounds(*bounds) -> tuple[np.ndarray, np.ndarray]:
    mins = np.min([b[0] for b in bounds], axis=0)
    maxs = np.max([b[1] for b in bounds], axis=0)
    return mins, maxs


def occupied_cells(points, edge_lengths, bounds=None) -> np.ndarray:
    """Distinct voxel index triples containing at least one point.

    Cells are half-open along each axis except the last one, which is
    closed at the global maximum so boundary points stay countable.
    """
    points = _as_points(points)
    if points.shape[0] == 0:
        return np.empty((0, 3), dtype=int)
    edges = _as_edges(edge_lengths, points.shape[1])
    mins, maxs = bounds if bounds is not None else bounds_of(points)
    mins = np.asarray(mins, dtype=float)
    maxs = np.asarray(maxs, dtype=float)
    if np.any(points < mins) or np.any(points > maxs):
        raise ValueError("bounds do not enclose all behaviour points")
    n_cells = np.maximum(1, np.ceil((maxs - mins) / edges - 1e-12).astype(int))
    idx = np.floor((points - mins) / edges).astype(int)
    idx = np.minimum(idx, n_cells - 1)
    return np.unique(idx, axis=0)


def coverage(points, edge_lengths=DEFAULT_VOXEL_EDGE, bounds=None) -> int:
    """Number of distinct voxels occupied by the behaviour points."""
    return int(occupied_cells(points, edge_lengths, bounds).shape[0])


def coverage_curve(points, generations, edge_lengths=DEFAULT_VOXEL_EDGE, interval: int = 200, bounds=None):
    """Coverage of the database prefix after every ``interval`` generations.

    Returns a list of (generation, coverage) pairs ending at the last
    generation; the voxel bounds are fixed from the whole database (or
    the given bounds) so the curve is non-decreasing.
    """
    points = _as_points(points)
    generations = np.asarray(generations, dtype=int)
    if generations.shape[0] != points.shape[0]:
        raise ValueError("one generation stamp per behaviour point is required")
    if int(interval) < 1:
        raise ConfigurationError("interval must be >= 1")
    if points.shape[0] == 0:
        return []
    if bounds is None:
        bounds = bounds_of(points)
    last = int(generations.max())
    checkpoints = list(range(int(interval), last + 1, int(interval)))
    if not checkpoints or checkpoints[-1] != last:
        checkpoints.append(last)
    return [(g, coverage(points[generations <= g], edge_lengths, bounds)) for g in checkpoints]


@dataclasses.dataclass
class CoverageReport:
    """Side-by-side coverage of a test and a reference database."""

    edge_lengths: np.ndarray
    bounds_min: np.ndarray
    bounds_max: np.ndarray
    test_total: int
    ref_total: int
    ratio: float | None
    test_by_run: dict
    ref_by_run: dict

    def run_range(self, which: str) -> tuple[int, int] | None:
        by_run = self.test_by_run if which == "test" else self.ref_by_run
        if not by_run:
            return None
        values = list(by_run.values())
        return min(values), max(values)


def compare(test_points, ref_points, edge_lengths=DEFAULT_VOXEL_EDGE, test_run_ids=None, ref_run_ids=None) -> CoverageReport:
    """Compare two databases inside their union bounding box.

    Per-run coverages (for min/max spread) are included when run ids
    are supplied alongside the points.
    """
    test_points = _as_points(test_points)
    ref_points = _as_points(ref_points)
    if test_points.shape[0] == 0 and ref_points.shape[0] == 0:
        raise ValueError("both databases are empty")
    boxes = [bounds_of(p) for p in (test_points, ref_points) if p.shape[0]]
    mins, maxs = union_bounds(*boxes)
    edges = _as_edges(edge_lengths, 3)
    test_total = coverage(test_points, edges, (mins, maxs)) if test_points.shape[0] else 0
    ref_total = coverage(ref_points, edges, (mins, maxs)) if ref_points.shape[0] else 0
    ratio = test_total / ref_total if ref_total else None

    def per_run(points, run_ids):
        if run_ids is None:
            return {}
        run_ids = np.asarray(run_ids)
        return {
            int(r): coverage(points[run_ids == r], edges, (mins, maxs))
            for r in np.unique(run_ids)
        }

    return CoverageReport(
        edge_lengths=edges,
        bounds_min=mins,
        bounds_max=maxs,
        test_total=test_total,
        ref_total=ref_total,
        ratio=ratio,
        test_by_run=per_run(test_points, test_run_ids),
        ref_by_run=per_run(ref_points, ref_run_ids),
    )
