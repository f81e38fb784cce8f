"""Trajectory similarity measures: mean point-to-point, discrete Fréchet, DTW.

The dynamic-programming kernels run in O(n*m) time with two rolling rows;
base distances are computed one row at a time so memory stays O(min(n, m)).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geo import haversine_distance

EUCLIDEAN_2D = "euclidean2d"
EUCLIDEAN_3D = "euclidean3d"
HAVERSINE = "haversine"


@dataclass(frozen=True)
class MetricConfig:
    """Base point distance and whether to ignore the time component.

    The haversine base always compares the (lon, lat) columns in degrees and
    only makes sense for geotemporal points.
    """

    base: str = EUCLIDEAN_3D
    spatial_only: bool = False


def _as_points(t) -> np.ndarray:
    """Accept a Trajectory, a Simplified, or a bare (n, 3)-ish array."""
    pts = np.asarray(getattr(t, "points", t), dtype=float)
    if pts.ndim != 2:
        raise ValueError("expected a sequence of points")
    if len(pts) == 0:
        raise ValueError("empty trajectory")
    return pts


def _compare_dims(cfg: MetricConfig) -> slice:
    if cfg.base == EUCLIDEAN_3D and not cfg.spatial_only:
        return slice(0, 3)
    return slice(0, 2)


def _row_distances(p: np.ndarray, qs: np.ndarray, cfg: MetricConfig) -> np.ndarray:
    """Base distances from a single point to every point of qs."""
    if cfg.base == HAVERSINE:
        return np.atleast_1d(haversine_distance(p[1], p[0], qs[:, 1], qs[:, 0]))
    dims = _compare_dims(cfg)
    diff = qs[:, dims] - p[dims]
    return np.sqrt(np.sum(diff * diff, axis=1))


def mean_pointwise(t1, t2, cfg: MetricConfig = MetricConfig()) -> float:
    """Mean base distance between points paired by index."""
    p = _as_points(t1)
    q = _as_points(t2)
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    if cfg.base == HAVERSINE:
        d = haversine_distance(p[:, 1], p[:, 0], q[:, 1], q[:, 0])
    else:
        dims = _compare_dims(cfg)
        diff = q[:, dims] - p[:, dims]
        d = np.sqrt(np.sum(diff * diff, axis=1))
    return float(np.mean(d))


def discrete_frechet(t1, t2, cfg: MetricConfig = MetricConfig()) -> float:
    """Discrete Fréchet distance via the Eiter-Mannila recurrence."""
    p = _as_points(t1)
    q = _as_points(t2)
    n, m = len(p), len(q)
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        d = _row_distances(p[i], q, cfg)
        if i == 0:
            np.maximum.accumulate(d, out=cur)
        else:
            cur[0] = max(d[0], prev[0])
            for j in range(1, m):
                reach = min(prev[j], prev[j - 1], cur[j - 1])
                cur[j] = d[j] if d[j] > reach else reach
        prev, cur = cur, prev
    return float(prev[m - 1])


def dtw_dependent(t1, t2, cfg: MetricConfig = MetricConfig()) -> float:
    """Dynamic time warping with a multi-dimensional base distance."""
    p = _as_points(t1)
    q = _as_points(t2)
    n, m = len(p), len(q)
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        d = _row_distances(p[i], q, cfg)
        if i == 0:
            np.cumsum(d, out=cur)
        else:
            cur[0] = d[0] + prev[0]
            for j in range(1, m):
                cur[j] = d[j] + min(prev[j], prev[j - 1], cur[j - 1])
        prev, cur = cur, prev
    return float(prev[m - 1])


def _dtw_1d(a: np.ndarray, b: np.ndarray) -> float:
    n, m = len(a), len(b)
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        d = np.abs(b - a[i])
        if i == 0:
            np.cumsum(d, out=cur)
        else:
            cur[0] = d[0] + prev[0]
            for j in range(1, m):
                cur[j] = d[j] + min(prev[j], prev[j - 1], cur[j - 1])
        prev, cur = cur, prev
    return float(prev[m - 1])


def dtw_independent(t1, t2, cfg: MetricConfig = MetricConfig()) -> float:
    """Sum of per-dimension one-dimensional DTW distances.

    The base distance within each dimension is the absolute difference, so
    the config only decides which dimensions participate.
    """
    p = _as_points(t1)
    q = _as_points(t2)
    ncols = 2 if (cfg.spatial_only or cfg.base != EUCLIDEAN_3D) else 3
    return float(sum(_dtw_1d(p[:, c], q[:, c]) for c in range(ncols)))


def write_metric_rows(path_or_file, rows) -> None:
    """Write `(traj_id, metric, method, value)` evaluation rows as CSV."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f)
        w.writerow(["traj_id", "metric", "method", "value"])
        for traj_id, metric, method, value in rows:
            w.writerow([traj_id, metric, method, "" if value is None else repr(float(value))])
    finally:
        if own:
            f.close()
