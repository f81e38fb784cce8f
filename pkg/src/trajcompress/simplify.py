"""Line simplification: Douglas-Peucker, TD-TR, and supporting machinery.

Both algorithms share a top-down recursion that keeps the farthest point of
a segment when its deviation strictly exceeds the tolerance. They differ in
the deviation measure: perpendicular distance for Douglas-Peucker,
synchronized Euclidean distance (time-ratio interpolation, haversine base)
for TD-TR.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import GEOTEMPORAL, SPATIAL3D, Trajectory
from .geo import euclidean_distance, haversine_distance, interpolate_time_ratio, local_equirect_xy

DP = "dp"
TDTR = "tdtr"


@dataclass
class Simplified:
    """Result of a simplification: kept indices into the original + points."""

    kept_indices: np.ndarray
    points: np.ndarray
    mode: str = SPATIAL3D
    traj_id: str | None = None

    def __post_init__(self):
        self.kept_indices = np.asarray(self.kept_indices, dtype=int)
        self.points = np.asarray(self.points, dtype=float)
        idx = self.kept_indices
        if len(idx) < 2 or idx[0] != 0 or np.any(np.diff(idx) <= 0):
            raise ValueError("kept_indices must be strictly increasing and start at 0")

    def __len__(self) -> int:
        return len(self.kept_indices)


@dataclass
class EpsilonSearch:
    target_points: int
    epsilon: float
    achieved_points: int


def perpendicular_distance(p, a, b) -> float:
    """Distance from p to the infinite line through a and b (2-D or 3-D).

    Degenerates to the point distance when a == b.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(_perp_distances(p[None, :], a, b)[0])


def _perp_distances(pts, a, b):
    """Vectorized perpendicular distances of pts (m, d) to line a-b."""
    u = b - a
    uu = float(np.dot(u, u))
    w = pts - a
    if uu == 0.0:
        return np.sqrt(np.sum(w * w, axis=1))
    t = (w @ u) / uu
    off = w - t[:, None] * u
    return np.sqrt(np.sum(off * off, axis=1))


def sed_distance(p, a, b, base: str = "euclidean") -> float:
    """Synchronized Euclidean distance of p from segment a-b.

    Points are triples with the timestamp last. The position on a-b at p's
    timestamp is found by time-ratio interpolation and compared to p's
    spatial part with the chosen base distance.
    """
    p = np.asarray(p, dtype=float)
    ref = interpolate_time_ratio(a, b, p[-1])
    if base == "euclidean":
        return euclidean_distance(p[:-1], ref)
    if base == "haversine":
        # columns are (lon, lat)
        return haversine_distance(p[1], p[0], ref[1], ref[0])
    raise ValueError(f"unknown base {base!r}")


def _sed_deviations(points, i, j):
    """SED (haversine base) of interior points to the segment points[i]-points[j]."""
    a, b = points[i], points[j]
    ta, tb = a[2], b[2]
    seg = points[i + 1:j]
    ratio = (seg[:, 2] - ta) / (tb - ta)
    ref_lon = a[0] + ratio * (b[0] - a[0])
    ref_lat = a[1] + ratio * (b[1] - a[1])
    return haversine_distance(seg[:, 1], seg[:, 0], ref_lat, ref_lon)


def _dp_deviation_fn(t: Trajectory):
    """Perpendicular deviations over the spatial dimensions of a trajectory."""
    if t.mode == GEOTEMPORAL:
        # planar frame in meters so epsilon is comparable with TD-TR's
        pts = local_equirect_xy(t.points[:, :2])
    else:
        pts = t.points

    def dev(i, j):
        return _perp_distances(pts[i + 1:j], pts[i], pts[j])

    return dev


def _tdtr_deviation_fn(t: Trajectory):
    if t.mode != GEOTEMPORAL:
        raise ValueError("TD-TR requires a geotemporal trajectory")
    pts = t.points

    def dev(i, j):
        return _sed_deviations(pts, i, j)

    return dev


def _deviation_fn(t: Trajectory, algo: str):
    if algo == DP:
        return _dp_deviation_fn(t)
    if algo == TDTR:
        return _tdtr_deviation_fn(t)
    raise ValueError(f"unknown algorithm {algo!r}")


def _topdown_keep(n: int, dev, epsilon: float) -> np.ndarray:
    """Indices kept by the shared top-down recursion at tolerance epsilon."""
    keep = [0, n - 1]
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = dev(i, j)
        k = int(np.argmax(d))
        if d[k] > epsilon:
            split = i + 1 + k
            keep.append(split)
            stack.append((i, split))
            stack.append((split, j))
    return np.array(sorted(keep), dtype=int)


def _simplify(t: Trajectory, epsilon: float, algo: str) -> Simplified:
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    idx = _topdown_keep(len(t), _deviation_fn(t, algo), epsilon)
    return Simplified(idx, t.points[idx].copy(), t.mode, t.traj_id)


def douglas_peucker(t: Trajectory, epsilon: float) -> Simplified:
    """Classic Douglas-Peucker with strict keep criterion (deviation > eps)."""
    return _simplify(t, epsilon, DP)


def td_tr(t: Trajectory, epsilon: float) -> Simplified:
    """Top-Down Time-Ratio: Douglas-Peucker recursion with SED deviations."""
    return _simplify(t, epsilon, TDTR)


def _split_distances(n: int, dev) -> np.ndarray:
    """Effective split distance of every interior point.

    Walks the full recursion tree (split point choice does not depend on the
    tolerance) and records, per point, the minimum of its own split distance
    and all its ancestors'. A point is kept at tolerance eps iff its
    effective distance is strictly greater than eps, which makes the kept
    count a step function with jumps exactly at these values.
    """
    eff = np.zeros(n)
    stack = [(0, n - 1, np.inf)]
    while stack:
        i, j, parent = stack.pop()
        if j - i < 2:
            continue
        d = dev(i, j)
        k = int(np.argmax(d))
        if d[k] <= 0.0:
            continue  # nothing in this segment is ever kept (strict >)
        split = i + 1 + k
        e = min(float(d[k]), parent)
        eff[split] = e
        stack.append((i, split, e))
        stack.append((split, j, e))
    return eff


def find_epsilon_for_target(t: Trajectory, target_points: int, algo: str = DP) -> EpsilonSearch:
    """Tolerance whose kept count is closest to the target point count.

    Searches the realized split-distance candidate set; exact because kept
    count is a step function of the tolerance. Ties between equally close
    achievable counts resolve toward fewer points.
    """
    n = len(t)
    if not 2 <= target_points <= n:
        raise ValueError(f"target_points must be in [2, {n}]")
    eff = _split_distances(n, _deviation_fn(t, algo))
    levels = _achievable_levels(eff)
    best = None
    for count, eps in levels:  # counts ascend; first best wins ties (fewer points)
        diff = abs(count - target_points)
        if best is None or diff < best[0]:
            best = (diff, count, eps)
    return EpsilonSearch(target_points, best[2], best[1])


def _achievable_levels(eff: np.ndarray) -> list[tuple[int, float]]:
    """(kept count, epsilon) pairs achievable by the strict-> recursion."""
    positive = np.unique(eff[eff > 0.0])[::-1]  # descending
    if positive.size == 0:
        return [(2, 0.0)]
    levels = [(2, float(positive[0]))]
    for i, v in enumerate(positive):
        count = 2 + int(np.sum(eff >= v))
        eps = float(positive[i + 1]) if i + 1 < positive.size else float(v) / 2.0
        levels.append((count, eps))
    return levels


def interpolate_to_full_length(original: Trajectory, s: Simplified) -> Trajectory:
    """Re-expand a simplification to the original point count.

    Kept points appear verbatim at their original indices. Removed points
    land on the kept segment that covers them: at their original timestamp
    by time ratio in geotemporal mode, at their index ratio in spatial mode.
    """
    idx = s.kept_indices
    n = len(original)
    if idx[-1] != n - 1 or not np.array_equal(original.points[idx], s.points):
        raise ValueError("simplification does not match the original trajectory")
    out = original.points.copy()
    for a, b in zip(idx[:-1], idx[1:]):
        for k in range(a + 1, b):
            if original.mode == GEOTEMPORAL:
                out[k, :2] = interpolate_time_ratio(
                    original.points[a], original.points[b], original.points[k, 2])
            else:
                r = (k - a) / (b - a)
                out[k] = original.points[a] + r * (original.points[b] - original.points[a])
    return Trajectory(out, original.mode, traj_id=original.traj_id)


def time_synchronize(reference: Trajectory, other: Trajectory) -> Trajectory:
    """Sample `other` at the reference timestamps by linear interpolation.

    Timestamps outside other's span clamp to its endpoints. The output has
    one point per reference point and carries the reference timestamps.
    """
    if reference.mode != GEOTEMPORAL or other.mode != GEOTEMPORAL:
        raise ValueError("time synchronization requires geotemporal trajectories")
    if len(other) < 2:
        raise ValueError("other trajectory too short to interpolate")
    tp = other.points[:, 2]
    if np.any(np.diff(tp) < 0):
        raise ValueError("other timestamps must be non-decreasing")
    ts = reference.points[:, 2]
    lon = np.interp(ts, tp, other.points[:, 0])
    lat = np.interp(ts, tp, other.points[:, 1])
    return Trajectory(np.column_stack([lon, lat, ts]), GEOTEMPORAL,
                      traj_id=other.traj_id)


def write_simplified_csv(path_or_file, simplifieds) -> None:
    """Serialize simplifications as (id, kept_index, three coordinates) rows."""
    simplifieds = list(simplifieds)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f)
        w.writerow(["id", "kept_index", "c0", "c1", "c2"])
        for k, s in enumerate(simplifieds):
            sid = s.traj_id if s.traj_id is not None else str(k)
            for idx, p in zip(s.kept_indices, s.points):
                w.writerow([sid, int(idx)] + [repr(float(v)) for v in p])
    finally:
        if own:
            f.close()
