"""Trajectory data model, min-max normalization, chunking and windowing."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

SPATIAL3D = "spatial3d"
GEOTEMPORAL = "geotemporal"
MODES = (SPATIAL3D, GEOTEMPORAL)


@dataclass
class Trajectory:
    """An ordered sequence of 3-component samples.

    ``points`` is an (n, 3) float array. In spatial3d mode the columns are
    (x, y, z); in geotemporal mode they are (lon degrees, lat degrees,
    t unix seconds) with strictly increasing timestamps.

    Reconstructions produced by a lossy model may violate the timestamp
    invariant; those are built with ``validate=False``.
    """

    points: np.ndarray
    mode: str = SPATIAL3D
    traj_id: str | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {self.points.shape}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.validate:
            if len(self.points) < 2:
                raise ValueError("trajectory needs at least 2 points")
            if not np.all(np.isfinite(self.points)):
                raise ValueError("trajectory contains non-finite values")
            if self.mode == GEOTEMPORAL and np.any(np.diff(self.points[:, 2]) <= 0):
                raise ValueError("geotemporal timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def timestamps(self) -> np.ndarray:
        if self.mode != GEOTEMPORAL:
            raise ValueError("timestamps only defined for geotemporal trajectories")
        return self.points[:, 2]


@dataclass
class NormParams:
    """Per-dimension offset (minimum) and scale (max - min); 6 stored values."""

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float).reshape(3)
        self.scale = np.asarray(self.scale, dtype=float).reshape(3)
        if np.any(self.scale < 0):
            raise ValueError("scale components must be >= 0")


@dataclass
class NormalizedTrajectory:
    """Points rescaled into [0, 1]^3 together with the values to undo it."""

    points: np.ndarray
    params: NormParams
    mode: str = SPATIAL3D


def normalize(t: Trajectory) -> NormalizedTrajectory:
    """Min-max rescale each dimension of a trajectory to [0, 1].

    Constant dimensions get scale 0 stored verbatim and normalize to 0, so
    the round trip through :func:`denormalize` is exact.
    """
    if len(t) < 2:
        raise ValueError("trajectory too short to normalize")
    offset = t.points.min(axis=0)
    scale = t.points.max(axis=0) - offset
    safe = np.where(scale == 0.0, 1.0, scale)
    pts = (t.points - offset) / safe
    pts[:, scale == 0.0] = 0.0
    return NormalizedTrajectory(pts, NormParams(offset, scale), t.mode)


def denormalize(nt: NormalizedTrajectory, traj_id: str | None = None,
                validate: bool = True) -> Trajectory:
    """Invert :func:`normalize`; scale-0 dimensions emit the stored offset."""
    pts = denormalize_points(nt.points, nt.params)
    return Trajectory(pts, nt.mode, traj_id=traj_id, validate=validate)


def denormalize_points(points: np.ndarray, params: NormParams) -> np.ndarray:
    """Array form of :func:`denormalize` for (..., 3) normalized points."""
    return np.asarray(points, dtype=float) * params.scale + params.offset


def chunk(t: Trajectory, length: int) -> list[Trajectory]:
    """Consecutive non-overlapping windows of exactly ``length`` points.

    The trailing remainder shorter than ``length`` is dropped.
    """
    if length < 2:
        raise ValueError("chunk length must be >= 2")
    n = len(t) // length
    out = []
    for k in range(n):
        tid = None if t.traj_id is None else f"{t.traj_id}/{k}"
        out.append(Trajectory(t.points[k * length:(k + 1) * length].copy(),
                              t.mode, traj_id=tid))
    return out


def sliding_windows(t: Trajectory, length: int) -> list[Trajectory]:
    """All windows of ``length`` points shifted by one, in order."""
    if length < 2:
        raise ValueError("window length must be >= 2")
    out = []
    for i in range(len(t) - length + 1):
        tid = None if t.traj_id is None else f"{t.traj_id}/w{i}"
        out.append(Trajectory(t.points[i:i + length].copy(), t.mode, traj_id=tid))
    return out


def split_train_test(trajectories, train_fraction: float, seed: int):
    """Seeded whole-trajectory split targeting a share of total points.

    Trajectories are shuffled with the seeded generator and assigned to the
    train side while its point count is below ``train_fraction`` of the
    total; the remainder becomes the test side.
    """
    trajectories = list(trajectories)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if len(trajectories) < 2:
        raise ValueError("need at least 2 trajectories to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(trajectories))
    total = sum(len(t) for t in trajectories)
    target = train_fraction * total
    train, test, cum = [], [], 0
    for idx in order:
        t = trajectories[idx]
        if cum < target:
            train.append(t)
            cum += len(t)
        else:
            test.append(t)
    if not test:  # fraction so high every trajectory landed in train
        test.append(train.pop())
    return train, test


# ---------------------------------------------------------------------------
# CSV serialization


def write_trajectories_csv(path_or_file, trajectories) -> None:
    """Write trajectories to CSV: id column + per-mode coordinate columns."""
    trajectories = list(trajectories)
    mode = trajectories[0].mode if trajectories else SPATIAL3D
    header = ["id"] + (["lon", "lat", "t"] if mode == GEOTEMPORAL else ["c0", "c1", "c2"])
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f)
        w.writerow(header)
        for k, t in enumerate(trajectories):
            tid = t.traj_id if t.traj_id is not None else str(k)
            for p in t.points:
                w.writerow([tid] + [repr(float(v)) for v in p])
    finally:
        if own:
            f.close()


def read_trajectories_csv(path_or_file, mode: str | None = None) -> list[Trajectory]:
    """Read trajectories written by :func:`write_trajectories_csv`.

    The mode is inferred from the header unless given explicitly. Rows with
    the same id must be contiguous; they form one trajectory each.
    """
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "r", newline="") if own else path_or_file
    try:
        r = csv.reader(f)
        header = next(r, None)
        if header is None:
            return []
        if mode is None:
            mode = GEOTEMPORAL if [h.strip() for h in header[-3:]] == ["lon", "lat", "t"] else SPATIAL3D
        out: list[Trajectory] = []
        cur_id, cur_pts = None, []
        for row in r:
            if not row:
                continue
            tid, vals = row[0], [float(v) for v in row[1:4]]
            if tid != cur_id and cur_pts:
                out.append(Trajectory(np.array(cur_pts), mode, traj_id=cur_id))
                cur_pts = []
            cur_id = tid
            cur_pts.append(vals)
        if cur_pts:
            out.append(Trajectory(np.array(cur_pts), mode, traj_id=cur_id))
        return out
    finally:
        if own:
            f.close()


def trajectories_to_string(trajectories) -> str:
    buf = io.StringIO()
    write_trajectories_csv(buf, trajectories)
    return buf.getvalue()
