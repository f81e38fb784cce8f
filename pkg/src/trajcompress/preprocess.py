"""Cleaning pipeline for raw taxi GPS logs.

Turns per-entity fix streams into geotemporal trajectories by applying, in
order: bounding-box filter, monotonic-time enforcement, gap splitting, idle
removal with splitting, and speed-outlier splitting. 3-D game logs do not
pass through here at all; they need no cleaning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

import numpy as np

from .core import GEOTEMPORAL, Trajectory
from .geo import haversine_distance

# metropolitan Beijing; the dataset convention puts obvious noise at (0, 0)
BEIJING_BBOX = (39.4, 41.1, 115.4, 117.6)


@dataclass(frozen=True)
class RawFix:
    entity_id: str
    t: float  # unix seconds
    lon: float
    lat: float


@dataclass
class PreprocessConfig:
    bbox: tuple = BEIJING_BBOX  # (lat_min, lat_max, lon_min, lon_max)
    max_gap: float = 7200.0  # seconds; split when strictly exceeded
    idle_speed: float = 1.0  # m/s
    idle_run: int = 10  # idle runs strictly longer than this are removed
    max_speed: float = 55.0  # m/s; split when strictly exceeded
    min_traj_len: int = 2

    def __post_init__(self):
        lat_min, lat_max, lon_min, lon_max = self.bbox
        if lat_min >= lat_max or lon_min >= lon_max:
            raise ValueError("bbox must be (lat_min, lat_max, lon_min, lon_max)")
        for name in ("max_gap", "idle_speed", "max_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.idle_run < 1 or self.min_traj_len < 2:
            raise ValueError("idle_run must be >= 1 and min_traj_len >= 2")


@dataclass
class PreprocessStats:
    """Per-rule drop and split counters, serialized into the JSON summary."""

    lines_total: int = 0
    lines_malformed: int = 0
    dropped_bbox: int = 0
    dropped_nonmonotonic: int = 0
    splits_gap: int = 0
    dropped_idle_points: int = 0
    splits_idle: int = 0
    splits_speed: int = 0
    dropped_short_runs: int = 0
    trajectories_out: int = 0

    def merge(self, other: "PreprocessStats") -> None:
        for k, v in asdict(other).items():
            setattr(self, k, getattr(self, k) + v)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def parse_timestamp(text: str) -> int:
    """Parse 'YYYY-MM-DD HH:MM:SS' as UTC unix seconds."""
    dt = datetime.strptime(text.strip(), "%Y-%m-%d %H:%M:%S")
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def parse_taxi_log(lines, stats: PreprocessStats | None = None) -> list[RawFix]:
    """Parse `id,datetime,lon,lat` lines into fixes, input order preserved.

    Malformed lines are counted and skipped; more than 50% malformed raises.
    """
    if stats is None:
        stats = PreprocessStats()
    fixes = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        stats.lines_total += 1
        parts = line.split(",")
        try:
            if len(parts) != 4:
                raise ValueError(line)
            fixes.append(RawFix(parts[0].strip(), parse_timestamp(parts[1]),
                                float(parts[2]), float(parts[3])))
        except (ValueError, OverflowError):
            stats.lines_malformed += 1
    if stats.lines_total and stats.lines_malformed * 2 > stats.lines_total:
        raise ValueError(
            f"{stats.lines_malformed}/{stats.lines_total} malformed lines; not a taxi log?")
    return fixes


def filter_bbox(fixes, config: PreprocessConfig, stats: PreprocessStats | None = None):
    lat_min, lat_max, lon_min, lon_max = config.bbox
    kept = [f for f in fixes
            if lat_min <= f.lat <= lat_max and lon_min <= f.lon <= lon_max]
    if stats is not None:
        stats.dropped_bbox += len(fixes) - len(kept)
    return kept


def enforce_monotonic_time(fixes, stats: PreprocessStats | None = None):
    """Drop any fix whose timestamp is <= the last kept timestamp."""
    kept = []
    last = None
    for f in fixes:
        if last is None or f.t > last:
            kept.append(f)
            last = f.t
        elif stats is not None:
            stats.dropped_nonmonotonic += 1
    return kept


def speed_between(a: RawFix, b: RawFix) -> float:
    """Haversine speed in m/s between consecutive fixes; requires b.t > a.t."""
    dt = b.t - a.t
    if dt <= 0:
        raise ValueError("speed requires strictly increasing timestamps")
    return haversine_distance(a.lat, a.lon, b.lat, b.lon) / dt


def _drop_short(runs, config: PreprocessConfig, stats: PreprocessStats | None):
    kept = [r for r in runs if len(r) >= config.min_traj_len]
    if stats is not None:
        stats.dropped_short_runs += len(runs) - len(kept)
    return kept


def split_on_gaps(fixes, config: PreprocessConfig, stats: PreprocessStats | None = None):
    """Cut between consecutive fixes strictly more than max_gap apart."""
    runs, cur = [], []
    for f in fixes:
        if cur and f.t - cur[-1].t > config.max_gap:
            runs.append(cur)
            cur = []
            if stats is not None:
                stats.splits_gap += 1
        cur.append(f)
    if cur:
        runs.append(cur)
    return _drop_short(runs, config, stats)


def remove_idle_and_split(fixes, config: PreprocessConfig,
                          stats: PreprocessStats | None = None):
    """Delete runs of more than idle_run consecutive slow points and split there.

    A point is slow when the speed over its incoming segment is below
    idle_speed. Short slow runs (traffic lights, jams) are kept.
    """
    fixes = list(fixes)
    if len(fixes) < 2:
        return _drop_short([fixes] if fixes else [], config, stats)
    slow = [False] + [speed_between(a, b) < config.idle_speed
                      for a, b in zip(fixes, fixes[1:])]
    runs, cur, i = [], [], 0
    n = len(fixes)
    while i < n:
        if slow[i]:
            j = i
            while j < n and slow[j]:
                j += 1
            if j - i > config.idle_run:  # strictly more than idle_run points
                if cur:
                    runs.append(cur)
                    cur = []
                if stats is not None:
                    stats.dropped_idle_points += j - i
                    stats.splits_idle += 1
            else:
                cur.extend(fixes[i:j])
            i = j
        else:
            cur.append(fixes[i])
            i += 1
    if cur:
        runs.append(cur)
    return _drop_short(runs, config, stats)


def split_on_speed_outliers(fixes, config: PreprocessConfig,
                            stats: PreprocessStats | None = None):
    """Cut between any consecutive pair faster than max_speed."""
    runs, cur = [], []
    for f in fixes:
        if cur and speed_between(cur[-1], f) > config.max_speed:
            runs.append(cur)
            cur = []
            if stats is not None:
                stats.splits_speed += 1
        cur.append(f)
    if cur:
        runs.append(cur)
    return _drop_short(runs, config, stats)


def preprocess_entity(fixes, config: PreprocessConfig | None = None,
                      stats: PreprocessStats | None = None) -> list[Trajectory]:
    """Full cleaning pipeline for the fixes of one entity, in file order."""
    if config is None:
        config = PreprocessConfig()
    fixes = filter_bbox(fixes, config, stats)
    fixes = enforce_monotonic_time(fixes, stats)
    trajectories = []
    for run in split_on_gaps(fixes, config, stats):
        for part in remove_idle_and_split(run, config, stats):
            for piece in split_on_speed_outliers(part, config, stats):
                pts = np.array([[f.lon, f.lat, f.t] for f in piece])
                trajectories.append(Trajectory(pts, GEOTEMPORAL,
                                               traj_id=piece[0].entity_id))
    if stats is not None:
        stats.trajectories_out += len(trajectories)
    # disambiguate ids of multiple pieces from one entity
    for k, t in enumerate(trajectories):
        t.traj_id = f"{t.traj_id}#{k}"
    return trajectories


def preprocess_log(lines, config: PreprocessConfig | None = None):
    """Parse and clean a whole taxi log; returns (trajectories, stats).

    Fixes are grouped by entity id in file order; entities are processed in
    order of first appearance.
    """
    if config is None:
        config = PreprocessConfig()
    stats = PreprocessStats()
    fixes = parse_taxi_log(lines, stats)
    by_entity: dict[str, list[RawFix]] = {}
    for f in fixes:
        by_entity.setdefault(f.entity_id, []).append(f)
    out = []
    for entity in by_entity:
        out.extend(preprocess_entity(by_entity[entity], config, stats))
    return out, stats
