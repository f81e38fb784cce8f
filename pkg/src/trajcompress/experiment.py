"""Scenario grid runner: datasets, training, both compressors, all metrics.

A scenario is one (dataset mode, sequence length, compression ratio) cell.
For every scenario a fresh autoencoder is trained, each test window is also
simplified to the matching point budget with Douglas-Peucker (spatial data)
or TD-TR (GPS data), and the three metric families are computed for the raw
subsets, the full-length interpolations, the reconstructions, and (GPS only)
their time-synchronized variants.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .autoencoder import latent_dim_for_ratio
from .core import (GEOTEMPORAL, SPATIAL3D, Trajectory, chunk, sliding_windows,
                   split_train_test)
from .estimator import LstmAutoencoder
from .metrics import (EUCLIDEAN_3D, HAVERSINE, MetricConfig, discrete_frechet,
                      dtw_dependent, mean_pointwise)
from .preprocess import RawFix
from .simplify import (DP, TDTR, douglas_peucker, find_epsilon_for_target,
                       interpolate_to_full_length, td_tr, time_synchronize)


class ConfigurationError(Exception):
    """Bad scenario, config file, or flag combination (exit code 1)."""


class DataError(Exception):
    """Unreadable or malformed input data (exit code 2)."""


# The published scenario tables, kept verbatim: per sequence length a list of
# (ratio, latent_dim, dp_points). The seq-40 / ratio-10 row stores 3 kept
# points although 12 compressed values would allow 4.
_TABLE_20 = [(2.0, 24, 10), (4.0, 9, 5), (20.0 / 3.0, 3, 3)]
_TABLE_40 = [(2.0, 54, 20), (4.0, 24, 10), (8.0, 9, 5), (10.0, 6, 3)]

METRICS = ("mean_pointwise", "frechet", "dtw_d")


@dataclass(frozen=True)
class Scenario:
    dataset_mode: str
    seq_len: int
    ratio: float
    latent_dim: int
    dp_points: int
    compressed_values: int

    @property
    def name(self) -> str:
        return f"{self.dataset_mode}-{self.seq_len}-r{self.ratio:g}"


def scenario_grid() -> list[Scenario]:
    """All 14 evaluated scenarios: 7 per dataset mode."""
    grid = []
    for mode in (SPATIAL3D, GEOTEMPORAL):
        for seq_len, table in ((20, _TABLE_20), (40, _TABLE_40)):
            for ratio, latent, dp_points in table:
                assert latent == latent_dim_for_ratio(seq_len, ratio)
                grid.append(Scenario(mode, seq_len, ratio, latent, dp_points,
                                     latent + 6))
    return grid


@dataclass
class ExperimentConfig:
    seed: int = 0
    train_fraction: float = 0.9
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.001
    hidden_size: int = 100
    reverse_input: bool = True
    loss_spatial: str = "rescaled_euclidean"
    loss_geo: str = "equirect_time"
    max_train_windows: int | None = 2000
    ratio_tolerance: float = 0.05  # achieved vs target mean DP ratio
    corpus_size: int = 24
    corpus_min_len: int = 60
    corpus_max_len: int = 120

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise ConfigurationError(f"unknown config keys: {sorted(bad)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigurationError(str(e)) from e


@dataclass
class ScenarioResult:
    scenario: Scenario
    summary: dict  # {method: {metric: mean or None}}
    rows: list  # (traj_id, metric, method, value)
    achieved_ratio: float
    info: dict = field(default_factory=dict)


@dataclass
class EvaluationReport:
    config: dict
    results: list[ScenarioResult] = field(default_factory=list)


# ---------------------------------------------------------------------------
# synthetic corpora


def synthetic_corpus(kind: str, n: int, seed: int, min_len: int = 60,
                     max_len: int = 120, artifacts: bool = True) -> list[Trajectory]:
    """Seeded stand-in datasets.

    ``smooth3d`` draws random smooth 3-D curves (sums of a few sinusoids);
    ``taxi-like`` drives a 2-D random-waypoint walk near Beijing with GPS
    noise, irregular sampling and, when ``artifacts`` is set, injected idle
    blocks, multi-hour gaps and speed spikes for the cleaning pipeline.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "smooth3d":
        return [_smooth3d(rng, int(rng.integers(min_len, max_len + 1)), k)
                for k in range(n)]
    if kind == "taxi-like":
        return [_taxi_like(rng, int(rng.integers(min_len, max_len + 1)), k, artifacts)
                for k in range(n)]
    raise ValueError(f"unknown corpus kind {kind!r}")


def _smooth3d(rng, length: int, k: int) -> Trajectory:
    s = np.linspace(0.0, 1.0, length)
    pts = np.empty((length, 3))
    for d in range(3):
        base = rng.uniform(0.0, 100.0)
        cur = np.full(length, base)
        for _ in range(3):
            amp = rng.uniform(5.0, 30.0)
            freq = rng.uniform(0.5, 2.5)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            cur = cur + amp * np.sin(2.0 * np.pi * freq * s + phase)
        pts[:, d] = cur
    return Trajectory(pts, SPATIAL3D, traj_id=f"smooth3d-{k}")


def _taxi_like(rng, length: int, k: int, artifacts: bool) -> Trajectory:
    lon = rng.uniform(116.2, 116.6)
    lat = rng.uniform(39.7, 40.1)
    t = float(rng.integers(1_200_000_000, 1_210_000_000))
    heading = rng.uniform(0.0, 2.0 * np.pi)
    meters_per_deg = 111_320.0
    rows = [(lon, lat, t)]
    idle_at = int(rng.integers(10, length - 20)) if artifacts and rng.random() < 0.4 else -1
    gap_at = int(rng.integers(10, length - 10)) if artifacts and rng.random() < 0.4 else -1
    spike_at = int(rng.integers(10, length - 10)) if artifacts and rng.random() < 0.4 else -1
    i = 1
    while i < length:
        if i == idle_at:
            for _ in range(int(rng.integers(12, 17))):  # > 10 slow points
                t += 10.0
                lon += rng.uniform(-2e-6, 2e-6)
                lat += rng.uniform(-2e-6, 2e-6)
                rows.append((lon, lat, t))
            idle_at = -1
            continue
        dt = float(rng.uniform(5.0, 40.0))
        if i == gap_at:
            dt = 10_900.0  # beyond the 2-hour rule
        speed = 700.0 / dt if i == spike_at else float(np.clip(rng.normal(12.0, 4.0), 2.0, 30.0))
        heading += rng.normal(0.0, 0.3)
        dx = np.cos(heading) * speed * dt
        dy = np.sin(heading) * speed * dt
        t += dt
        lon += dx / (meters_per_deg * np.cos(np.radians(lat))) + rng.normal(0.0, 2e-5)
        lat += dy / meters_per_deg + rng.normal(0.0, 2e-5)
        lat = float(np.clip(lat, 39.5, 41.0))
        lon = float(np.clip(lon, 115.5, 117.5))
        rows.append((lon, lat, t))
        i += 1
    return Trajectory(np.array(rows), GEOTEMPORAL, traj_id=f"taxi-{k}")


def trajectory_to_fixes(t: Trajectory, entity_id: str | None = None) -> list[RawFix]:
    """Reinterpret a geotemporal trajectory as a raw fix stream."""
    eid = entity_id or t.traj_id or "0"
    return [RawFix(eid, float(p[2]), float(p[0]), float(p[1])) for p in t.points]


# ---------------------------------------------------------------------------
# scenario runner


def _metric_cfg(mode: str) -> MetricConfig:
    return MetricConfig(HAVERSINE if mode == GEOTEMPORAL else EUCLIDEAN_3D)


def _metric_values(original, other, cfg, pointwise_ok: bool) -> dict:
    return {
        "mean_pointwise": mean_pointwise(original, other, cfg) if pointwise_ok else None,
        "frechet": discrete_frechet(original, other, cfg),
        "dtw_d": dtw_dependent(original, other, cfg),
    }


def _cummax_timestamps(t: Trajectory) -> tuple[Trajectory, bool]:
    ts = t.points[:, 2]
    fixed = np.maximum.accumulate(ts)
    changed = bool(np.any(fixed != ts))
    if changed:
        pts = t.points.copy()
        pts[:, 2] = fixed
        t = Trajectory(pts, t.mode, traj_id=t.traj_id, validate=False)
    return t, changed


def run_scenario(scenario: Scenario, corpus, cfg: ExperimentConfig,
                 compressor=None) -> ScenarioResult:
    """Evaluate one grid cell on a corpus of its dataset mode.

    ``compressor`` overrides the freshly trained autoencoder; it must offer
    ``fit(X)`` and ``predict(X)`` over (n, seq_len, 3) arrays.
    """
    corpus = [t for t in corpus if t.mode == scenario.dataset_mode]
    if not corpus:
        raise ConfigurationError(f"no {scenario.dataset_mode} trajectories in corpus")
    train_trajs, test_trajs = split_train_test(corpus, cfg.train_fraction, cfg.seed)

    train_windows = [w for t in train_trajs for w in sliding_windows(t, scenario.seq_len)]
    test_windows = [w for t in test_trajs for w in chunk(t, scenario.seq_len)]
    if not train_windows or not test_windows:
        raise DataError(
            f"corpus too short for seq_len {scenario.seq_len}: "
            f"{len(train_windows)} train / {len(test_windows)} test windows")
    rng = np.random.default_rng(cfg.seed)
    if cfg.max_train_windows and len(train_windows) > cfg.max_train_windows:
        pick = rng.choice(len(train_windows), cfg.max_train_windows, replace=False)
        train_windows = [train_windows[i] for i in sorted(pick)]

    X_train = np.stack([w.points for w in train_windows])
    X_test = np.stack([w.points for w in test_windows])

    geo = scenario.dataset_mode == GEOTEMPORAL
    if compressor is None:
        compressor = LstmAutoencoder(
            seq_len=scenario.seq_len, latent_dim=scenario.latent_dim,
            hidden_size=cfg.hidden_size,
            loss=cfg.loss_geo if geo else cfg.loss_spatial,
            epochs=cfg.epochs, batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate, seed=cfg.seed,
            reverse_input=cfg.reverse_input)
    compressor.fit(X_train)
    recon = compressor.predict(X_test)

    mcfg = _metric_cfg(scenario.dataset_mode)
    algo = TDTR if geo else DP
    base_method = "TDTR" if geo else "DP"
    rows = []
    kept_counts = []
    nonmonotonic = 0
    for w, rec_pts in zip(test_windows, recon):
        tid = w.traj_id or "?"
        rec = Trajectory(rec_pts, w.mode, traj_id=tid, validate=False)
        per_method = {"AE": _metric_values(w, rec, mcfg, pointwise_ok=True)}

        search = find_epsilon_for_target(w, scenario.dp_points, algo)
        kept_counts.append(search.achieved_points)
        simp = (td_tr if geo else douglas_peucker)(w, search.epsilon)
        interp = interpolate_to_full_length(w, simp)
        per_method[base_method] = _metric_values(w, simp, mcfg, pointwise_ok=False)
        per_method[f"{base_method}-interpolated"] = _metric_values(w, interp, mcfg,
                                                                   pointwise_ok=True)
        if geo:
            synced_interp = time_synchronize(w, interp)
            per_method[f"{base_method}-interpolated-synced"] = _metric_values(
                w, synced_interp, mcfg, pointwise_ok=True)
            rec_mono, changed = _cummax_timestamps(rec)
            nonmonotonic += changed
            synced_rec = time_synchronize(w, rec_mono)
            per_method["AE-synced"] = _metric_values(w, synced_rec, mcfg,
                                                     pointwise_ok=True)
        for method, values in per_method.items():
            for metric, value in values.items():
                rows.append((tid, metric, method, value))

    collected: dict[str, dict[str, list]] = {}
    for tid, metric, method, value in rows:
        collected.setdefault(method, {}).setdefault(metric, []).append(value)
    summary = {
        method: {metric: (float(np.mean([v for v in vals if v is not None]))
                          if any(v is not None for v in vals) else None)
                 for metric, vals in metrics.items()}
        for method, metrics in collected.items()
    }

    achieved_ratio = float(np.mean([scenario.seq_len / k for k in kept_counts]))
    info = {
        "test_windows": len(test_windows),
        "train_windows": len(X_train),
        "nonmonotonic_reconstructions": nonmonotonic,
        "compressor": type(compressor).__name__,
    }
    if hasattr(compressor, "loss_history_"):
        info["final_train_loss"] = compressor.loss_history_[-1]
        info["epochs"] = len(compressor.loss_history_)
    return ScenarioResult(scenario, summary, rows, achieved_ratio, info)


def run_grid(corpora: dict, cfg: ExperimentConfig, scenarios=None,
             compressor_factory=None) -> EvaluationReport:
    """Run scenarios against per-mode corpora; returns the full report."""
    report = EvaluationReport(config=asdict(cfg))
    for scenario in scenarios if scenarios is not None else scenario_grid():
        corpus = corpora.get(scenario.dataset_mode)
        if corpus is None:
            raise ConfigurationError(f"no corpus for mode {scenario.dataset_mode}")
        compressor = compressor_factory(scenario) if compressor_factory else None
        report.results.append(run_scenario(scenario, corpus, cfg, compressor))
    return report


# ---------------------------------------------------------------------------
# report emission


def _result_doc(res: ScenarioResult) -> dict:
    return {
        "scenario": asdict(res.scenario),
        "summary": res.summary,
        "achieved_ratio": res.achieved_ratio,
        "info": res.info,
        "rows": [list(r) for r in res.rows],
    }


def emit_report(report: EvaluationReport, out_dir, formats=("csv", "json")) -> list[str]:
    """Write summary/long CSVs and/or the JSON document; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        # one table block per scenario: rows are methods, columns are metrics
        path = os.path.join(out_dir, "report_summary.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["scenario", "dataset_mode", "seq_len", "ratio",
                        "achieved_ratio", "method"] + list(METRICS))
            for res in report.results:
                s = res.scenario
                for method in sorted(res.summary):
                    means = [res.summary[method].get(metric) for metric in METRICS]
                    w.writerow([s.name, s.dataset_mode, s.seq_len,
                                repr(s.ratio), repr(res.achieved_ratio), method]
                               + ["" if m is None else repr(m) for m in means])
        written.append(path)
        path = os.path.join(out_dir, "report_long.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["scenario", "traj_id", "metric", "method", "value"])
            for res in report.results:
                for tid, metric, method, value in res.rows:
                    w.writerow([res.scenario.name, tid, metric, method,
                                "" if value is None else repr(value)])
        written.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as f:
            json.dump({"config": report.config,
                       "results": [_result_doc(r) for r in report.results]}, f, indent=1)
        written.append(path)
    return written
