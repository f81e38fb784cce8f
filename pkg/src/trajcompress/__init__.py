"""Trajectory compression toolkit.

LSTM-autoencoder compression with Douglas-Peucker / TD-TR baselines and the
similarity metrics (mean point-to-point, discrete Fréchet, DTW) to compare
them under matched compression ratios.
"""

from .core import (GEOTEMPORAL, SPATIAL3D, NormalizedTrajectory, NormParams,
                   Trajectory, chunk, denormalize, normalize, sliding_windows,
                   split_train_test)
from .autoencoder import (LatentCode, ModelParams, TrainConfig, compress,
                          latent_dim_for_ratio, reconstruct, train, weight_count)
from .estimator import IdentityCompressor, LstmAutoencoder
from .experiment import (ExperimentConfig, Scenario, run_grid, run_scenario,
                         scenario_grid, synthetic_corpus)
from .metrics import (MetricConfig, discrete_frechet, dtw_dependent,
                      dtw_independent, mean_pointwise)
from .simplify import (EpsilonSearch, Simplified, douglas_peucker,
                       find_epsilon_for_target, interpolate_to_full_length,
                       td_tr, time_synchronize)

__version__ = "0.1.0"

__all__ = [
    "GEOTEMPORAL", "SPATIAL3D", "NormalizedTrajectory", "NormParams",
    "Trajectory", "chunk", "denormalize", "normalize", "sliding_windows",
    "split_train_test",
    "LatentCode", "ModelParams", "TrainConfig", "compress",
    "latent_dim_for_ratio", "reconstruct", "train", "weight_count",
    "IdentityCompressor", "LstmAutoencoder",
    "ExperimentConfig", "Scenario", "run_grid", "run_scenario",
    "scenario_grid", "synthetic_corpus",
    "MetricConfig", "discrete_frechet", "dtw_dependent", "dtw_independent",
    "mean_pointwise",
    "EpsilonSearch", "Simplified", "douglas_peucker",
    "find_epsilon_for_target", "interpolate_to_full_length", "td_tr",
    "time_synchronize",
]
