"""Scikit-learn style front end for the LSTM trajectory autoencoder.

``X`` is a (n_windows, seq_len, 3) array of raw fixed-length trajectory
windows. ``fit`` normalizes each window independently and trains the
autoencoder; ``transform`` emits one compressed row per window, laid out as
``[latent..., offset(3), scale(3)]`` so a row carries everything needed to
reconstruct. ``inverse_transform`` maps such rows back to windows.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .autoencoder import TrainConfig, _decode_batch, _encode_batch, train
from .core import NormalizedTrajectory, NormParams


def _normalize_windows(X: np.ndarray):
    offsets = X.min(axis=1)
    scales = X.max(axis=1) - offsets
    safe = np.where(scales == 0.0, 1.0, scales)
    pts = (X - offsets[:, None, :]) / safe[:, None, :]
    pts = np.where((scales == 0.0)[:, None, :], 0.0, pts)
    return pts, offsets, scales


class LstmAutoencoder(BaseEstimator, TransformerMixin):
    """Fixed-ratio lossy compressor for fixed-length trajectory windows.

    Parameters mirror the training setup: ``loss`` is one of ``"mse"``,
    ``"rescaled_euclidean"`` (spatial data) or ``"equirect_time"`` (GPS data
    with lon/lat degrees and a timestamp).
    """

    def __init__(self, seq_len=20, latent_dim=9, hidden_size=100, loss="mse",
                 epochs=100, batch_size=64, learning_rate=0.001, seed=0,
                 reverse_input=True):
        self.seq_len = seq_len
        self.latent_dim = latent_dim
        self.hidden_size = hidden_size
        self.loss = loss
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.reverse_input = reverse_input

    def _check_windows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[1] != self.seq_len or X.shape[2] != 3:
            raise ValueError(
                f"expected windows of shape (n, {self.seq_len}, 3), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("windows contain non-finite values")
        return X

    def fit(self, X, y=None):
        X = self._check_windows(X)
        pts, offsets, scales = _normalize_windows(X)
        dataset = [NormalizedTrajectory(pts[k], NormParams(offsets[k], scales[k]))
                   for k in range(len(X))]
        cfg = TrainConfig(batch_size=self.batch_size, epochs=self.epochs,
                          seed=self.seed, loss_kind=self.loss,
                          reverse_input=self.reverse_input,
                          learning_rate=self.learning_rate)
        self.model_, self.loss_history_ = train(dataset, cfg, self.seq_len,
                                                self.latent_dim, self.hidden_size)
        return self

    def transform(self, X) -> np.ndarray:
        """Compress windows to (n, latent_dim + 6) rows."""
        self._require_fitted()
        X = self._check_windows(X)
        pts, offsets, scales = _normalize_windows(X)
        z, _ = _encode_batch(self.model_, pts, self.reverse_input)
        return np.hstack([z, offsets, scales])

    def inverse_transform(self, Z) -> np.ndarray:
        """Reconstruct (n, seq_len, 3) windows from compressed rows."""
        self._require_fitted()
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != self.latent_dim + 6:
            raise ValueError(
                f"expected compressed rows of width {self.latent_dim + 6}, got {Z.shape}")
        z = Z[:, :self.latent_dim]
        offsets = Z[:, self.latent_dim:self.latent_dim + 3]
        scales = Z[:, self.latent_dim + 3:]
        y, _ = _decode_batch(self.model_, z)
        return y * scales[:, None, :] + offsets[:, None, :]

    def predict(self, X) -> np.ndarray:
        """Round-trip reconstruction of raw windows."""
        return self.inverse_transform(self.transform(X))

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")


class IdentityCompressor(BaseEstimator, TransformerMixin):
    """Stand-in compressor whose reconstruction is the input itself.

    Used to exercise evaluation harness wiring without training a model.
    """

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return np.asarray(X, dtype=float)

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float)

    def predict(self, X):
        return np.asarray(X, dtype=float)
