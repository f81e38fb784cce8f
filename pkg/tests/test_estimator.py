import numpy as np
import pytest
from sklearn.base import clone

from trajcompress.estimator import IdentityCompressor, LstmAutoencoder


def windows(n=12, seq_len=8, seed=0):
    rng = np.random.default_rng(seed)
    base = np.cumsum(rng.normal(0, 1, size=(n, seq_len, 3)), axis=1)
    return base * 10.0 + rng.uniform(-50, 50, size=(n, 1, 3))


@pytest.fixture(scope="module")
def fitted():
    est = LstmAutoencoder(seq_len=8, latent_dim=3, hidden_size=10, epochs=10,
                          batch_size=4, seed=1)
    return est.fit(windows())


class TestSklearnApi:
    def test_get_params_roundtrip(self):
        est = LstmAutoencoder(latent_dim=5, epochs=3)
        params = est.get_params()
        assert params["latent_dim"] == 5 and params["epochs"] == 3
        est2 = LstmAutoencoder(**params)
        assert est2.get_params() == params

    def test_set_params(self):
        est = LstmAutoencoder()
        est.set_params(latent_dim=7, loss="rescaled_euclidean")
        assert est.latent_dim == 7 and est.loss == "rescaled_euclidean"

    def test_clone_unfitted_copy(self, fitted):
        fresh = clone(fitted)
        assert fresh.get_params() == fitted.get_params()
        assert not hasattr(fresh, "model_")

    def test_unfitted_transform_raises(self):
        with pytest.raises(RuntimeError, match="not fitted"):
            LstmAutoencoder().transform(np.zeros((1, 20, 3)))


class TestShapes:
    def test_transform_width_is_latent_plus_six(self, fitted):
        Z = fitted.transform(windows(5, 8, seed=3))
        assert Z.shape == (5, 3 + 6)

    def test_inverse_transform_shape(self, fitted):
        Z = fitted.transform(windows(5, 8, seed=3))
        X = fitted.inverse_transform(Z)
        assert X.shape == (5, 8, 3)

    def test_predict_equals_round_trip(self, fitted):
        X = windows(4, 8, seed=5)
        assert np.allclose(fitted.predict(X), fitted.inverse_transform(fitted.transform(X)))

    def test_compressed_row_layout(self, fitted):
        X = windows(3, 8, seed=7)
        Z = fitted.transform(X)
        assert np.allclose(Z[:, 3:6], X.min(axis=1))  # offsets
        assert np.allclose(Z[:, 6:9], X.max(axis=1) - X.min(axis=1))  # scales

    def test_bad_shapes_rejected(self, fitted):
        with pytest.raises(ValueError, match="shape"):
            fitted.transform(np.zeros((3, 9, 3)))
        with pytest.raises(ValueError, match="width"):
            fitted.inverse_transform(np.zeros((3, 4)))

    def test_non_finite_rejected(self):
        X = windows(3, 8)
        X[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            LstmAutoencoder(seq_len=8).fit(X)


class TestDeterminism:
    def test_same_seed_same_model(self):
        X = windows(6, 8, seed=2)
        a = LstmAutoencoder(seq_len=8, latent_dim=2, hidden_size=6, epochs=5, seed=4).fit(X)
        b = LstmAutoencoder(seq_len=8, latent_dim=2, hidden_size=6, epochs=5, seed=4).fit(X)
        assert a.loss_history_ == b.loss_history_
        probe = windows(2, 8, seed=9)
        assert np.array_equal(a.transform(probe), b.transform(probe))


class TestAgainstFunctionalApi:
    def test_transform_matches_compress(self, fitted):
        from trajcompress.autoencoder import compress
        from trajcompress.core import Trajectory
        X = windows(2, 8, seed=11)
        Z = fitted.transform(X)
        for k in range(len(X)):
            code = compress(fitted.model_, Trajectory(X[k]))
            assert np.allclose(Z[k, :3], code.z)
            assert np.allclose(Z[k, 3:6], code.params.offset)
            assert np.allclose(Z[k, 6:9], code.params.scale)


class TestIdentityCompressor:
    def test_round_trip_is_exact(self):
        X = windows(4, 8, seed=0)
        stub = IdentityCompressor().fit(X)
        assert np.array_equal(stub.predict(X), X)
