"""From-scratch LSTM sequence autoencoder.

Encoder LSTM reads the (optionally reversed) normalized trajectory and its
final hidden state becomes the latent code. The decoder LSTM receives that
code as input at every time step from a zero initial state, and a dense head
shared across steps maps each hidden state back to a point triple. Training
is plain reverse-mode backpropagation through time plus Adam, all in 64-bit
numpy; no autograd framework involved.

Gate order in the stacked weight matrices is (f, i, z, o): forget gate,
input gate, candidate activation, output gate.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import (SPATIAL3D, NormalizedTrajectory, NormParams, Trajectory,
                   denormalize_points, normalize)
from .geo import EARTH_RADIUS_M

GATE_ORDER = ("f", "i", "z", "o")

MSE = "mse"
RESCALED_EUCLIDEAN = "rescaled_euclidean"
EQUIRECT_TIME = "equirect_time"
LOSS_KINDS = (MSE, RESCALED_EUCLIDEAN, EQUIRECT_TIME)

MODEL_FORMAT = "trajcompress-model"
LATENT_MAGIC = b"TLC1"
LATENT_VERSION = 1
_LATENT_HEADER = struct.Struct("<4sIII")  # magic, version, seq_len, latent_dim


def weight_count(n_in: int, n_out: int) -> int:
    """Number of trainable values in one LSTM cell (4 gate layers + biases)."""
    if n_in < 1 or n_out < 1:
        raise ValueError("dimensions must be >= 1")
    return 4 * ((n_in + 1) * n_out + n_out * n_out)


def latent_dim_for_ratio(seq_len: int, ratio: float) -> int:
    """Latent width that hits a compression ratio, given 6 rescale values.

    The compressed size seq_len*3/ratio must be an integer strictly greater
    than 6, otherwise the ratio is infeasible.
    """
    total = seq_len * 3 / ratio
    rounded = round(total)
    if abs(total - rounded) > 1e-9 * max(1.0, abs(total)):
        raise ValueError(f"ratio {ratio} gives non-integral compressed size {total}")
    latent = int(rounded) - 6
    if latent < 1:
        raise ValueError(f"ratio {ratio} infeasible: compressed size must exceed 6 values")
    return latent


@dataclass
class LstmParams:
    """Stacked gate weights: w (4h, n_in), u (4h, h), b (4h,)."""

    w: np.ndarray
    u: np.ndarray
    b: np.ndarray

    @property
    def n_out(self) -> int:
        return self.u.shape[1]

    @property
    def n_in(self) -> int:
        return self.w.shape[1]

    @property
    def param_count(self) -> int:
        return self.w.size + self.u.size + self.b.size

    def gate(self, name: str, array: np.ndarray | None = None) -> np.ndarray:
        """Slice one gate's rows out of a stacked array (default: w)."""
        k = GATE_ORDER.index(name)
        h = self.n_out
        return (self.w if array is None else array)[k * h:(k + 1) * h]


@dataclass
class DenseParams:
    w: np.ndarray  # (3, hidden)
    b: np.ndarray  # (3,)


@dataclass
class ModelParams:
    encoder: LstmParams  # 3 -> latent_dim
    decoder: LstmParams  # latent_dim -> hidden
    head: DenseParams  # hidden -> 3
    seq_len: int
    latent_dim: int

    @property
    def hidden(self) -> int:
        return self.decoder.n_out

    def as_dict(self) -> dict[str, np.ndarray]:
        """Named views of every parameter array, in a fixed order."""
        return {
            "enc.w": self.encoder.w, "enc.u": self.encoder.u, "enc.b": self.encoder.b,
            "dec.w": self.decoder.w, "dec.u": self.decoder.u, "dec.b": self.decoder.b,
            "head.w": self.head.w, "head.b": self.head.b,
        }

    @property
    def param_count(self) -> int:
        return sum(a.size for a in self.as_dict().values())


@dataclass
class LatentCode:
    """Encoder output plus the rescale values; the unit of compressed storage."""

    z: np.ndarray
    params: NormParams
    seq_len: int
    mode: str = SPATIAL3D

    @property
    def value_count(self) -> int:
        return len(self.z) + 6


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    loss_kind: str = MSE
    reverse_input: bool = True
    learning_rate: float = 0.001

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")


def _uniform(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _init_lstm(rng, n_in: int, n_out: int) -> LstmParams:
    return LstmParams(
        w=_uniform(rng, n_in, n_out, (4 * n_out, n_in)),
        u=_uniform(rng, n_out, n_out, (4 * n_out, n_out)),
        b=np.zeros(4 * n_out),
    )


def init_model(seq_len: int, latent_dim: int, hidden: int = 100,
               seed: int | np.random.Generator = 0) -> ModelParams:
    """Seeded fan-scaled uniform init; biases zero."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ModelParams(
        encoder=_init_lstm(rng, 3, latent_dim),
        decoder=_init_lstm(rng, latent_dim, hidden),
        head=DenseParams(w=_uniform(rng, hidden, 3, (3, hidden)), b=np.zeros(3)),
        seq_len=seq_len,
        latent_dim=latent_dim,
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_step(p: LstmParams, x, h_prev, c_prev):
    """One LSTM cell step; accepts single vectors or (batch, dim) arrays."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h, c, _ = _lstm_step_cached(p, np.atleast_2d(x),
                                np.atleast_2d(np.asarray(h_prev, dtype=float)),
                                np.atleast_2d(np.asarray(c_prev, dtype=float)))
    return (h[0], c[0]) if single else (h, c)


def _lstm_step_cached(p: LstmParams, x, h_prev, c_prev):
    n = p.n_out
    pre = x @ p.w.T + h_prev @ p.u.T + p.b
    f = _sigmoid(pre[:, 0 * n:1 * n])
    i = _sigmoid(pre[:, 1 * n:2 * n])
    z = np.tanh(pre[:, 2 * n:3 * n])
    o = _sigmoid(pre[:, 3 * n:4 * n])
    c = c_prev * f + z * i
    tc = np.tanh(c)
    h = o * tc
    return h, c, (f, i, z, o, tc)


def _lstm_forward(p: LstmParams, xs: np.ndarray):
    """Run a sequence through the cell; returns outputs and backprop caches."""
    batch, steps, _ = xs.shape
    n = p.n_out
    h = np.zeros((batch, n))
    c = np.zeros((batch, n))
    hs = np.empty((batch, steps, n))
    cache = {k: np.empty((batch, steps, n)) for k in ("f", "i", "z", "o", "tc", "h_prev", "c_prev")}
    for t in range(steps):
        cache["h_prev"][:, t] = h
        cache["c_prev"][:, t] = c
        h, c, (f, i, z, o, tc) = _lstm_step_cached(p, xs[:, t], h, c)
        cache["f"][:, t] = f
        cache["i"][:, t] = i
        cache["z"][:, t] = z
        cache["o"][:, t] = o
        cache["tc"][:, t] = tc
        hs[:, t] = h
    return hs, cache


def _lstm_backward(p: LstmParams, xs: np.ndarray, cache, dh_seq: np.ndarray):
    """Reverse-mode through time. Returns per-array grads and d(inputs)."""
    batch, steps, _ = xs.shape
    n = p.n_out
    dw = np.zeros_like(p.w)
    du = np.zeros_like(p.u)
    db = np.zeros_like(p.b)
    dxs = np.empty_like(xs)
    dh_carry = np.zeros((batch, n))
    dc_carry = np.zeros((batch, n))
    for t in range(steps - 1, -1, -1):
        f = cache["f"][:, t]
        i = cache["i"][:, t]
        z = cache["z"][:, t]
        o = cache["o"][:, t]
        tc = cache["tc"][:, t]
        c_prev = cache["c_prev"][:, t]
        h_prev = cache["h_prev"][:, t]
        dh = dh_seq[:, t] + dh_carry
        do = dh * tc
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        df = dc * c_prev
        di = dc * z
        dz = dc * i
        dc_carry = dc * f
        da = np.concatenate([
            df * f * (1.0 - f),
            di * i * (1.0 - i),
            dz * (1.0 - z * z),
            do * o * (1.0 - o),
        ], axis=1)
        x_t = xs[:, t]
        dw += da.T @ x_t
        du += da.T @ h_prev
        db += da.sum(axis=0)
        dxs[:, t] = da @ p.w
        dh_carry = da @ p.u
    return {"w": dw, "u": du, "b": db}, dxs


# ---------------------------------------------------------------------------
# encode / decode


def _encode_batch(m: ModelParams, points: np.ndarray, reverse: bool):
    xs = points[:, ::-1, :] if reverse else points
    xs = np.ascontiguousarray(xs)
    hs, cache = _lstm_forward(m.encoder, xs)
    return hs[:, -1], (xs, hs, cache)


def _decode_batch(m: ModelParams, z: np.ndarray):
    xs = np.repeat(z[:, None, :], m.seq_len, axis=1)
    hs, cache = _lstm_forward(m.decoder, xs)
    y = hs @ m.head.w.T + m.head.b
    return y, (xs, hs, cache)


def encode(m: ModelParams, nt: NormalizedTrajectory, reverse: bool = True) -> LatentCode:
    """Latent code of one normalized trajectory (final encoder hidden state)."""
    pts = np.asarray(nt.points, dtype=float)
    if pts.shape != (m.seq_len, 3):
        raise ValueError(f"expected ({m.seq_len}, 3) points, got {pts.shape}")
    z, _ = _encode_batch(m, pts[None], reverse)
    return LatentCode(z[0], nt.params, m.seq_len, nt.mode)


def decode(m: ModelParams, code: LatentCode) -> np.ndarray:
    """Normalized-domain reconstruction, (seq_len, 3), not clamped to [0, 1]."""
    z = np.asarray(code.z, dtype=float)
    if z.shape != (m.latent_dim,):
        raise ValueError(f"expected latent of length {m.latent_dim}, got {z.shape}")
    y, _ = _decode_batch(m, z[None])
    return y[0]


def compress(m: ModelParams, t: Trajectory, reverse: bool = True) -> LatentCode:
    """normalize -> encode; the code plus rescale values is the compression."""
    if len(t) != m.seq_len:
        raise ValueError(f"trajectory length {len(t)} != model seq_len {m.seq_len}")
    return encode(m, normalize(t), reverse)


def reconstruct(m: ModelParams, code: LatentCode) -> Trajectory:
    """decode -> denormalize. Reconstructed timestamps may be non-monotonic."""
    pts = denormalize_points(decode(m, code), code.params)
    return Trajectory(pts, code.mode, validate=False)


# ---------------------------------------------------------------------------
# losses


def loss(pred, target, params: NormParams | None, kind: str) -> float:
    """Reconstruction loss of one or more normalized sequences."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.ndim == 2:
        pred, target = pred[None], target[None]
    if params is None:
        offsets = np.zeros((len(pred), 3))
        scales = np.ones((len(pred), 3))
    else:
        offsets = np.broadcast_to(params.offset, (len(pred), 3))
        scales = np.broadcast_to(params.scale, (len(pred), 3))
    value, _ = _loss_and_dpred(pred, target, offsets, scales, kind)
    return value


def _loss_and_dpred(pred, target, offsets, scales, kind):
    """Mean loss over batch and time plus its gradient w.r.t. ``pred``."""
    batch, steps, _ = pred.shape
    n = batch * steps
    if kind == MSE:
        diff = pred - target
        return float(np.mean(diff * diff)), 2.0 * diff / diff.size
    off = offsets[:, None, :]
    sc = scales[:, None, :]
    p = pred * sc + off
    q = target * sc + off
    if kind == RESCALED_EUCLIDEAN:
        diff = p - q
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        safe = np.where(dist == 0.0, 1.0, dist)
        dpred = diff / safe[:, :, None] * sc / n
        dpred[dist == 0.0] = 0.0
        return float(np.mean(dist)), dpred
    if kind == EQUIRECT_TIME:
        return _equirect_time_loss(p, q, sc, n)
    raise ValueError(f"unknown loss kind {kind!r}")


def _equirect_time_loss(p, q, sc, n):
    """Equirectangular spatial distance plus squared time error, denormalized.

    Columns of the denormalized points are (lon deg, lat deg, t seconds).
    The mean-latitude term makes the latitude gradient carry an extra
    -v*w*sin(mid)/2 contribution.
    """
    deg = np.pi / 180.0
    r = EARTH_RADIUS_M
    lam_p, phi_p = p[..., 0] * deg, p[..., 1] * deg
    lam_q, phi_q = q[..., 0] * deg, q[..., 1] * deg
    u = phi_p - phi_q
    v = lam_p - lam_q
    mid = (phi_p + phi_q) / 2.0
    cos_mid = np.cos(mid)
    w = v * cos_mid
    s = np.sqrt(u * u + w * w)
    dt = p[..., 2] - q[..., 2]
    value = float(np.mean(r * s + dt * dt))
    safe = np.where(s == 0.0, 1.0, s)
    ds_dphi = (u - w * v * np.sin(mid) / 2.0) / safe
    ds_dlam = (w * cos_mid) / safe
    ds_dphi[s == 0.0] = 0.0
    ds_dlam[s == 0.0] = 0.0
    dpred = np.empty_like(p)
    dpred[..., 0] = r * ds_dlam * deg / n
    dpred[..., 1] = r * ds_dphi * deg / n
    dpred[..., 2] = 2.0 * dt / n
    return value, dpred * sc


def loss_and_gradients(m: ModelParams, points: np.ndarray, offsets: np.ndarray,
                       scales: np.ndarray, kind: str, reverse: bool = True):
    """Mean batch loss and its exact gradient for every parameter.

    ``points`` is a (batch, seq_len, 3) array of normalized sequences; the
    target is the un-reversed sequence. Gradients flow through the decoder,
    through the repeated latent input, and back through the encoder.
    """
    z, (enc_xs, _, enc_cache) = _encode_batch(m, points, reverse)
    y, (dec_xs, dec_hs, dec_cache) = _decode_batch(m, z)
    value, dy = _loss_and_dpred(y, points, offsets, scales, kind)

    dhead_w = np.tensordot(dy, dec_hs, axes=((0, 1), (0, 1)))
    dhead_b = dy.sum(axis=(0, 1))
    dhs = dy @ m.head.w

    dec_grads, ddec_xs = _lstm_backward(m.decoder, dec_xs, dec_cache, dhs)
    dz = ddec_xs.sum(axis=1)

    denc_h = np.zeros((points.shape[0], m.seq_len, m.latent_dim))
    denc_h[:, -1] = dz
    enc_grads, _ = _lstm_backward(m.encoder, enc_xs, enc_cache, denc_h)

    grads = {
        "enc.w": enc_grads["w"], "enc.u": enc_grads["u"], "enc.b": enc_grads["b"],
        "dec.w": dec_grads["w"], "dec.u": dec_grads["u"], "dec.b": dec_grads["b"],
        "head.w": dhead_w, "head.b": dhead_b,
    }
    return value, grads


def gradients(m: ModelParams, batch, cfg: TrainConfig) -> dict[str, np.ndarray]:
    """Gradient of the mean batch loss; ``batch`` holds NormalizedTrajectory."""
    points, offsets, scales = _stack_dataset(batch, m.seq_len)
    _, grads = loss_and_gradients(m, points, offsets, scales, cfg.loss_kind,
                                  cfg.reverse_input)
    return grads


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], lr: float = 0.001,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        return cls(m={k: np.zeros_like(a) for k, a in params.items()},
                   v={k: np.zeros_like(a) for k, a in params.items()},
                   t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_update(state: AdamState, params: dict[str, np.ndarray],
                grads: dict[str, np.ndarray]):
    """Bias-corrected Adam step, applied in place; returns (params, state)."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for k, p in params.items():
        g = grads[k]
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = state.m[k] / (1.0 - b1 ** state.t)
        v_hat = state.v[k] / (1.0 - b2 ** state.t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# training


def _stack_dataset(dataset, seq_len: int):
    points = np.empty((len(dataset), seq_len, 3))
    offsets = np.empty((len(dataset), 3))
    scales = np.empty((len(dataset), 3))
    for k, nt in enumerate(dataset):
        pts = np.asarray(nt.points, dtype=float)
        if pts.shape != (seq_len, 3):
            raise ValueError(f"sequence {k} has shape {pts.shape}, expected ({seq_len}, 3)")
        points[k] = pts
        offsets[k] = nt.params.offset
        scales[k] = nt.params.scale
    return points, offsets, scales


def train(dataset, cfg: TrainConfig, seq_len: int, latent_dim: int,
          hidden: int = 100):
    """Train a fresh model; fully deterministic given cfg.seed.

    Returns ``(ModelParams, loss_history)`` where the history holds the mean
    loss of every epoch.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty training dataset")
    points, offsets, scales = _stack_dataset(dataset, seq_len)
    rng = np.random.default_rng(cfg.seed)
    model = init_model(seq_len, latent_dim, hidden, rng)
    params = model.as_dict()
    state = AdamState.for_params(params, lr=cfg.learning_rate)
    n = len(dataset)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            value, grads = loss_and_gradients(model, points[idx], offsets[idx],
                                              scales[idx], cfg.loss_kind,
                                              cfg.reverse_input)
            adam_update(state, params, grads)
            total += value * len(idx)
        history.append(total / n)
    return model, history


# ---------------------------------------------------------------------------
# serialization


def save_model(m: ModelParams, path, seed: int | None = None) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": 1,
        "seq_len": m.seq_len,
        "latent_dim": m.latent_dim,
        "hidden": m.hidden,
        "seed": seed,
        "arrays": {k: a.tolist() for k, a in m.as_dict().items()},
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_model(path) -> ModelParams:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != 1:
        raise ValueError(f"{path}: not a version-1 model checkpoint")
    arrays = {k: np.asarray(v, dtype=float) for k, v in doc["arrays"].items()}
    return ModelParams(
        encoder=LstmParams(arrays["enc.w"], arrays["enc.u"], arrays["enc.b"]),
        decoder=LstmParams(arrays["dec.w"], arrays["dec.u"], arrays["dec.b"]),
        head=DenseParams(arrays["head.w"], arrays["head.b"]),
        seq_len=int(doc["seq_len"]),
        latent_dim=int(doc["latent_dim"]),
    )


def write_latent_code(path, code: LatentCode) -> None:
    """Binary layout: 16-byte header, then latent + rescale values as float32."""
    payload = np.concatenate([code.z, code.params.offset, code.params.scale])
    with open(path, "wb") as f:
        f.write(_LATENT_HEADER.pack(LATENT_MAGIC, LATENT_VERSION, code.seq_len, len(code.z)))
        f.write(payload.astype("<f4").tobytes())


def read_latent_code(path, mode: str = SPATIAL3D) -> LatentCode:
    with open(path, "rb") as f:
        magic, version, seq_len, latent = _LATENT_HEADER.unpack(f.read(_LATENT_HEADER.size))
        if magic != LATENT_MAGIC or version != LATENT_VERSION:
            raise ValueError(f"{path}: not a latent-code file")
        payload = np.frombuffer(f.read(4 * (latent + 6)), dtype="<f4").astype(float)
    if payload.size != latent + 6:
        raise ValueError(f"{path}: truncated latent-code file")
    return LatentCode(payload[:latent], NormParams(payload[latent:latent + 3],
                                                   payload[latent + 3:]),
                      seq_len, mode)
