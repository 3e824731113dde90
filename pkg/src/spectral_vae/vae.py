"""Convolutional VAE over spectrogram patches.

Encoder: conv(k8, s2) -> ReLU -> conv(k8, s2) -> ReLU -> global average pool
-> two dense heads (mean, log-variance). Decoder: dense -> reshape ->
convT(k8, s2) -> ReLU -> convT(k8, s2) -> ReLU. The final ReLU makes
reconstructions nonnegative with exact zeros wherever the pre-activation is
not positive.

Loss per sample: mean squared error over the patch plus KL_WEIGHT times the
KL divergence of N(mean, exp(logvar)) from N(0, I). Batch losses are means
over samples, so the decomposition total = recon + KL_WEIGHT * kl holds for
batches as well.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergedLoss,
    EmptyDataset,
    GraphNotEvaluated,
    IndexOutOfRange,
    NonFiniteValue,
    ShapeMismatch,
)
from .nn import Adam, make_rng
from .nn.checkpoint import load_tensors, save_tensors
from .nn.functional import conv_output_size, conv_transposed_output_size
from .nn.layers import (
    Conv2d,
    ConvTranspose2d,
    Dense,
    GlobalAvgPool,
    ReLU,
    Reshape,
    Sequential,
)

log = logging.getLogger(__name__)

KL_WEIGHT = 0.0005
KERNEL = 8
STRIDE = 2
PAD = 3
REFERENCE_LATENT_DIMS = (13, 40)


@dataclass
class LatentVector:
    mean: np.ndarray
    logvar: np.ndarray
    sample: np.ndarray
    noise: np.ndarray


class VaeModel:
    def __init__(self, input_shape=(8, 128), latent_dim=13, channels=(32, 64), seed=0,
                 norm_c=None):
        self.input_shape = tuple(int(v) for v in input_shape)
        self.latent_dim = int(latent_dim)
        self.channels = tuple(int(v) for v in channels)
        self.norm_c = norm_c
        c1, c2 = self.channels
        h, w = self.input_shape
        h1, w1 = (conv_output_size(v, KERNEL, STRIDE, PAD) for v in (h, w))
        h2, w2 = (conv_output_size(v, KERNEL, STRIDE, PAD) for v in (h1, w1))
        back = [conv_transposed_output_size(conv_transposed_output_size(v, KERNEL, STRIDE, PAD),
                                            KERNEL, STRIDE, PAD) for v in (h2, w2)]
        if min(h1, w1, h2, w2) <= 0 or tuple(back) != self.input_shape:
            raise ShapeMismatch(
                f"input shape {self.input_shape} is not reproduced by the k{KERNEL}/s{STRIDE} "
                f"decoder (would give {tuple(back)}); use multiples of 4")
        self.bottleneck_shape = (c2, h2, w2)

        rng = make_rng(seed, "vae/init")
        self.trunk = Sequential(
            Conv2d(1, c1, KERNEL, STRIDE, PAD, rng=rng, input_grad=False), ReLU(),
            Conv2d(c1, c2, KERNEL, STRIDE, PAD, rng=rng), ReLU(),
            GlobalAvgPool(),
        )
        self.mean_head = Dense(c2, self.latent_dim, rng=rng)
        self.logvar_head = Dense(c2, self.latent_dim, rng=rng)
        self.decoder = Sequential(
            Dense(self.latent_dim, c2 * h2 * w2, rng=rng),
            Reshape(self.bottleneck_shape),
            ConvTranspose2d(c2, c1, KERNEL, STRIDE, PAD, rng=rng), ReLU(),
            ConvTranspose2d(c1, 1, KERNEL, STRIDE, PAD, rng=rng), ReLU(),
        )
        self._pending = None

    @property
    def is_reference_config(self):
        return self.latent_dim in REFERENCE_LATENT_DIMS

    def parameters(self):
        return (self.trunk.parameters() + self.mean_head.parameters()
                + self.logvar_head.parameters() + self.decoder.parameters())

    def _named_layers(self):
        t, d = self.trunk.layers, self.decoder.layers
        return {
            "encoder.conv1": t[0], "encoder.conv2": t[2],
            "encoder.mean": self.mean_head, "encoder.logvar": self.logvar_head,
            "decoder.dense": d[0], "decoder.convT1": d[2], "decoder.convT2": d[4],
        }

    # -- batched passes ------------------------------------------------------

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.input_shape:
            x = x[None]
        if x.ndim != 3 or x.shape[1:] != self.input_shape:
            raise ShapeMismatch(f"patch shape {x.shape} does not match model input {self.input_shape}")
        return x

    def encode_batch(self, x, rng=None, train=False):
        """Return (mean, logvar, sample, noise) for a (B, H, W) batch."""
        x = self._as_batch(x)
        feats = self.trunk.forward(x[:, None], train=train)
        mean = self.mean_head.forward(feats)
        logvar = self.logvar_head.forward(feats)
        if train:
            noise = rng.standard_normal(mean.shape)
        else:
            noise = np.zeros_like(mean)
        sample = mean + np.exp(0.5 * logvar) * noise
        return mean, logvar, sample, noise

    def decode_batch(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 1:
            z = z[None]
        if z.shape[1] != self.latent_dim:
            raise ShapeMismatch(f"latent length {z.shape[1]} != latent_dim {self.latent_dim}")
        return self.decoder.forward(z)[:, 0]

    def loss(self, x, rng=None, train=True):
        """Forward pass with loss; caches what `backward` needs."""
        x = self._as_batch(x)
        mean, logvar, sample, noise = self.encode_batch(x, rng, train)
        recon_x = self.decode_batch(sample)
        total, recon, kl = vae_loss(x, recon_x, mean, logvar)
        self._pending = (x, recon_x, mean, logvar, noise)
        return total, recon, kl

    def backward(self):
        if self._pending is None:
            raise GraphNotEvaluated("VaeModel.backward called before loss")
        x, recon_x, mean, logvar, noise = self._pending
        b = x.shape[0]
        d_out = 2.0 * (recon_x - x) / x.size
        dz = self.decoder.backward(d_out[:, None])
        std = np.exp(0.5 * logvar)
        d_mean = dz + KL_WEIGHT * mean / b
        d_logvar = dz * 0.5 * std * noise + KL_WEIGHT * 0.5 * (np.exp(logvar) - 1.0) / b
        d_feats = self.mean_head.backward(d_mean) + self.logvar_head.backward(d_logvar)
        self.trunk.backward(d_feats)
        self._pending = None

    # -- persistence ---------------------------------------------------------

    def state(self):
        tensors = {
            "meta.input_shape": np.array(self.input_shape, dtype=float),
            "meta.channels": np.array(self.channels, dtype=float),
            "meta.latent_dim": np.array([self.latent_dim], dtype=float),
        }
        if self.norm_c is not None:
            tensors["meta.norm_c"] = np.array([self.norm_c], dtype=float)
        for name, layer in self._named_layers().items():
            tensors[name + ".weight"] = layer.params.weights
            tensors[name + ".bias"] = layer.params.bias
        return tensors

    def load_state(self, tensors):
        for name, layer in self._named_layers().items():
            for suffix, target in (("weight", layer.params.weights), ("bias", layer.params.bias)):
                value = tensors[f"{name}.{suffix}"]
                if value.shape != target.shape:
                    raise ShapeMismatch(f"{name}.{suffix}: {value.shape} != {target.shape}")
                target[...] = value
        if "meta.norm_c" in tensors:
            self.norm_c = float(tensors["meta.norm_c"][0])

    @classmethod
    def from_state(cls, tensors):
        model = cls(
            input_shape=tuple(int(v) for v in tensors["meta.input_shape"]),
            latent_dim=int(tensors["meta.latent_dim"][0]),
            channels=tuple(int(v) for v in tensors["meta.channels"]),
        )
        model.load_state(tensors)
        return model

    def save(self, path):
        save_tensors(path, self.state())

    @classmethod
    def load(cls, path):
        return cls.from_state(load_tensors(path))

    def clone(self):
        return copy.deepcopy(self)


def encode(model, patch, rng=None, mode="eval"):
    """Posterior of a single patch. Eval mode returns sample == mean and draws no noise."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train-mode encoding needs an rng")
    mean, logvar, sample, noise = model.encode_batch(patch, rng, train=(mode == "train"))
    return LatentVector(mean[0], logvar[0], sample[0], noise[0])


def decode(model, z):
    return model.decode_batch(z)[0]


def kl_divergence(mean, logvar):
    """Per-sample KL(N(mean, exp(logvar)) || N(0, I)), summed over latent dims."""
    # expm1 avoids cancellation when logvar is tiny
    return 0.5 * np.sum(np.expm1(logvar) - logvar + mean ** 2, axis=-1)


def vae_loss(x, x_recon, mean, logvar):
    """(total, recon, kl) for one patch or averaged over a batch."""
    x = np.asarray(x, dtype=np.float64)
    x_recon = np.asarray(x_recon, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if x.shape != x_recon.shape or mean.shape != logvar.shape:
        raise ShapeMismatch(f"x {x.shape} vs x' {x_recon.shape}, mean {mean.shape} vs logvar {logvar.shape}")
    recon = float(np.mean((x - x_recon) ** 2))
    kl = float(np.mean(kl_divergence(mean, logvar)))
    return recon + KL_WEIGHT * kl, recon, kl


def reconstruct(model, patch):
    mean, _, _, _ = model.encode_batch(patch)
    out = model.decode_batch(mean)
    return out[0] if np.ndim(patch) == 2 else out


def traversal_values(n_points=4, lo=-1.0, hi=1.0):
    return np.linspace(lo, hi, n_points)


def latent_traversal(model, component, n_points=4, lo=-1.0, hi=1.0):
    """Decode the prior mean with one component swept over evenly spaced values.

    Returns (values, patches) with patches of shape (n_points, H, W).
    """
    if not 0 <= component < model.latent_dim:
        raise IndexOutOfRange(f"component {component} outside [0, {model.latent_dim})")
    values = traversal_values(n_points, lo, hi)
    z = np.zeros((n_points, model.latent_dim))
    z[:, component] = values
    return values, model.decode_batch(z)


@dataclass
class VaeTrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    latent_dim: int = 13
    seed: int = 0
    channels: tuple = (32, 64)


@dataclass
class PatchDataset:
    """Normalized patches (N, H, W) split into train and held-out sets."""

    train: np.ndarray
    test: np.ndarray
    norm_c: float | None = None


@dataclass
class TrainReport:
    seed: int
    train_loss: list = field(default_factory=list)
    train_recon: list = field(default_factory=list)
    train_kl: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)
    test_recon: list = field(default_factory=list)
    test_kl: list = field(default_factory=list)
    best_epoch: int | None = None

    @property
    def epochs(self):
        return len(self.train_loss)

    def to_csv(self):
        lines = ["epoch,train_loss,train_recon,train_kl,test_loss,test_recon,test_kl"]
        for i in range(self.epochs):
            row = [self.train_loss[i], self.train_recon[i], self.train_kl[i],
                   self.test_loss[i], self.test_recon[i], self.test_kl[i]]
            lines.append(",".join([str(i + 1)] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"


def evaluate_loss(model, patches, batch_size=256):
    """Eval-mode (total, recon, kl) averaged over all patches."""
    n = len(patches)
    recon_sum = kl_sum = 0.0
    for start in range(0, n, batch_size):
        batch = patches[start:start + batch_size]
        _, recon, kl = model.loss(batch, train=False)
        recon_sum += recon * len(batch)
        kl_sum += kl * len(batch)
    model._pending = None
    recon, kl = recon_sum / n, kl_sum / n
    return recon + KL_WEIGHT * kl, recon, kl


def train_vae(dataset, config=None):
    """Minibatch Adam training; returns the best-by-held-out-loss model and a report."""
    config = config or VaeTrainConfig()
    train = np.asarray(dataset.train, dtype=np.float64)
    test = np.asarray(dataset.test, dtype=np.float64)
    if len(train) == 0:
        raise EmptyDataset("no training patches")
    if config.batch_size > len(train):
        raise ValueError(f"batch_size {config.batch_size} exceeds {len(train)} training patches")
    model = VaeModel(train.shape[1:], config.latent_dim, config.channels, config.seed,
                     norm_c=getattr(dataset, "norm_c", None))
    report = TrainReport(seed=config.seed)
    if config.epochs == 0:
        return model, report
    held_out = test if len(test) else train

    opt = Adam(model.parameters(), lr=config.lr)
    shuffle_rng = make_rng(config.seed, "vae/shuffle")
    noise_rng = make_rng(config.seed, "vae/noise")
    best_state, best_loss = None, math.inf
    n = len(train)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        recon_sum = kl_sum = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            batch = train[order[start:start + config.batch_size]]
            opt.zero_grad()
            try:
                total, recon, kl = model.loss(batch, rng=noise_rng, train=True)
            except NonFiniteValue as exc:
                raise DivergedLoss(f"non-finite values at epoch {epoch}, batch {b}: {exc}") from exc
            if not math.isfinite(total):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}, batch {b}")
            model.backward()
            opt.step()
            recon_sum += recon * len(batch)
            kl_sum += kl * len(batch)
        recon, kl = recon_sum / n, kl_sum / n
        report.train_recon.append(recon)
        report.train_kl.append(kl)
        report.train_loss.append(recon + KL_WEIGHT * kl)
        t_total, t_recon, t_kl = evaluate_loss(model, held_out)
        report.test_loss.append(t_total)
        report.test_recon.append(t_recon)
        report.test_kl.append(t_kl)
        log.info("epoch %d: train %.6f (kl %.3f) test %.6f", epoch,
                 report.train_loss[-1], kl, t_total)
        if t_total < best_loss:
            best_loss, best_state = t_total, copy.deepcopy(model.state())
            report.best_epoch = epoch
    model.load_state(best_state)
    return model, report
