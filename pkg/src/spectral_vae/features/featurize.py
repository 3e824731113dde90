"""Fixed-length clip featurization (VAE latents or MFCC) and feature-file building."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import dsp
from ..audio_io import AudioBuffer, load_wav
from ..errors import ClipTooLong, DimensionDrift, MissingFile
from .formats import FeatureFile, write_feature_file
from .patches import normalize_spectrogram, patch_array

log = logging.getLogger(__name__)

CLIP_SAMPLES = 16000
# (320 - 1) * hop 50 + win 256: padding that makes a 1 s clip yield 320 STFT frames
VAE_CLIP_SAMPLES = 16206
VAE_WINDOW_FRAMES = 96  # 0.3 s at hop 50 / 16 kHz (3.125 ms per frame)
VAE_STEP_FRAMES = 32    # 0.1 s
N_MFCC = 13
N_MEL = 26


@dataclass
class FeatureVector:
    values: np.ndarray
    kind: str
    label: int | None = None

    @property
    def dim(self):
        return self.values.size


def _pad(samples, length):
    if samples.size > CLIP_SAMPLES:
        raise ClipTooLong(f"clip has {samples.size} samples, limit is {CLIP_SAMPLES}")
    out = np.zeros(length)
    out[:samples.size] = samples
    return out


def vae_feature_dim(latent_dim, window_frames=VAE_WINDOW_FRAMES, step_frames=VAE_STEP_FRAMES):
    frames = dsp.n_frames(VAE_CLIP_SAMPLES, dsp.VAE_STFT.win_length, dsp.VAE_STFT.hop_length)
    return (1 + (frames - window_frames) // step_frames) * latent_dim


def mfcc_feature_dim():
    return dsp.n_frames(CLIP_SAMPLES, dsp.MFCC_STFT.win_length, dsp.MFCC_STFT.hop_length) * N_MFCC


def clip_windows(clip, norm_c, window_frames=VAE_WINDOW_FRAMES, step_frames=VAE_STEP_FRAMES):
    """Normalized (n_windows, window_frames, 128) spectrogram windows of a <= 1 s clip."""
    x = _pad(clip.samples, VAE_CLIP_SAMPLES)
    spec = dsp.spectrogram(AudioBuffer(x, clip.sample_rate), dsp.VAE_STFT)
    return patch_array(normalize_spectrogram(spec.data, norm_c), window_frames, step_frames)


def featurize_vae(clip, model, step_frames=VAE_STEP_FRAMES, label=None):
    """Concatenated posterior means of every 0.3 s window of the clip."""
    if model.norm_c is None:
        raise ValueError("VAE model carries no spectrogram compression constant")
    windows = clip_windows(clip, model.norm_c, model.input_shape[0], step_frames)
    mean, _, _, _ = model.encode_batch(windows)
    return FeatureVector(mean.ravel(), "vae", label)


_MFCC_FB = None


def featurize_mfcc(clip, label=None):
    global _MFCC_FB
    if _MFCC_FB is None:
        _MFCC_FB = dsp.make_mel_filterbank(N_MEL, dsp.MFCC_STFT.n_fft, 16000)
    x = _pad(clip.samples, CLIP_SAMPLES)
    coeffs = dsp.mfcc(AudioBuffer(x, clip.sample_rate), dsp.MFCC_STFT, _MFCC_FB, N_MFCC)
    return FeatureVector(coeffs.ravel(), "mfcc", label)


def _featurize_path(args):
    path, kind, model = args
    clip = load_wav(path)
    if kind == "vae":
        return featurize_vae(clip, model).values
    return featurize_mfcc(clip).values


def build_feature_file(manifest, kind, out, model=None, split=None, jobs=1):
    """Featurize every (selected) manifest entry in order and write an SFEA file.

    Returns a summary dict with per-split record counts and the file size.
    """
    if kind not in ("vae", "mfcc"):
        raise ValueError(f"unknown feature kind {kind!r}")
    if kind == "vae" and model is None:
        raise ValueError("vae features need a trained model")
    selected = manifest.select(split)
    paths = [selected.resolve(e) for e in selected.entries]
    missing = [p for p in paths if not p.is_file()]
    if missing:
        raise MissingFile(missing)

    dim = vae_feature_dim(model.latent_dim, model.input_shape[0]) if kind == "vae" else mfcc_feature_dim()
    tasks = [(p, kind, model) for p in paths]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            vectors = list(pool.map(_featurize_path, tasks, chunksize=16))
    else:
        vectors = [_featurize_path(t) for t in tasks]

    values = np.zeros((len(vectors), dim), dtype=np.float32)
    for i, (vec, path) in enumerate(zip(vectors, paths)):
        if vec.size != dim:
            raise DimensionDrift(f"{path}: produced {vec.size} values, expected {dim}")
        values[i] = vec
    labels = np.array([selected.label_index(e.label) for e in selected.entries], dtype=np.uint32)
    size = write_feature_file(out, FeatureFile(kind, values, labels, len(manifest.classes)))
    counts = {s: sum(e.split == s for e in selected.entries) for s in ("train", "test")}
    log.info("wrote %d %s records (%d bytes) to %s", len(labels), kind, size, out)
    return {**counts, "records": len(labels), "dim": dim, "bytes": size}
