"""Spectrogram normalization and fixed-shape patch extraction for VAE training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import dsp
from ..audio_io import load_wav
from ..errors import InvalidConstant, TooFewFrames
from ..vae import PatchDataset

NORM_EPS = 1e-10
NORM_PERCENTILE = 99.9


@dataclass(frozen=True)
class Patch:
    data: np.ndarray
    source: tuple  # (file id, start frame)


def log_compress(power):
    return np.log1p(np.asarray(power, dtype=np.float64) / NORM_EPS)


def compression_constant(spectrograms, percentile=NORM_PERCENTILE):
    """Percentile of the log-compressed values over a whole training corpus."""
    values = np.concatenate([log_compress(_data(s)).ravel() for s in spectrograms])
    if values.size == 0:
        raise InvalidConstant("cannot derive a compression constant from no data")
    c = float(np.percentile(values, percentile))
    if not c > 0:
        raise InvalidConstant(f"compression constant must be positive, got {c}")
    return c


def _data(spec):
    return spec.data if isinstance(spec, dsp.Spectrogram) else np.asarray(spec, dtype=np.float64)


def normalize_spectrogram(spec, c):
    """log(1 + P / 1e-10) / c, clipped to [0, 1]. Keeps the input's type."""
    if not c > 0:
        raise InvalidConstant(f"compression constant must be > 0, got {c}")
    out = np.clip(log_compress(_data(spec)) / c, 0.0, 1.0)
    if isinstance(spec, dsp.Spectrogram):
        return dsp.Spectrogram(out, spec.bin_hz, spec.frame_hop_s)
    return out


def patch_starts(n_frames, patch_frames, stride_frames):
    if n_frames < patch_frames:
        raise TooFewFrames(f"{n_frames} frames, need at least {patch_frames}")
    count = 1 + (n_frames - patch_frames) // stride_frames
    return np.arange(count) * stride_frames


def patch_array(spec, patch_frames=8, stride_frames=3):
    """(count, patch_frames, bins) strided copy of all patches."""
    data = _data(spec)
    starts = patch_starts(data.shape[0], patch_frames, stride_frames)
    windows = np.lib.stride_tricks.sliding_window_view(data, patch_frames, axis=0)
    return np.ascontiguousarray(windows[starts].transpose(0, 2, 1))


def extract_patches(spec, patch_frames=8, stride_frames=3, file_id=""):
    """Patch k covers frames [k*stride, k*stride + patch_frames)."""
    data = _data(spec)
    arr = patch_array(data, patch_frames, stride_frames)
    starts = patch_starts(data.shape[0], patch_frames, stride_frames)
    return [Patch(p, (file_id, int(s))) for p, s in zip(arr, starts)]


def build_patch_dataset(train_paths, test_paths, patch_frames=8, stride_frames=3,
                        cfg=dsp.VAE_STFT, max_train=None, max_test=None, rng=None):
    """Spectrogram every file, fit the compression constant on the train files,
    normalize, and cut patches. Optional caps subsample uniformly with `rng`.

    Returns (PatchDataset, train_sources, test_sources).
    """
    train_specs = [dsp.spectrogram(load_wav(p), cfg).data for p in train_paths]
    test_specs = [dsp.spectrogram(load_wav(p), cfg).data for p in test_paths]
    c = compression_constant(train_specs)

    def cut(specs, paths, cap):
        arrays, sources = [], []
        for spec, path in zip(specs, paths):
            arr = patch_array(normalize_spectrogram(spec, c), patch_frames, stride_frames)
            arrays.append(arr)
            starts = patch_starts(spec.shape[0], patch_frames, stride_frames)
            sources.extend((str(path), int(s)) for s in starts)
        if not arrays:
            return np.zeros((0, patch_frames, cfg.n_fft // 2)), []
        patches = np.concatenate(arrays)
        if cap is not None and len(patches) > cap:
            if rng is None:
                raise ValueError("subsampling patches needs an rng")
            keep = np.sort(rng.choice(len(patches), size=cap, replace=False))
            patches = patches[keep]
            sources = [sources[i] for i in keep]
        return patches, sources

    train, train_src = cut(train_specs, train_paths, max_train)
    test, test_src = cut(test_specs, test_paths, max_test)
    return PatchDataset(train, test, c), train_src, test_src
