"""Signal-processing kernels: framing, FFT/STFT, power spectrogram, mel, DCT, MFCC.

Everything here is a pure function of its inputs. Frames are rows, so a
spectrogram is a (frames, bins) matrix and an MFCC matrix is
(frames, n_coeffs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import InvalidRange, SignalTooShort

LOG_FLOOR = 1e-10


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class StftConfig:
    win_length: int = 256
    hop_length: int = 50
    n_fft: int = 256
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop_length <= self.win_length <= self.n_fft:
            raise InvalidRange(
                f"need 0 < hop ({self.hop_length}) <= win ({self.win_length}) "
                f"<= n_fft ({self.n_fft})")
        if not _is_pow2(self.n_fft):
            raise InvalidRange(f"n_fft must be a power of two, got {self.n_fft}")
        if self.window not in ("hann", "rectangular"):
            raise InvalidRange(f"unknown window {self.window!r}")

    def window_values(self):
        if self.window == "rectangular":
            return np.ones(self.win_length)
        # periodic Hann, the usual choice for overlapping STFT frames
        n = np.arange(self.win_length)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.win_length)


# Analysis used for VAE spectrograms: 8 frames at hop 50 span 25 ms of hop
# distance, 256-point FFT gives 128 bins once DC is dropped.
VAE_STFT = StftConfig(win_length=256, hop_length=50, n_fft=256, window="hann")
# 25 ms / 10 ms analysis for MFCC.
MFCC_STFT = StftConfig(win_length=400, hop_length=160, n_fft=512, window="hann")


@dataclass(frozen=True)
class Spectrogram:
    data: np.ndarray
    bin_hz: float
    frame_hop_s: float

    @property
    def n_frames(self):
        return self.data.shape[0]

    @property
    def n_bins(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray
    f_min: float
    f_max: float

    @property
    def n_filters(self):
        return self.weights.shape[0]


def _samples(audio):
    if isinstance(audio, AudioBuffer):
        return audio.samples
    return np.asarray(audio, dtype=np.float64)


def n_frames(n_samples, win_length, hop_length):
    if n_samples < win_length:
        return 0
    return 1 + (n_samples - win_length) // hop_length


def frame_signal(audio, cfg):
    """Split into overlapping frames; returns a (frames, win_length) view."""
    x = _samples(audio)
    count = n_frames(x.size, cfg.win_length, cfg.hop_length)
    if count == 0:
        raise SignalTooShort(
            f"signal has {x.size} samples, need at least {cfg.win_length}")
    windows = np.lib.stride_tricks.sliding_window_view(x, cfg.win_length)
    return windows[::cfg.hop_length][:count]


def _bit_reverse_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(x):
    """Iterative radix-2 decimation-in-time FFT along the last axis.

    Length must be a power of two. Leading axes are treated as a batch.
    """
    a = np.asarray(x, dtype=np.complex128)
    n = a.shape[-1]
    if not _is_pow2(n):
        raise InvalidRange(f"FFT length must be a power of two, got {n}")
    batch = a.shape[:-1]
    a = a[..., _bit_reverse_indices(n)]
    m = 2
    while m <= n:
        half = m // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / m)
        blocks = a.reshape(batch + (n // m, m))
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        a = np.concatenate((even + odd, even - odd), axis=-1).reshape(batch + (n,))
        m *= 2
    return a


def naive_dft(x):
    """O(n^2) DFT by direct summation; reference for testing `fft`."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    k = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return x @ basis.T


def stft(audio, cfg):
    """Windowed, zero-padded FFT of every frame; nonnegative bins 0..n_fft/2."""
    frames = frame_signal(audio, cfg) * cfg.window_values()
    padded = np.zeros((frames.shape[0], cfg.n_fft))
    padded[:, :cfg.win_length] = frames
    return fft(padded)[:, :cfg.n_fft // 2 + 1]


def power_spectrogram(stft_out, sample_rate=16000, hop_length=None):
    """|X|^2 with the DC column removed, leaving n_fft/2 bins."""
    z = np.asarray(stft_out)
    power = z.real ** 2 + z.imag ** 2
    n_fft = 2 * (z.shape[1] - 1)
    bin_hz = sample_rate / n_fft if n_fft else 0.0
    hop_s = hop_length / sample_rate if hop_length else 0.0
    return Spectrogram(power[:, 1:], bin_hz, hop_s)


def spectrogram(audio, cfg=VAE_STFT):
    sr = audio.sample_rate if isinstance(audio, AudioBuffer) else 16000
    return power_spectrogram(stft(audio, cfg), sr, cfg.hop_length)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def make_mel_filterbank(n_filters, n_fft, sample_rate, f_min=0.0, f_max=None):
    """Triangular mel filters over the DC-less bins 1..n_fft/2.

    Edge frequencies are spaced evenly in mel and snapped to the nearest FFT
    bin, so every triangle reaches exactly 1.0 at its center bin.
    """
    if f_max is None:
        f_max = sample_rate / 2
    if n_filters < 1:
        raise InvalidRange(f"n_filters must be >= 1, got {n_filters}")
    if not 0 <= f_min < f_max <= sample_rate / 2:
        raise InvalidRange(
            f"need 0 <= f_min ({f_min}) < f_max ({f_max}) <= {sample_rate / 2}")
    n_bins = n_fft // 2
    bin_hz = sample_rate / n_fft
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_filters + 2))
    edges = np.clip(np.round(edges_hz / bin_hz).astype(int), 1, n_bins)
    bins = np.arange(1, n_bins + 1)

    weights = np.zeros((n_filters, n_bins))
    for i in range(n_filters):
        left, center, right = edges[i], edges[i + 1], edges[i + 2]
        if center > left:
            rise = (bins > left) & (bins < center)
            weights[i, rise] = (bins[rise] - left) / (center - left)
        if right > center:
            fall = (bins > center) & (bins < right)
            weights[i, fall] = (right - bins[fall]) / (right - center)
        weights[i, center - 1] = 1.0
    return MelFilterbank(weights, float(f_min), float(f_max))


def dct_matrix(n):
    """Orthonormal DCT-II basis; row k is the k-th cosine."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    d = np.sqrt(2.0 / n) * np.cos(np.pi * k * (2 * i + 1) / (2 * n))
    d[0] /= np.sqrt(2.0)
    return d


def log_mel_energies(power, fb):
    return np.log(power @ fb.weights.T + LOG_FLOOR)


def mfcc(audio, cfg=MFCC_STFT, fb=None, n_coeffs=13):
    """Cepstral coefficients 0..n_coeffs-1 of the log mel energies."""
    sr = audio.sample_rate if isinstance(audio, AudioBuffer) else 16000
    if fb is None:
        fb = make_mel_filterbank(26, cfg.n_fft, sr)
    if not 1 <= n_coeffs <= fb.n_filters:
        raise InvalidRange(f"n_coeffs={n_coeffs} must be in [1, {fb.n_filters}]")
    spec = spectrogram(audio, cfg)
    if fb.weights.shape[1] != spec.n_bins:
        raise InvalidRange(
            f"filterbank has {fb.weights.shape[1]} bins, spectrogram has {spec.n_bins}")
    logmel = log_mel_energies(spec.data, fb)
    return logmel @ dct_matrix(fb.n_filters)[:n_coeffs].T
