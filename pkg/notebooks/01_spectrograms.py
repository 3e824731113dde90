"""
From samples to spectrogram patches
===================================

Walks one speech fixture through the analysis chain used by the VAE:
FFT, STFT, power spectrogram, log compression and 8-frame patches.

Run from the repository root::

    python3 notebooks/01_spectrograms.py
"""

from pathlib import Path

import numpy as np

from spectral_vae import dsp, load_wav
from spectral_vae.features import compression_constant, normalize_spectrogram, patch_array

SPEECH = Path(__file__).resolve().parents[1] / "tests" / "data" / "speech"
wav = sorted(SPEECH.glob("*.wav"))[0]

# %% the FFT agrees with the O(n^2) DFT
x = np.random.default_rng(0).standard_normal(256)
print("fft vs naive dft, max abs error:", np.max(np.abs(dsp.fft(x) - dsp.naive_dft(x))))

# %% one clip
clip = load_wav(wav)
print(f"{wav.name}: {len(clip)} samples, {clip.duration:.2f} s at {clip.sample_rate} Hz")

spec = dsp.spectrogram(clip, dsp.VAE_STFT)
print("spectrogram (frames, bins):", spec.data.shape)
print("frame step (ms):", 1000 * dsp.VAE_STFT.hop_length / clip.sample_rate)

# %% log compression maps most of the range into [0, 1]
c = compression_constant([spec.data])
norm = normalize_spectrogram(spec.data, c)
print(f"compression constant c = {c:.3f}")
print("fraction of bins clipped at 1:", np.mean(norm == 1.0))

# %% loudest frequency bin over time, coarse text view
loudest = norm.argmax(axis=1)
hz = (loudest + 1) * clip.sample_rate / dsp.VAE_STFT.n_fft
for t in range(0, len(hz), len(hz) // 12):
    bar = "#" * int(40 * norm[t].mean())
    print(f"{t * 3.125:7.1f} ms  peak {hz[t]:6.0f} Hz  {bar}")

# %% 8x128 patches at stride 3
patches = patch_array(norm, 8, 3)
print("patches:", patches.shape, "=", patches[0].size, "values each")
