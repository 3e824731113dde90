"""Corpus helpers: Speech Commands manifests and a synthetic command corpus.

`speech_commands_manifest` indexes a local Speech Commands checkout (one
directory per word, optional ``testing_list.txt``). `synthesize_commands`
writes a small corpus of formant-synthesized "words" for exercising the
classification pipeline where the real dataset is not available; it is not a
substitute for real speech when reporting accuracy.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, save_wav
from .features.formats import Manifest, ManifestEntry
from .nn import make_rng

SR = 16000


def speech_commands_manifest(root, classes, per_class=None, test_fraction=0.2, seed=0):
    """Manifest over ``root/<word>/*.wav``.

    Files listed in ``testing_list.txt`` (when present) form the test split;
    otherwise a seeded `test_fraction` of each class is held out. With
    `per_class`, a seeded subset of that many clips per class is kept.
    """
    root = Path(root)
    listed = set()
    testing_list = root / "testing_list.txt"
    if testing_list.is_file():
        listed = set(testing_list.read_text().split())
    rng = make_rng(seed, "datasets/speech_commands")
    entries = []
    for word in classes:
        files = sorted(p.relative_to(root).as_posix() for p in (root / word).glob("*.wav"))
        if per_class is not None and len(files) > per_class:
            files = sorted(rng.choice(files, size=per_class, replace=False).tolist())
        if listed:
            splits = ["test" if f in listed else "train" for f in files]
        else:
            n_test = int(round(test_fraction * len(files)))
            test_idx = set(rng.choice(len(files), size=n_test, replace=False).tolist())
            splits = ["test" if i in test_idx else "train" for i in range(len(files))]
        entries += [ManifestEntry(f, word, s) for f, s in zip(files, splits)]
    return Manifest(entries, tuple(classes), root)


# Each word is a list of segments: (kind, relative duration, formants at the
# start, formants at the end). Voiced segments use (F1, F2, F3) in Hz;
# noise segments use (low, high) band edges; "gap" is silence.
WORDS = {
    "yes": [("voiced", 0.25, (300, 2200, 3000), (350, 2100, 2900)),
            ("voiced", 0.40, (550, 1800, 2600), (550, 1750, 2550)),
            ("noise", 0.35, (4000, 7500), (4200, 7800))],
    "no": [("nasal", 0.25, (250, 1000, 2300), (250, 1100, 2300)),
           ("voiced", 0.75, (550, 950, 2400), (400, 800, 2300))],
    "up": [("voiced", 0.60, (700, 1200, 2500), (650, 1150, 2450)),
           ("gap", 0.25, None, None),
           ("noise", 0.15, (500, 3500), (500, 3500))],
    "down": [("noise", 0.10, (2500, 5000), (2500, 5000)),
             ("voiced", 0.65, (750, 1300, 2500), (450, 900, 2300)),
             ("nasal", 0.25, (250, 1500, 2500), (250, 1500, 2500))],
    "left": [("voiced", 0.25, (350, 1100, 2700), (400, 1300, 2600)),
             ("voiced", 0.35, (580, 1750, 2550), (560, 1700, 2500)),
             ("noise", 0.25, (1500, 7000), (1500, 7000)),
             ("noise", 0.15, (3000, 6000), (3000, 6000))],
}


def _formant_gain(freqs, formants, bandwidths=(90.0, 120.0, 180.0)):
    g = np.zeros_like(freqs)
    for f, bw in zip(formants, bandwidths):
        g += 1.0 / (1.0 + ((freqs - f[None, :]) / bw) ** 2)
    return g


def _voiced(n, f0, start, end, rng, nasal=False):
    t = np.linspace(0.0, 1.0, n)
    formants = [a + (b - a) * t for a, b in zip(start, end)]
    f0_track = f0 * (1.0 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.5, 2.0) * t))
    phase = 2 * np.pi * np.cumsum(f0_track) / SR
    n_harm = int(7000 // f0)
    k = np.arange(1, n_harm + 1)[:, None]
    freqs = k * f0_track[None, :]
    gain = _formant_gain(freqs, formants) / k ** 0.5
    gain[freqs > 7600] = 0.0
    sig = np.sum(gain * np.sin(k * phase[None, :]), axis=0)
    envelope = np.sin(np.pi * np.clip(t * 1.2, 0, 1)) ** 0.5
    return sig * envelope * (0.3 if nasal else 1.0)


def _noise(n, band, rng):
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / SR)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    sig = np.fft.irfft(spectrum, n)
    return sig * np.hanning(n) * 2.0


def synthesize_word(word, rng):
    """One ~1 s clip of `word` with random speaker, timing, level and noise."""
    f0 = rng.uniform(90.0, 240.0)
    scale = rng.uniform(0.88, 1.15)  # vocal-tract length
    total = int(SR * rng.uniform(0.45, 0.75))
    parts = []
    for kind, frac, start, end in WORDS[word]:
        n = max(int(total * frac * rng.uniform(0.85, 1.15)), 32)
        if kind == "gap":
            parts.append(np.zeros(n))
        elif kind == "noise":
            band = tuple(np.array(start) * scale)
            parts.append(0.4 * _noise(n, band, rng))
        else:
            s = tuple(np.array(start) * scale * rng.uniform(0.95, 1.05))
            e = tuple(np.array(end) * scale * rng.uniform(0.95, 1.05))
            parts.append(_voiced(n, f0, s, e, rng, nasal=(kind == "nasal")))
    word_sig = np.concatenate(parts)
    word_sig /= np.max(np.abs(word_sig)) + 1e-12
    clip = np.zeros(SR)
    onset = rng.integers(0, SR - word_sig.size)
    clip[onset:onset + word_sig.size] = word_sig * rng.uniform(0.2, 0.8)
    snr_db = rng.uniform(10.0, 30.0)
    noise_rms = np.sqrt(np.mean(clip ** 2)) / 10 ** (snr_db / 20)
    clip += rng.standard_normal(SR) * noise_rms
    return np.clip(clip, -0.99, 0.99)


def synthesize_commands(out_dir, per_class=300, words=None, test_fraction=0.2, seed=0):
    """Write ``out_dir/<word>/<i>.wav`` clips plus ``manifest.tsv``; returns the Manifest."""
    out_dir = Path(out_dir)
    words = tuple(words or WORDS)
    rng = make_rng(seed, "datasets/synthetic")
    entries = []
    n_test = int(round(per_class * test_fraction))
    for word in words:
        (out_dir / word).mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            rel = f"{word}/{i:04d}.wav"
            save_wav(out_dir / rel, AudioBuffer(synthesize_word(word, rng)))
            entries.append(ManifestEntry(rel, word, "test" if i < n_test else "train"))
    manifest = Manifest(entries, words, out_dir)
    (out_dir / "manifest.tsv").write_text(manifest.to_text())
    return manifest
