"""
Training the patch VAE
======================

Trains the 13-dimensional VAE on patches from the bundled speech fixtures,
then checks reconstructions and walks along single latent components.

A short run by default; pass an epoch count for the full desk-scale run::

    python3 notebooks/02_train_vae.py        # 3 epochs, about a minute
    python3 notebooks/02_train_vae.py 20     # about six minutes
"""

import sys
from pathlib import Path

import numpy as np

from spectral_vae.features import build_patch_dataset
from spectral_vae.nn import make_rng
from spectral_vae.vae import VaeTrainConfig, latent_traversal, reconstruct, train_vae

SPEECH = Path(__file__).resolve().parents[1] / "tests" / "data" / "speech"
epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 3

files = sorted(SPEECH.glob("*.wav"))
data, _, _ = build_patch_dataset(files[:11], files[11:], max_train=2000, max_test=500,
                                 rng=make_rng(0, "notebook/patches"))
print("train", data.train.shape, "test", data.test.shape, f"c = {data.norm_c:.3f}")

# %% train
model, report = train_vae(data, VaeTrainConfig(epochs=epochs))
print(report.to_csv())

# %% reconstruction quality: Pearson r per held-out patch
out = reconstruct(model, data.test)
r = [np.corrcoef(a.ravel(), b.ravel())[0, 1] if b.std() > 0 else 0.0 for a, b in zip(data.test, out)]
print(f"held-out correlation: mean {np.mean(r):.3f}, median {np.median(r):.3f}")
print("compression: 1024 values ->", model.latent_dim)

# %% what each latent component does to the decoded prior mean
for k in range(model.latent_dim):
    values, imgs = latent_traversal(model, k)
    energy = imgs.mean(axis=(1, 2))
    centroid = (imgs.mean(axis=1) * np.arange(128)).sum(axis=1) / np.maximum(imgs.mean(axis=1).sum(axis=1), 1e-12)
    print(f"z[{k:2d}] in {values.round(2).tolist()}: mean level {energy.round(3).tolist()}, "
          f"spectral centroid bin {centroid.round(1).tolist()}")
