"""
MFCC vs VAE features for command words
======================================

Builds both feature kinds for a 5-word corpus and fits the same MLP on each.
Uses Speech Commands when SPECTRAL_VAE_GSC_ROOT points at a local copy and
the synthetic formant corpus otherwise (a stand-in, not real speech)::

    python3 notebooks/03_mfcc_vs_vae.py [work_dir]
"""

import os
import sys
import tempfile
from pathlib import Path

from spectral_vae.classifier import MlpTrainConfig, compare_report, train_mlp
from spectral_vae.datasets import speech_commands_manifest, synthesize_commands
from spectral_vae.features import build_feature_file, build_patch_dataset
from spectral_vae.nn import make_rng
from spectral_vae.vae import VaeTrainConfig, train_vae

WORDS = ("yes", "no", "up", "down", "left")
work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="mfcc_vs_vae_"))
root = os.environ.get("SPECTRAL_VAE_GSC_ROOT")

if root:
    manifest = speech_commands_manifest(root, WORDS, per_class=300, seed=0)
else:
    print("no Speech Commands copy; synthesizing a stand-in corpus in", work)
    manifest = synthesize_commands(work / "corpus", per_class=300, words=WORDS, seed=0)

# %% a 0.3 s window VAE (96 frames x 128 bins -> 40 dims), narrow channels for speed
train_paths = [manifest.resolve(e) for e in manifest.entries if e.split == "train"]
test_paths = [manifest.resolve(e) for e in manifest.entries if e.split == "test"]
windows, _, _ = build_patch_dataset(train_paths[::6], test_paths[:50], 96, 32, max_train=512,
                                    max_test=64, rng=make_rng(0, "notebook/windows"))
model, _ = train_vae(windows, VaeTrainConfig(epochs=8, latent_dim=40, channels=(8, 16)))

# %% featurize and classify
for kind in ("vae", "mfcc"):
    for split in ("train", "test"):
        info = build_feature_file(manifest, kind, work / f"{kind}_{split}.sfea", model=model, split=split)
        print(kind, split, info)

# %% raw features (the default), then z-scored with train statistics
# VAE means share a large offset, which raw-input training can struggle with
for standardize in (False, True):
    reports = {kind: train_mlp(work / f"{kind}_train.sfea", work / f"{kind}_test.sfea",
                               MlpTrainConfig(epochs=30, standardize=standardize))[1]
               for kind in ("vae", "mfcc")}
    print("standardized inputs" if standardize else "raw inputs")
    print(compare_report(reports["vae"], reports["mfcc"])[0])
