"""Seeded random streams.

A run has one integer seed. Each consumer (weight init, shuffling,
reparameterization noise, dropout, ...) gets its own PCG64 stream whose
key is the seed plus the SHA-256 of the stage name, so adding a new stage
never perturbs the streams of existing ones.
"""

import hashlib

import numpy as np


def stage_key(stage):
    digest = hashlib.sha256(stage.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed, stage=None):
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    if stage is not None:
        entropy.append(stage_key(stage))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
