"""Spectrogram VAE embeddings vs. MFCC features for spoken-command recognition."""

from .audio_io import AudioBuffer, load_wav, write_matrix
from .dsp import StftConfig, make_mel_filterbank, mfcc, power_spectrogram, stft
from .vae import VaeModel, latent_traversal, reconstruct, train_vae

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "StftConfig", "VaeModel", "latent_traversal", "load_wav",
    "make_mel_filterbank", "mfcc", "power_spectrogram", "reconstruct", "stft",
    "train_vae", "write_matrix",
]
