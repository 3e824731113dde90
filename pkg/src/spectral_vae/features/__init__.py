"""Dataset construction: patches, clip featurization, manifests and feature files."""

from .featurize import (
    CLIP_SAMPLES,
    VAE_CLIP_SAMPLES,
    FeatureVector,
    build_feature_file,
    featurize_mfcc,
    featurize_vae,
    mfcc_feature_dim,
    vae_feature_dim,
)
from .formats import (
    SPEECH_COMMANDS,
    FeatureFile,
    Manifest,
    ManifestEntry,
    read_feature_file,
    read_manifest,
    write_feature_file,
    write_manifest,
)
from .patches import (
    Patch,
    build_patch_dataset,
    compression_constant,
    extract_patches,
    normalize_spectrogram,
    patch_array,
)

__all__ = [
    "CLIP_SAMPLES", "FeatureFile", "FeatureVector", "Manifest", "ManifestEntry", "Patch",
    "SPEECH_COMMANDS", "VAE_CLIP_SAMPLES", "build_feature_file", "build_patch_dataset",
    "compression_constant", "extract_patches", "featurize_mfcc", "featurize_vae",
    "mfcc_feature_dim", "normalize_spectrogram", "patch_array", "read_feature_file",
    "read_manifest", "vae_feature_dim", "write_feature_file", "write_manifest",
]
