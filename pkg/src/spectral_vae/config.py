"""Experiment configuration: flat ``key = value`` INI sections.

Unknown sections or keys and unparsable values raise ConfigError naming
``section.key``. The environment variable SPECTRAL_VAE_SEED overrides
``run.seed``.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os
from dataclasses import dataclass, field

from .errors import ConfigError

SEED_ENV = "SPECTRAL_VAE_SEED"


@dataclass
class RunSection:
    seed: int = 0


@dataclass
class StftSection:
    win_length: int = 256
    hop_length: int = 50
    n_fft: int = 256
    window: str = "hann"


@dataclass
class PatchSection:
    patch_frames: int = 8
    stride_frames: int = 3
    max_train: int = 2000
    max_test: int = 500


@dataclass
class VaeSection:
    latent_dim: int = 13
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    channels: tuple = (32, 64)


@dataclass
class ClassifierSection:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-3
    standardize: bool = False


@dataclass
class DataSection:
    patches_dir: str = ""


@dataclass
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    stft: StftSection = field(default_factory=StftSection)
    patches: PatchSection = field(default_factory=PatchSection)
    vae: VaeSection = field(default_factory=VaeSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    data: DataSection = field(default_factory=DataSection)

    @property
    def seed(self):
        return self.run.seed

    def to_text(self):
        out = io.StringIO()
        for section in dataclasses.fields(self):
            out.write(f"[{section.name}]\n")
            values = getattr(self, section.name)
            for f in dataclasses.fields(values):
                out.write(f"{f.name} = {_format(getattr(values, f.name))}\n")
            out.write("\n")
        return out.getvalue()


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _parse(kind, text, name):
    text = text.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is tuple:
            return tuple(int(v) for v in text.split(","))
        return kind(text)
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for {name}") from None


def parse_config(text, env=None):
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message.splitlines()[0]}") from None
    cfg = ExperimentConfig()
    sections = {f.name: f for f in dataclasses.fields(cfg)}
    for name in parser.sections():
        if name not in sections:
            raise ConfigError(f"unknown config section [{name}]")
        target = getattr(cfg, name)
        kinds = {f.name: type(f.default) for f in dataclasses.fields(target)}
        for key, raw in parser.items(name):
            if key not in kinds:
                raise ConfigError(f"unknown config key {name}.{key}")
            setattr(target, key, _parse(kinds[key], raw, f"{name}.{key}"))
    if env.get(SEED_ENV):
        cfg.run.seed = _parse(int, env[SEED_ENV], SEED_ENV)
    validate(cfg)
    return cfg


def validate(cfg):
    positive = [("stft.win_length", cfg.stft.win_length), ("stft.hop_length", cfg.stft.hop_length),
                ("patches.patch_frames", cfg.patches.patch_frames),
                ("patches.stride_frames", cfg.patches.stride_frames),
                ("vae.latent_dim", cfg.vae.latent_dim), ("vae.batch_size", cfg.vae.batch_size),
                ("classifier.batch_size", cfg.classifier.batch_size)]
    for name, value in positive:
        if value <= 0:
            raise ConfigError(f"{name} must be positive, got {value}")
    for name, value in (("vae.epochs", cfg.vae.epochs), ("classifier.epochs", cfg.classifier.epochs),
                        ("vae.lr", cfg.vae.lr), ("classifier.lr", cfg.classifier.lr)):
        if value < 0:
            raise ConfigError(f"{name} must be nonnegative, got {value}")
    if len(cfg.vae.channels) != 2:
        raise ConfigError("vae.channels needs two comma-separated counts")


def load_config(path=None, env=None):
    if path is None:
        return parse_config("", env)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, env)
