"""On-disk formats: the tab-separated manifest and the SFEA feature file.

SFEA layout, little-endian::

    b"SFEA"  u32 version  u8 kind  u32 records  u32 dim  u32 classes
    per record: u32 label, dim x f32 values
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FeatureFileError, ManifestError

SPEECH_COMMANDS = (
    "bed", "bird", "cat", "dog", "down", "eight", "five", "four", "go", "happy",
    "house", "left", "marvin", "nine", "no", "off", "on", "one", "right", "seven",
    "sheila", "six", "stop", "three", "tree", "two", "up", "wow", "yes", "zero",
)
SPLITS = ("train", "test")

SFEA_MAGIC = b"SFEA"
SFEA_VERSION = 1
KIND_CODES = {"vae": 1, "mfcc": 2}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
_HEADER = struct.Struct("<4sIBIII")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str


@dataclass
class Manifest:
    """Entries with paths relative to `root`; labels come from `classes`."""

    entries: list
    classes: tuple = SPEECH_COMMANDS
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        known = set(self.classes)
        for e in self.entries:
            if e.path in seen:
                raise ManifestError(f"duplicate manifest path {e.path!r}")
            seen.add(e.path)
            if e.label not in known:
                raise ManifestError(f"label {e.label!r} of {e.path!r} is not a declared class")
            if e.split not in SPLITS:
                raise ManifestError(f"split {e.split!r} of {e.path!r} is not one of {SPLITS}")

    def __len__(self):
        return len(self.entries)

    def resolve(self, entry):
        return self.root / entry.path

    def label_index(self, label):
        return self.classes.index(label)

    def select(self, split=None):
        entries = [e for e in self.entries if split is None or e.split == split]
        return Manifest(entries, self.classes, self.root)

    def to_text(self):
        lines = ["# classes: " + ",".join(self.classes)]
        lines += [f"{e.path}\t{e.label}\t{e.split}" for e in self.entries]
        return "\n".join(lines) + "\n"


def read_manifest(path, classes=None):
    """Parse a manifest. A leading ``# classes: a,b,c`` line declares the label
    set; otherwise `classes` (default: the 30 Speech Commands words) is used."""
    path = Path(path)
    entries = []
    declared = None
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("classes:"):
                declared = tuple(c.strip() for c in body[len("classes:"):].split(",") if c.strip())
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ManifestError(f"{path}:{lineno}: expected path<TAB>label<TAB>split")
        entries.append(ManifestEntry(*parts))
    return Manifest(entries, declared or tuple(classes or SPEECH_COMMANDS), path.parent)


def write_manifest(path, manifest):
    Path(path).write_text(manifest.to_text())


@dataclass
class FeatureFile:
    kind: str
    values: np.ndarray  # (records, dim) float32
    labels: np.ndarray  # (records,) uint32
    n_classes: int

    @property
    def dim(self):
        return self.values.shape[1]

    def __len__(self):
        return len(self.labels)


def encode_feature_file(ff):
    values = np.ascontiguousarray(ff.values, dtype="<f4")
    labels = np.asarray(ff.labels, dtype="<u4")
    n, dim = values.shape
    if labels.shape != (n,):
        raise FeatureFileError(f"{n} records but {labels.shape} labels")
    header = _HEADER.pack(SFEA_MAGIC, SFEA_VERSION, KIND_CODES[ff.kind], n, dim, ff.n_classes)
    records = np.empty(n, dtype=[("label", "<u4"), ("values", "<f4", (dim,))])
    records["label"] = labels
    records["values"] = values
    return header + records.tobytes()


def decode_feature_file(data):
    if len(data) < _HEADER.size or data[:4] != SFEA_MAGIC:
        raise FeatureFileError("not an SFEA feature file")
    _, version, kind, n, dim, n_classes = _HEADER.unpack_from(data)
    if version != SFEA_VERSION:
        raise FeatureFileError(f"unsupported SFEA version {version}")
    if kind not in KIND_NAMES:
        raise FeatureFileError(f"unknown feature kind code {kind}")
    rec = np.dtype([("label", "<u4"), ("values", "<f4", (dim,))])
    if len(data) != _HEADER.size + n * rec.itemsize:
        raise FeatureFileError(
            f"expected {_HEADER.size + n * rec.itemsize} bytes for {n} records, got {len(data)}")
    records = np.frombuffer(data, dtype=rec, count=n, offset=_HEADER.size)
    values = records["values"].astype(np.float32).reshape(n, dim)
    return FeatureFile(KIND_NAMES[kind], values, records["label"].astype(np.uint32), n_classes)


def write_feature_file(path, ff):
    data = encode_feature_file(ff)
    tmp = f"{os.fspath(path)}.partial"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
    return len(data)


def read_feature_file(path):
    with open(path, "rb") as fh:
        return decode_feature_file(fh.read())
