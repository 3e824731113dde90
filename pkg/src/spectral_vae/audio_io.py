"""WAV ingestion and flat-file matrix export (PGM / CSV)."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import NotWav, TruncatedFile, UnsupportedFormat

SAMPLE_RATE = 16000
PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioBuffer:
    """Mono signal with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("AudioBuffer needs a nonempty 1-D sample array")
        if np.any(np.abs(samples) > 1.0):
            raise ValueError("AudioBuffer samples must lie in [-1, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def to_pcm16(self):
        """Inverse of the load normalization; exact for buffers read from PCM16."""
        return np.clip(np.round(self.samples * PCM16_SCALE), -32768, 32767).astype("<i2")


def _parse_chunks(data, path):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWav(f"{path}: missing RIFF/WAVE magic")
    pos = 12
    fmt = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise TruncatedFile(f"{path}: fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body)
        elif chunk_id == b"data":
            if fmt is None:
                raise NotWav(f"{path}: data chunk before fmt chunk")
            if len(body) < size:
                raise TruncatedFile(
                    f"{path}: data chunk declares {size} bytes, {len(body)} present")
            return fmt, body
        # unknown chunks (LIST, fact, ...) are skipped; RIFF pads to even sizes
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise NotWav(f"{path}: no fmt chunk")
    raise TruncatedFile(f"{path}: no data chunk")


def load_wav(path):
    """Read a canonical 16 kHz mono PCM16 little-endian WAV file.

    Samples are normalized by 1/32768. Anything else is rejected with
    UnsupportedFormat naming the offending header field; no resampling
    or channel mixing is attempted.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    (codec, channels, rate, _byte_rate, _align, bits), body = _parse_chunks(data, path)
    if codec != 1:
        raise UnsupportedFormat("codec", codec, 1)
    if channels != 1:
        raise UnsupportedFormat("channels", channels, 1)
    if bits != 16:
        raise UnsupportedFormat("bit depth", bits, 16)
    if rate != SAMPLE_RATE:
        raise UnsupportedFormat("sample rate", rate, SAMPLE_RATE)
    if len(body) % 2:
        raise TruncatedFile(f"{path}: odd number of bytes in 16-bit data chunk")
    if not body:
        raise TruncatedFile(f"{path}: empty data chunk")
    raw = np.frombuffer(body, dtype="<i2")
    return AudioBuffer(raw.astype(np.float64) / PCM16_SCALE, rate)


def wav_bytes(pcm, sample_rate=SAMPLE_RATE):
    """Serialize int16 samples as a minimal 44-byte-header WAV file."""
    pcm = np.asarray(pcm, dtype="<i2")
    payload = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16,
        b"data", len(payload),
    )
    return header + payload


def save_wav(path, audio):
    with open(path, "wb") as fh:
        fh.write(wav_bytes(audio.to_pcm16(), audio.sample_rate))


def _pgm_pixels(matrix):
    lo, hi = matrix.min(), matrix.max()
    if hi == lo:
        return np.zeros(matrix.shape, dtype=np.uint8)
    scaled = (matrix - lo) / (hi - lo) * 255.0
    return np.clip(np.round(scaled), 0, 255).astype(np.uint8)


def write_matrix(matrix, path, format="csv"):
    """Write a 2-D real matrix as CSV (repr precision) or 8-bit P5 PGM."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    try:
        if format == "csv":
            with open(path, "w", newline="\n") as fh:
                for row in m:
                    fh.write(",".join(repr(float(v)) for v in row))
                    fh.write("\n")
        elif format == "pgm":
            rows, cols = m.shape
            with open(path, "wb") as fh:
                fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
                fh.write(_pgm_pixels(m).tobytes())
        else:
            raise ValueError(f"unknown matrix format {format!r}")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write matrix: {exc.strerror}", os.fspath(path)) from exc


def read_csv_matrix(path):
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def read_pgm(path):
    """Parse a P5 file written by write_matrix; returns uint8 rows x cols."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, pixels = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError(f"{path}: not an 8-bit P5 file")
    cols, rows = (int(v) for v in dims.split())
    return np.frombuffer(pixels, dtype=np.uint8).reshape(rows, cols)
