"""Binary checkpoint format for named f64 tensors.

Layout, little-endian throughout::

    b"SVAE"  u32 version  u32 tensor_count
    per tensor: u32 name_len, name (utf-8), u32 rank, rank x u32 dims,
                prod(dims) x f64 values (row-major)
"""

import struct

import numpy as np

from ..errors import CheckpointError

MAGIC = b"SVAE"
VERSION = 1


def encode_tensors(tensors):
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, value in tensors.items():
        arr = np.asarray(value, dtype="<f8", order="C")  # keeps rank 0
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def decode_tensors(data):
    if data[:4] != MAGIC:
        raise CheckpointError("not a checkpoint: bad magic")
    try:
        version, count = struct.unpack_from("<II", data, 4)
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        pos = 12
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", data, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            n = int(np.prod(dims, dtype=np.int64))
            if pos + 8 * n > len(data):
                raise CheckpointError(f"tensor {name!r} truncated")
            tensors[name] = np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(dims).astype(np.float64)
            pos += 8 * n
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from exc
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after last tensor")
    return tensors


def save_tensors(path, tensors):
    with open(path, "wb") as fh:
        fh.write(encode_tensors(tensors))


def load_tensors(path):
    with open(path, "rb") as fh:
        return decode_tensors(fh.read())
