"""Binary tensor container for parameter checkpoints.

Layout: magic b"FIOC", format version as u16 LE, then one record per tensor
in lexicographic name order: name length (u32 LE), UTF-8 name, rank (u32 LE),
dims (u32 LE each), and the float64 payload in C order, little-endian.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FIOC"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<H", VERSION)
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype="<f8", order="C")
        name_bytes = name.encode("utf-8")
        blob += struct.pack("<I", len(name_bytes))
        blob += name_bytes
        blob += struct.pack("<I", arr.ndim)
        for d in arr.shape:
            blob += struct.pack("<I", d)
        blob += arr.tobytes()
    Path(path).write_bytes(bytes(blob))


def load_tensors(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    out: dict[str, np.ndarray] = {}
    offset = 6
    total = len(data)
    while offset < total:
        (name_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", data, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}I", data, offset) if rank else ()
        offset += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        nbytes = 8 * count
        if offset + nbytes > total:
            raise CheckpointError(f"{path}: truncated payload for {name!r}")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(dims)
        out[name] = arr.astype(float).copy()
        offset += nbytes
    return out
