"""Binary checkpoints with per-section checksums.

Layout: magic ``VTCCCKPT`` | u32 version=1 | u32 config length | UTF-8
config text | repeated sections until EOF.  Each section is
``[u16 name length][UTF-8 name][u8 rank][u32 dims ...]`` followed by a
little-endian float32 payload and the u32 CRC32 of the payload bytes.
Model parameters, norm running statistics, optimizer moments and the
scalar bookkeeping values (epoch, step, optimizer step count, seed
quarters) all travel as sections, so a load reproduces training state
bit-exactly.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import CheckpointIntegrityError, CheckpointVersionError, DataFormatError

MAGIC = b"VTCCCKPT"
VERSION = 1


def save_checkpoint(path, config_text: str, sections):
    """``sections`` is an ordered iterable of (name, float-array) pairs."""
    blob = config_text.encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name, arr in sections:
            arr = np.asarray(arr, dtype="<f4")     # keeps rank-0 scalars rank 0
            if arr.ndim and not arr.flags.c_contiguous:
                arr = np.ascontiguousarray(arr)
            name_b = name.encode("utf-8")
            if len(name_b) > 0xFFFF:
                raise DataFormatError(f"section name too long: {name!r}")
            if arr.ndim > 0xFF:
                raise DataFormatError(f"section rank too large: {arr.ndim}")
            f.write(struct.pack("<H", len(name_b)))
            f.write(name_b)
            f.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            payload = arr.tobytes()
            f.write(payload)
            f.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def _read_exact(f, count, what):
    buf = f.read(count)
    if len(buf) != count:
        raise CheckpointIntegrityError(f"truncated checkpoint while reading {what}")
    return buf


def load_checkpoint(path):
    """Returns (config_text, ordered dict name -> float32 array)."""
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
        if head != MAGIC:
            raise DataFormatError(f"{path}: bad checkpoint magic {head!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise CheckpointVersionError(
                f"{path}: checkpoint version {version} unsupported (expected {VERSION})")
        (blob_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        config_text = _read_exact(f, blob_len, "config text").decode("utf-8")
        sections = {}
        while True:
            head = f.read(2)
            if not head:
                break
            if len(head) != 2:
                raise CheckpointIntegrityError("truncated checkpoint in section header")
            (name_len,) = struct.unpack("<H", head)
            name = _read_exact(f, name_len, "section name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, f"rank of {name}"))
            dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, f"dims of {name}"))
            count = 1
            for d in dims:
                count *= d
            payload = _read_exact(f, 4 * count, f"payload of {name}")
            (crc,) = struct.unpack("<I", _read_exact(f, 4, f"checksum of {name}"))
            if crc != (zlib.crc32(payload) & 0xFFFFFFFF):
                raise CheckpointIntegrityError(f"checksum mismatch in section {name!r}")
            sections[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    return config_text, sections


def seed_quarters(seed):
    """Split a 64-bit seed into four u16 values (each exact in float32)."""
    s = int(seed) & 0xFFFFFFFFFFFFFFFF
    return [float((s >> (16 * i)) & 0xFFFF) for i in range(4)]


def seed_from_quarters(quarters):
    s = 0
    for i, q in enumerate(quarters):
        s |= (int(round(float(q))) & 0xFFFF) << (16 * i)
    return s
