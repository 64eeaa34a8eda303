"""Dataset ingestion, the binary record format, and synthetic data.

Binary record files carry the magic ``VTCCDS01`` followed by little-endian
u32 count, u32 channels, u32 side, then ``count`` records of
``[u16 label][C*side*side bytes, row-major, channel-major]``.  Label
0xFFFF marks an unlabeled record.  Labels are only ever consumed by
evaluation and export, never by training.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import STREAM_DATAGEN
from .errors import ContractError, DataFormatError

MAGIC = b"VTCCDS01"
UNLABELED = 0xFFFF


@dataclass
class DatasetSource:
    images: np.ndarray          # uint8 [n, C, side, side]
    labels: np.ndarray          # int64 [n], -1 where unlabeled
    kind: str
    path: str = ""

    @property
    def n(self):
        return self.images.shape[0]

    @property
    def channels(self):
        return self.images.shape[1]

    @property
    def side(self):
        return self.images.shape[2]

    @property
    def has_labels(self):
        return bool((self.labels >= 0).all()) and self.n > 0

    def num_classes(self):
        if not self.has_labels:
            raise ContractError("dataset has unlabeled records")
        return int(self.labels.max()) + 1

    def without_labels(self):
        return DatasetSource(self.images, np.full(self.n, -1, dtype=np.int64),
                             self.kind, self.path)


def write_records(path, images, labels=None):
    images = np.asarray(images)
    if images.dtype != np.uint8 or images.ndim != 4:
        raise ContractError(f"records expect uint8 [n,C,side,side], got "
                            f"{images.dtype} {images.shape}")
    n, c, h, w = images.shape
    if h != w:
        raise ContractError(f"records are square images, got {h}x{w}")
    if labels is None:
        lab = np.full(n, UNLABELED, dtype=np.uint16)
    else:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (n,):
            raise ContractError(f"labels shape {labels.shape} != ({n},)")
        lab = np.where(labels < 0, UNLABELED, labels).astype(np.uint16)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", n, c, h))
        flat = images.reshape(n, -1)
        for i in range(n):
            f.write(struct.pack("<H", int(lab[i])))
            f.write(flat[i].tobytes())


def read_records(path) -> DatasetSource:
    path = str(path)
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
        if head != MAGIC:
            raise DataFormatError(f"{path}: bad magic {head!r}")
        meta = f.read(12)
        if len(meta) != 12:
            raise DataFormatError(f"{path}: truncated header")
        n, c, side = struct.unpack("<III", meta)
        if n == 0:
            raise DataFormatError(f"{path}: empty dataset (count=0)")
        rec_len = c * side * side
        images = np.empty((n, c, side, side), dtype=np.uint8)
        labels = np.empty(n, dtype=np.int64)
        for i in range(n):
            rec = f.read(2 + rec_len)
            if len(rec) != 2 + rec_len:
                raise DataFormatError(f"{path}: truncated record {i}")
            (raw_label,) = struct.unpack("<H", rec[:2])
            labels[i] = -1 if raw_label == UNLABELED else raw_label
            images[i] = np.frombuffer(rec[2:], dtype=np.uint8).reshape(c, side, side)
    return DatasetSource(images, labels, "binary_records", path)


def load_image_dir(path) -> DatasetSource:
    """One subdirectory per class of PNG images; lexicographic label order."""
    from PIL import Image

    root = Path(path)
    if not root.is_dir():
        raise DataFormatError(f"{path}: not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DataFormatError(f"{path}: no class subdirectories")
    images, labels = [], []
    geometry = None
    for label, cdir in enumerate(class_dirs):
        files = sorted(p for p in cdir.iterdir() if p.suffix.lower() == ".png")
        for p in files:
            try:
                with Image.open(p) as im:
                    arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
            except Exception as e:
                raise DataFormatError(f"{p}: unreadable image ({e})") from e
            if arr.shape[0] != arr.shape[1]:
                raise DataFormatError(f"{p}: image must be square, got {arr.shape[:2]}")
            chw = arr.transpose(2, 0, 1)
            if geometry is None:
                geometry = chw.shape
            elif chw.shape != geometry:
                raise DataFormatError(f"{p}: geometry {chw.shape} != {geometry}")
            images.append(chw)
            labels.append(label)
    if not images:
        raise DataFormatError(f"{path}: no PNG files found")
    return DatasetSource(np.stack(images), np.asarray(labels, dtype=np.int64),
                         "image_dir", str(path))


def load_dataset(path, kind) -> DatasetSource:
    if kind in ("binary_records", "synthetic"):
        return read_records(path)
    if kind == "image_dir":
        return load_image_dir(path)
    raise ContractError(f"unknown dataset kind {kind!r}")


# -- synthetic pattern classes --------------------------------------------------

STRIPE_AMPLITUDE = 0.25
BLOB_AMPLITUDE = 0.35
PIXEL_NOISE_STD = 0.05
BASE_FREQUENCY = 3.0        # stripe cycles per image side
BLOB_COUNT = 5


def class_specs(k):
    """K pattern classes: K-1 stripe orientations in [0, 90] deg plus one
    blob-layout class.  Orientations stay in the first quadrant so that a
    horizontal flip never maps one class onto another."""
    if k < 2:
        raise ContractError(f"need K >= 2 classes, got {k}")
    stripes = k - 1
    specs = []
    for i in range(stripes):
        angle = 0.0 if stripes == 1 else 90.0 * i / (stripes - 1)
        specs.append({"kind": "stripes", "angle_deg": angle, "freq": BASE_FREQUENCY})
    specs.append({"kind": "blobs", "count": BLOB_COUNT})
    return specs


def _render_stripes(side, angle_deg, freq, rng):
    theta = np.deg2rad(angle_deg)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    jx, jy = rng.uniform(-side / 8.0, side / 8.0, size=2)
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64)
    carrier = ((xs + jx) * np.cos(theta) + (ys + jy) * np.sin(theta)) * (
        2.0 * np.pi * freq / side)
    return 0.5 + STRIPE_AMPLITUDE * np.sin(carrier + phase)


def _render_blobs(side, count, rng):
    sigma = side / 10.0
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64)
    img = np.full((side, side), 0.5)
    centers = rng.uniform(0.15 * side, 0.85 * side, size=(count, 2))
    centers += rng.uniform(-side / 8.0, side / 8.0, size=(count, 2))
    for cy, cx in centers:
        img += BLOB_AMPLITUDE * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2)
                                       / (2.0 * sigma * sigma))
    return img - BLOB_AMPLITUDE * 0.35  # recenter roughly around 0.5


def render_sample(spec, side, rng):
    if spec["kind"] == "stripes":
        pattern = _render_stripes(side, spec["angle_deg"], spec["freq"], rng)
    else:
        pattern = _render_blobs(side, spec["count"], rng)
    img = np.repeat(pattern[None], 3, axis=0)
    img = img + rng.normal(0.0, PIXEL_NOISE_STD, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def generate_synthetic_dataset(k, per_class, side, seed, out_path) -> DatasetSource:
    """Procedural K-class dataset written in the binary record format."""
    if per_class < 1:
        raise ContractError(f"per_class must be >= 1, got {per_class}")
    if side < 16:
        raise ContractError(f"side must be >= 16, got {side}")
    specs = class_specs(k)
    n = k * per_class
    images = np.empty((n, 3, side, side), dtype=np.uint8)
    labels = np.empty(n, dtype=np.int64)
    pos = 0
    for cls, spec in enumerate(specs):
        for i in range(per_class):
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence((int(seed), STREAM_DATAGEN, cls, i))))
            img = render_sample(spec, side, rng)
            images[pos] = np.round(img * 255.0).astype(np.uint8)
            labels[pos] = cls
            pos += 1
    write_records(out_path, images, labels)
    return DatasetSource(images, labels, "synthetic", str(out_path))
