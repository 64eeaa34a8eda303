"""Dataset file format, image-dir ingestion, synthetic generator."""

import os

import numpy as np
import pytest

from vtcc.data import (DatasetSource, MAGIC, class_specs, generate_synthetic_dataset,
                       load_dataset, load_image_dir, read_records, write_records)
from vtcc.errors import ContractError, DataFormatError
from vtcc.metrics import clustering_accuracy, kmeans


def test_records_round_trip_byte_identical(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(5, 3, 8, 8), dtype=np.uint8)
    labels = np.array([0, 1, 2, -1, 1])
    p1 = tmp_path / "a.bin"
    p2 = tmp_path / "b.bin"
    write_records(p1, images, labels)
    ds = read_records(p1)
    np.testing.assert_array_equal(ds.images, images)
    np.testing.assert_array_equal(ds.labels, labels)
    write_records(p2, ds.images, ds.labels)
    assert p1.read_bytes() == p2.read_bytes()


def test_records_magic_and_header(tmp_path):
    p = tmp_path / "x.bin"
    write_records(p, np.zeros((1, 1, 4, 4), dtype=np.uint8), [0])
    raw = p.read_bytes()
    assert raw[:8] == MAGIC
    assert raw[8:20] == (1).to_bytes(4, "little") + (1).to_bytes(4, "little") \
        + (4).to_bytes(4, "little")


def test_records_bad_magic(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(DataFormatError, match="magic"):
        read_records(p)


def test_records_empty_dataset_rejected(tmp_path):
    import struct

    p = tmp_path / "empty.bin"
    p.write_bytes(MAGIC + struct.pack("<III", 0, 3, 8))
    with pytest.raises(DataFormatError, match="empty"):
        read_records(p)


def test_records_truncated_names_record(tmp_path):
    p = tmp_path / "t.bin"
    write_records(p, np.zeros((3, 1, 4, 4), dtype=np.uint8), [0, 1, 2])
    raw = p.read_bytes()
    (tmp_path / "cut.bin").write_bytes(raw[:-5])
    with pytest.raises(DataFormatError, match="record 2"):
        read_records(tmp_path / "cut.bin")


def test_unlabeled_round_trip(tmp_path):
    p = tmp_path / "u.bin"
    write_records(p, np.zeros((2, 3, 4, 4), dtype=np.uint8), None)
    ds = read_records(p)
    assert not ds.has_labels
    assert (ds.labels == -1).all()
    with pytest.raises(ContractError):
        ds.num_classes()


def test_image_dir_ordering_and_labels(tmp_path):
    from PIL import Image

    root = tmp_path / "imgs"
    rng = np.random.default_rng(1)
    for cls in ("b_class", "a_class"):
        (root / cls).mkdir(parents=True)
        for i in range(3):
            arr = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
            Image.fromarray(arr).save(root / cls / f"img{i}.png")
    ds = load_image_dir(root)
    assert ds.n == 6
    # a_class sorts before b_class
    np.testing.assert_array_equal(ds.labels, [0, 0, 0, 1, 1, 1])
    assert ds.images.shape == (6, 3, 8, 8)


def test_image_dir_geometry_mismatch(tmp_path):
    from PIL import Image

    root = tmp_path / "imgs"
    (root / "a").mkdir(parents=True)
    Image.fromarray(np.zeros((8, 8, 3), dtype=np.uint8)).save(root / "a" / "x.png")
    Image.fromarray(np.zeros((16, 16, 3), dtype=np.uint8)).save(root / "a" / "y.png")
    with pytest.raises(DataFormatError, match="y.png"):
        load_image_dir(root)


def test_load_dataset_kinds(tmp_path):
    p = tmp_path / "k.bin"
    write_records(p, np.zeros((2, 3, 16, 16), dtype=np.uint8), [0, 1])
    assert load_dataset(p, "binary_records").n == 2
    assert load_dataset(p, "synthetic").n == 2
    with pytest.raises(ContractError):
        load_dataset(p, "parquet")


# -- synthetic generator -------------------------------------------------------


def test_synthetic_contract(tmp_path):
    ds = generate_synthetic_dataset(4, 128, 32, seed=7, out_path=tmp_path / "s.bin")
    assert ds.n == 512
    assert ds.images.shape == (512, 3, 32, 32)
    np.testing.assert_array_equal(np.bincount(ds.labels), [128] * 4)
    assert os.path.getsize(tmp_path / "s.bin") > 512 * 3 * 32 * 32


def test_synthetic_same_seed_byte_identical(tmp_path):
    generate_synthetic_dataset(3, 8, 32, seed=5, out_path=tmp_path / "a.bin")
    generate_synthetic_dataset(3, 8, 32, seed=5, out_path=tmp_path / "b.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    generate_synthetic_dataset(3, 8, 32, seed=6, out_path=tmp_path / "c.bin")
    assert (tmp_path / "a.bin").read_bytes() != (tmp_path / "c.bin").read_bytes()


def test_synthetic_validation():
    with pytest.raises(ContractError):
        class_specs(1)
    with pytest.raises(ContractError):
        generate_synthetic_dataset(2, 0, 32, 0, "/tmp/none.bin")
    with pytest.raises(ContractError):
        generate_synthetic_dataset(2, 1, 8, 0, "/tmp/none.bin")


def _quad_power(gray, angle_deg, freq, side):
    """Oracle: quadrature correlation power against a stripe template."""
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64)
    th = np.deg2rad(angle_deg)
    carrier = (xs * np.cos(th) + ys * np.sin(th)) * (2 * np.pi * freq / side)
    s, c = np.sin(carrier), np.cos(carrier)
    s -= s.mean()
    c -= c.mean()
    s /= np.linalg.norm(s)
    c /= np.linalg.norm(c)
    g = gray - gray.mean()
    return float((g * s).sum() ** 2 + (g * c).sum() ** 2)


def test_synthetic_classes_well_defined_but_not_pixel_linear(tmp_path):
    """Template-correlation k-means recovers the classes exactly, while a
    ridge linear probe on raw pixels generalizes poorly (random phase)."""
    k, side = 4, 32
    ds = generate_synthetic_dataset(k, 64, side, seed=7, out_path=tmp_path / "s.bin")
    stripe_specs = [s for s in class_specs(k) if s["kind"] == "stripes"]
    feats = np.asarray([
        [_quad_power(ds.images[i].astype(np.float64).mean(axis=0) / 255.0,
                     s["angle_deg"], s["freq"], side) for s in stripe_specs]
        for i in range(ds.n)])
    labels = kmeans(feats, k, seed=0)
    assert clustering_accuracy(labels, ds.labels) == 1.0

    # linear probe: closed-form ridge regression, trained on half
    x = ds.images.reshape(ds.n, -1).astype(np.float64) / 255.0
    perm = np.random.default_rng(0).permutation(ds.n)
    tr, te = perm[: ds.n // 2], perm[ds.n // 2:]
    onehot = np.eye(k)[ds.labels]
    mu = x[tr].mean(axis=0)
    xtr = x[tr] - mu
    w = np.linalg.solve(xtr.T @ xtr + 10.0 * np.eye(x.shape[1]), xtr.T @ onehot[tr])
    pred = ((x[te] - mu) @ w).argmax(axis=1)
    assert (pred == ds.labels[te]).mean() < 0.95


def test_without_labels_strips_only_labels(tmp_path):
    ds = generate_synthetic_dataset(2, 4, 32, seed=3, out_path=tmp_path / "s.bin")
    stripped = ds.without_labels()
    np.testing.assert_array_equal(stripped.images, ds.images)
    assert (stripped.labels == -1).all()
    assert ds.has_labels and not stripped.has_labels
