import gzip
import struct

import numpy as np
import pytest
from PIL import Image

from scatpca.container import read_container, write_container
from scatpca.datasets import (IMAGE_MAGIC, LabeledDataset, load_idx, load_mnist,
                              load_texture_dir, load_usps, read_idx, save_idx,
                              stratified_split, subsample_train, write_idx)
from scatpca.exceptions import DataError, FormatError


def digits_fixture(n=50, seed=0):
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n, 28, 28)).astype(np.float64) / 255.0
    labels = np.arange(n) % 10
    return LabeledDataset(images, labels, class_count=10)


def test_idx_roundtrip(tmp_path):
    ds = digits_fixture()
    save_idx(ds, tmp_path / "img", tmp_path / "lab")
    back = load_idx(tmp_path / "img", tmp_path / "lab")
    np.testing.assert_array_equal(back.images, ds.images)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.images.min() >= 0 and back.images.max() <= 1


def test_idx_header_layout(tmp_path):
    write_idx(tmp_path / "x", np.zeros((3, 2, 5), dtype=np.uint8))
    raw = (tmp_path / "x").read_bytes()
    assert struct.unpack(">IIII", raw[:16]) == (IMAGE_MAGIC, 3, 2, 5)
    assert len(raw) == 16 + 30


@pytest.mark.parametrize("dtype", [np.uint8, np.int8, np.int16, np.int32, np.float32,
                                   np.float64])
def test_idx_all_types(tmp_path, dtype):
    arr = (np.arange(24).reshape(2, 3, 4) - 5).astype(dtype)
    write_idx(tmp_path / "a.gz", arr)
    _, back = read_idx(tmp_path / "a.gz")
    np.testing.assert_array_equal(back, arr)


def test_gzip_mnist_layout(tmp_path):
    ds = digits_fixture(20)
    save_idx(ds, tmp_path / "train-images-idx3-ubyte.gz", tmp_path / "train-labels-idx1-ubyte.gz")
    save_idx(ds, tmp_path / "t10k-images-idx3-ubyte", tmp_path / "t10k-labels-idx1-ubyte")
    train, test = load_mnist(tmp_path)
    assert len(train) == len(test) == 20
    with gzip.open(tmp_path / "train-labels-idx1-ubyte.gz") as f:
        assert f.read(4) == b"\x00\x00\x08\x01"


def test_wrong_magic(tmp_path):
    ds = digits_fixture(5)
    save_idx(ds, tmp_path / "img", tmp_path / "lab")
    with pytest.raises(FormatError, match="magic"):
        load_idx(tmp_path / "lab", tmp_path / "img")
    (tmp_path / "bad").write_bytes(b"\x12\x34\x08\x01" + b"\x00" * 8)
    with pytest.raises(FormatError, match="byte offset 0"):
        read_idx(tmp_path / "bad")


def test_truncated(tmp_path):
    ds = digits_fixture(5)
    save_idx(ds, tmp_path / "img", tmp_path / "lab")
    raw = (tmp_path / "img").read_bytes()
    (tmp_path / "img").write_bytes(raw[:-10])
    with pytest.raises(FormatError) as info:
        load_idx(tmp_path / "img", tmp_path / "lab")
    assert info.value.offset == len(raw) - 10
    assert str(tmp_path / "img") in str(info.value)
    (tmp_path / "short").write_bytes(raw[:6])
    with pytest.raises(FormatError, match="dimension header"):
        read_idx(tmp_path / "short")


def test_trailing_bytes(tmp_path):
    write_idx(tmp_path / "x", np.zeros(4, dtype=np.uint8))
    (tmp_path / "x").write_bytes((tmp_path / "x").read_bytes() + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        read_idx(tmp_path / "x")


def test_count_mismatch(tmp_path):
    ds = digits_fixture(6)
    save_idx(ds, tmp_path / "img", tmp_path / "lab")
    write_idx(tmp_path / "lab", np.zeros(5, dtype=np.uint8))
    with pytest.raises(FormatError, match="6 images but 5 labels"):
        load_idx(tmp_path / "img", tmp_path / "lab")


def test_missing_mnist_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="train-images"):
        load_mnist(tmp_path)


def test_usps_text(tmp_path):
    rng = np.random.default_rng(1)
    pix = rng.uniform(-1, 1, size=(4, 256))
    labels = np.array([3, 0, 9, 3])
    lines = [" ".join([f"{l:.4f}"] + [f"{v:.4f}" for v in row]) for l, row in zip(labels, pix)]
    (tmp_path / "zip.train").write_text("\n".join(lines) + "\n")
    ds = load_usps(tmp_path / "zip.train")
    assert ds.images.shape == (4, 16, 16)
    np.testing.assert_array_equal(ds.labels, labels)
    np.testing.assert_allclose(ds.images, (np.round(pix, 4).reshape(4, 16, 16) + 1) / 2)
    (tmp_path / "bad").write_text("1 2 3\n")
    with pytest.raises(FormatError):
        load_usps(tmp_path / "bad")


def make_textures(root, sizes=((200, 200), (200, 240), (120, 150))):
    rng = np.random.default_rng(2)
    for cls in ("b_wool", "a_felt"):
        (root / cls).mkdir(parents=True)
        for i, (h, w) in enumerate(sizes):
            Image.fromarray(rng.integers(0, 256, size=(h, w), dtype=np.uint8)).save(
                root / cls / f"img{i}.png")


def test_texture_directory(tmp_path):
    make_textures(tmp_path)
    ds = load_texture_dir(tmp_path, 128)
    assert ds.class_names == ["a_felt", "b_wool"]
    np.testing.assert_array_equal(ds.labels, [0, 0, 0, 1, 1, 1])
    assert ds.images.shape == (6, 128, 128)
    np.testing.assert_allclose(np.linalg.norm(ds.images, axis=(1, 2)), 1.0)
    # centre crop of a 200 x 200 image starts at (36, 36)
    src = np.asarray(Image.open(tmp_path / "a_felt" / "img0.png"), dtype=float) / 255
    raw = load_texture_dir(tmp_path, 128, normalize=False)
    np.testing.assert_array_equal(raw.images[0], src[36:164, 36:164])
    src = np.asarray(Image.open(tmp_path / "a_felt" / "img1.png"), dtype=float) / 255
    np.testing.assert_array_equal(raw.images[1], src[36:164, 56:184])
    assert len(load_texture_dir(tmp_path, 64, per_class_counts=2)) == 4


def test_texture_directory_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_texture_dir(tmp_path / "nope", 32)
    with pytest.raises(DataError):
        load_texture_dir(tmp_path, 32)
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError, match="no images"):
        load_texture_dir(tmp_path, 32)


def test_subsample_train_balanced_and_seeded():
    labels = np.repeat(np.arange(10), 100)
    ds = LabeledDataset(np.zeros((1000, 2, 2)), labels)
    sub = subsample_train(ds, 300, seed=0)
    assert np.all(sub.class_counts() == 30)
    again = subsample_train(ds, 300, seed=0)
    np.testing.assert_array_equal(sub.labels, again.labels)
    other = subsample_train(LabeledDataset(np.arange(1000.0)[:, None, None], labels), 300, seed=1)
    first = subsample_train(LabeledDataset(np.arange(1000.0)[:, None, None], labels), 300, seed=0)
    assert not np.array_equal(other.images, first.images)
    assert np.all(np.diff(first.images[:, 0, 0]) > 0)
    assert subsample_train(ds, 305).class_counts().tolist() == [31] * 5 + [30] * 5


def test_subsample_train_identity_and_errors():
    ds = digits_fixture(30)
    full = subsample_train(ds, 30)
    np.testing.assert_array_equal(full.images, ds.images)
    with pytest.raises(DataError):
        subsample_train(ds, 5)
    with pytest.raises(DataError):
        subsample_train(ds, 31)


def test_subsample_uneven_classes():
    labels = np.array([0] * 3 + [1] * 50 + [2] * 50)
    ds = LabeledDataset(np.zeros((103, 1, 1)), labels)
    assert subsample_train(ds, 30).class_counts().tolist() == [3, 14, 13]


def test_stratified_split():
    labels = np.repeat(np.arange(4), [10, 20, 5, 1])
    fit, val = stratified_split(labels, 0.2, seed=0)
    assert len(np.intersect1d(fit, val)) == 0
    assert len(fit) + len(val) == len(labels)
    assert np.bincount(labels[val], minlength=4).tolist() == [2, 4, 1, 0]
    a = stratified_split(labels, 0.2, seed=5)
    b = stratified_split(labels, 0.2, seed=5)
    np.testing.assert_array_equal(a[1], b[1])


def test_dataset_validation():
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((3, 2, 2)), [0, 1])
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((2, 2, 2)), [0, 3], class_count=2)


def test_container_errors(tmp_path):
    path = tmp_path / "c.scpa"
    write_container(path, 2, {"a": 1}, {"x": np.arange(6.0).reshape(2, 3)})
    kind, header, arrays = read_container(path, 2)
    assert kind == 2 and header["a"] == 1
    np.testing.assert_array_equal(arrays["x"], np.arange(6.0).reshape(2, 3))
    with pytest.raises(FormatError):
        read_container(path, 3)
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])
    with pytest.raises(FormatError, match="offset"):
        read_container(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError, match="magic"):
        read_container(path)
