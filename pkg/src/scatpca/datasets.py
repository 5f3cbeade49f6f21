"""Dataset loading: IDX digit files, USPS text files, texture directories.

Images are returned as float arrays in ``[0, 1]`` (digits) or L2-normalised
patches (textures).  All splitting is stratified and driven by an explicit
seed, so every subset is reproducible.
"""

import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, FormatError

__all__ = [
    "LabeledDataset",
    "read_idx",
    "write_idx",
    "load_idx",
    "save_idx",
    "load_mnist",
    "load_usps",
    "load_texture_dir",
    "subsample_train",
    "stratified_split",
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

# IDX type code -> big-endian numpy dtype
_IDX_TYPES = {
    0x08: ">u1",
    0x09: ">i1",
    0x0B: ">i2",
    0x0C: ">i4",
    0x0D: ">f4",
    0x0E: ">f8",
}
_IDX_CODES = {np.dtype(v).newbyteorder("="): k for k, v in _IDX_TYPES.items()}


@dataclass
class LabeledDataset:
    images: np.ndarray
    labels: np.ndarray
    name: str = ""
    class_count: int = None
    class_names: list = None

    def __post_init__(self):
        self.images = np.asarray(self.images)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.images) != len(self.labels):
            raise DataError(
                f"{len(self.images)} images but {len(self.labels)} labels")
        if self.class_count is None:
            self.class_count = int(self.labels.max()) + 1 if len(self.labels) else 0
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DataError(f"labels must lie in [0, {self.class_count})")

    def __len__(self):
        return len(self.labels)

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.images[indices], self.labels[indices],
                              name=self.name if name is None else name,
                              class_count=self.class_count, class_names=self.class_names)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.class_count)


def _open(path):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path):
    """Read any IDX file and return ``(magic, array)``.

    The magic is ``0x0000TTDD`` with ``TT`` the element type and ``DD`` the
    number of dimensions; the header holds one big-endian uint32 per
    dimension, followed by the data in row-major order.
    """
    with _open(path) as f:
        data = f.read()
    if len(data) < 4:
        raise FormatError("file too short for IDX magic", path, 0)
    magic, = struct.unpack_from(">I", data, 0)
    if magic >> 16 != 0:
        raise FormatError(f"bad IDX magic 0x{magic:08x}", path, 0)
    code, ndim = (magic >> 8) & 0xFF, magic & 0xFF
    if code not in _IDX_TYPES:
        raise FormatError(f"unknown IDX element type 0x{code:02x}", path, 2)
    if len(data) < 4 + 4 * ndim:
        raise FormatError("truncated IDX dimension header", path, len(data))
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    dtype = np.dtype(_IDX_TYPES[code])
    offset = 4 + 4 * ndim
    count = int(np.prod(dims, dtype=np.int64))
    expected = offset + count * dtype.itemsize
    if len(data) < expected:
        raise FormatError(
            f"truncated IDX body: expected {expected} bytes, found {len(data)}",
            path, len(data))
    if len(data) > expected:
        raise FormatError(f"{len(data) - expected} trailing bytes after IDX body",
                          path, expected)
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    return magic, arr.reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array):
    """Write ``array`` as an IDX file (gzip compressed if the name ends in .gz)."""
    array = np.asarray(array)
    code = _IDX_CODES.get(array.dtype)
    if code is None:
        raise DataError(f"dtype {array.dtype} has no IDX encoding")
    header = struct.pack(">I", (code << 8) | array.ndim)
    header += struct.pack(f">{array.ndim}I", *array.shape)
    body = array.astype(np.dtype(_IDX_TYPES[code])).tobytes()
    opener = gzip.open if os.fspath(path).endswith(".gz") else open
    with opener(path, "wb") as f:
        f.write(header + body)


def load_idx(images_path, labels_path, name="idx"):
    """Load an IDX image/label pair, scaling pixels to ``[0, 1]``.

    Raises
    ------
    FormatError
        Wrong magic numbers, truncated files, or mismatched counts.
    """
    magic, images = read_idx(images_path)
    if magic != IMAGE_MAGIC:
        raise FormatError(
            f"image file magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}", images_path, 0)
    magic, labels = read_idx(labels_path)
    if magic != LABEL_MAGIC:
        raise FormatError(
            f"label file magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}", labels_path, 0)
    if len(images) != len(labels):
        raise FormatError(
            f"{len(images)} images but {len(labels)} labels", labels_path, 4)
    return LabeledDataset(images.astype(np.float64) / 255.0, labels.astype(np.int64),
                          name=name)


def save_idx(dataset, images_path, labels_path):
    """Write a dataset with pixels in ``[0, 1]`` back to 8-bit IDX files."""
    pixels = np.clip(np.rint(np.asarray(dataset.images) * 255.0), 0, 255).astype(np.uint8)
    write_idx(images_path, pixels)
    write_idx(labels_path, np.asarray(dataset.labels).astype(np.uint8))


def _find(root, stem):
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"),
                 stem.replace("-idx", ".idx") + ".gz"):
        candidate = os.path.join(root, name)
        if os.path.exists(candidate):
            return candidate
    raise FileNotFoundError(f"no {stem}[.gz] under {root}")


def load_mnist(root):
    """Load the MNIST train and test splits from the standard file names."""
    train = load_idx(_find(root, "train-images-idx3-ubyte"),
                     _find(root, "train-labels-idx1-ubyte"), name="mnist-train")
    test = load_idx(_find(root, "t10k-images-idx3-ubyte"),
                    _find(root, "t10k-labels-idx1-ubyte"), name="mnist-test")
    return train, test


def load_usps(path, name="usps"):
    """Load a USPS split in the whitespace text layout of ``zip.train``/``zip.test``.

    Every line holds the digit label followed by 256 grey levels in
    ``[-1, 1]`` for a 16 x 16 image; they are mapped to ``[0, 1]``.
    """
    with _open(path) as f:
        rows = np.loadtxt(f)
    rows = np.atleast_2d(rows)
    if rows.shape[1] != 257:
        raise FormatError(f"expected 257 columns per line, got {rows.shape[1]}", path)
    labels = rows[:, 0].astype(np.int64)
    images = (rows[:, 1:].reshape(-1, 16, 16) + 1.0) / 2.0
    return LabeledDataset(images, labels, name=name, class_count=10)


_IMAGE_EXT = (".png", ".pgm", ".ppm", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff")


def _center_patch(img, size):
    h, w = img.shape
    if h < size or w < size:
        from PIL import Image

        scale = size / min(h, w)
        resized = Image.fromarray(img.astype(np.float32)).resize(
            (max(size, round(w * scale)), max(size, round(h * scale))), Image.BILINEAR)
        img = np.asarray(resized, dtype=np.float64)
        h, w = img.shape
    top, left = (h - size) // 2, (w - size) // 2
    return img[top:top + size, left:left + size]


def load_texture_dir(root, patch_size, per_class_counts=None, normalize=True):
    """Load textures stored as ``root/<class_name>/<image>``.

    Classes are the subdirectories in lexicographic order; files within a
    class are also taken in lexicographic order.  Each image is converted to
    grey levels in ``[0, 1]``, centre cropped to ``patch_size`` (upsampled
    first when smaller), and divided by its L2 norm when ``normalize``.

    Parameters
    ----------
    per_class_counts : int, optional
        Keep only the first ``per_class_counts`` files of every class.
    """
    from PIL import Image

    root = os.fspath(root)
    if not os.path.isdir(root):
        raise FileNotFoundError(root)
    classes = sorted(d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d)))
    if not classes:
        raise DataError(f"no class subdirectories under {root}")
    images, labels = [], []
    for label, cls in enumerate(classes):
        folder = os.path.join(root, cls)
        files = sorted(f for f in os.listdir(folder) if f.lower().endswith(_IMAGE_EXT))
        if per_class_counts is not None:
            files = files[:per_class_counts]
        if not files:
            raise DataError(f"class directory {folder} holds no images")
        for fname in files:
            with Image.open(os.path.join(folder, fname)) as im:
                img = np.asarray(im.convert("L"), dtype=np.float64)
            patch = _center_patch(img, patch_size) / 255.0
            if normalize:
                norm = np.linalg.norm(patch)
                if norm > 0:
                    patch = patch / norm
            images.append(patch)
            labels.append(label)
    return LabeledDataset(np.stack(images), np.array(labels),
                          name=os.path.basename(os.path.normpath(root)),
                          class_count=len(classes), class_names=classes)


def _balanced_quotas(counts, size):
    # spread ``size`` as evenly as possible, smaller class indices take the remainder
    quotas = np.zeros_like(counts)
    remaining = size
    active = [c for c in range(len(counts)) if counts[c] > 0]
    while remaining > 0 and active:
        share, extra = divmod(remaining, len(active))
        progressed = False
        for rank, c in enumerate(list(active)):
            want = share + (1 if rank < extra else 0)
            take = min(want, counts[c] - quotas[c])
            quotas[c] += take
            remaining -= take
            progressed |= take > 0
            if quotas[c] == counts[c]:
                active.remove(c)
        if not progressed:
            break
    return quotas


def subsample_train(dataset, size, seed=0):
    """Seeded class-balanced subset of ``size`` samples.

    Every class receives ``size // C`` samples, the first ``size % C``
    classes one more (quotas move to other classes if one runs short).  The
    selected indices keep their original order, so ``size == len(dataset)``
    returns the dataset unchanged.
    """
    size = int(size)
    if size < dataset.class_count:
        raise DataError(
            f"size {size} is smaller than the number of classes {dataset.class_count}")
    if size > len(dataset):
        raise DataError(f"size {size} exceeds dataset size {len(dataset)}")
    if size == len(dataset):
        return dataset.subset(np.arange(len(dataset)))
    rng = np.random.default_rng(seed)
    quotas = _balanced_quotas(dataset.class_counts(), size)
    chosen = []
    for c in range(dataset.class_count):
        idx = np.flatnonzero(dataset.labels == c)
        chosen.append(rng.permutation(idx)[:quotas[c]])
    return dataset.subset(np.sort(np.concatenate(chosen)))


def stratified_split(labels, fraction, seed=0, class_count=None):
    """Split indices into (fit, validation) with ``fraction`` held out per class.

    Each class with at least two samples contributes ``round(fraction * n)``
    samples (at least one) to the validation part and keeps at least one
    for fitting.
    """
    labels = np.asarray(labels)
    if class_count is None:
        class_count = int(labels.max()) + 1
    rng = np.random.default_rng(seed)
    fit, val = [], []
    for c in range(class_count):
        idx = rng.permutation(np.flatnonzero(labels == c))
        if len(idx) < 2:
            fit.append(idx)
            continue
        n_val = min(max(1, int(round(fraction * len(idx)))), len(idx) - 1)
        val.append(idx[:n_val])
        fit.append(idx[n_val:])
    fit = np.sort(np.concatenate(fit)) if fit else np.array([], dtype=np.int64)
    val = np.sort(np.concatenate(val)) if val else np.array([], dtype=np.int64)
    return fit, val
