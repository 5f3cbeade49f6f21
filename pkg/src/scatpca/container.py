"""Binary container used to cache filter banks, scattering features and models.

Byte layout (all integers little-endian)::

    offset  size  field
    0       4     magic, the ASCII bytes ``SCPA``
    4       2     format version, uint16 (currently 1)
    6       2     payload kind, uint16 (1 filter bank, 2 features, 3 models)
    8       8     header length H in bytes, uint64
    16      H     header, UTF-8 JSON object with sorted keys
    16 + H  ...   body: the arrays listed in ``header["arrays"]``, in order

Every entry of ``header["arrays"]`` is ``{"name", "dtype", "shape"}`` where
``dtype`` is a little-endian numpy type string (``"<c8"``, ``"<f4"``, ...).
Arrays are stored row-major with no padding between them, so the body size is
the sum of ``prod(shape) * itemsize``.
"""

import json
import os
import struct
import tempfile

import numpy as np

from .exceptions import FormatError

MAGIC = b"SCPA"
VERSION = 1
KIND_FILTERBANK = 1
KIND_FEATURES = 2
KIND_MODELS = 3

_PREAMBLE = struct.Struct("<4sHHQ")


def write_container(path, kind, header, arrays):
    """Write ``arrays`` (an ordered mapping name -> ndarray) under ``header``.

    The file is written to a temporary sibling and renamed into place, so a
    reader never observes a partially written container.
    """
    header = dict(header)
    table = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        arr = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
        table.append({"name": name, "dtype": arr.dtype.str,
                      "shape": list(arr.shape)})
        blobs.append(arr.tobytes(order="C"))
    header["arrays"] = table
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()

    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scpa-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(_PREAMBLE.pack(MAGIC, VERSION, kind, len(raw)))
            f.write(raw)
            for blob in blobs:
                f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_container(path, expected_kind=None):
    """Read a container written by :func:`write_container`.

    Returns
    -------
    kind : int
    header : dict
        The JSON header, including the ``arrays`` table.
    arrays : dict
        Name -> ndarray in native byte order.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _PREAMBLE.size:
        raise FormatError("file shorter than container preamble", path, 0)
    magic, version, kind, hlen = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", path, 0)
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}", path, 4)
    if expected_kind is not None and kind != expected_kind:
        raise FormatError(
            f"container holds kind {kind}, expected {expected_kind}", path, 6)
    start = _PREAMBLE.size
    if start + hlen > len(data):
        raise FormatError("truncated header", path, start)
    try:
        header = json.loads(data[start:start + hlen].decode())
    except ValueError as exc:
        raise FormatError(f"unreadable header: {exc}", path, start) from None

    offset = start + hlen
    arrays = {}
    for entry in header.get("arrays", []):
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if offset + nbytes > len(data):
            raise FormatError(f"truncated array {entry['name']!r}", path, offset)
        arr = np.frombuffer(data, dtype=dtype, count=nbytes // dtype.itemsize,
                            offset=offset).reshape(shape)
        arrays[entry["name"]] = arr.astype(dtype.newbyteorder("="))
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes", path, offset)
    return kind, header, arrays
