"""
Tensor archive codec.

Layout (all integers little-endian):

    magic      4 bytes  b"FQTA"
    version    u32
    count      u32
    count x tensor:
        name_len  u16
        name      name_len bytes, UTF-8
        dtype     u8   (1 = float32)
        rank      u8
        dims      rank x u32
        payload   prod(dims) elements, row-major, little-endian

The archive holds network weights, quality heads and precomputed embeddings.
"""
import logging
import os
import struct
from collections import OrderedDict
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from config.settings import TENSOR_ARCHIVE_CONFIG

MAGIC = TENSOR_ARCHIVE_CONFIG['magic']
FORMAT_VERSION = TENSOR_ARCHIVE_CONFIG['version']

DTYPE_TAGS = {1: np.dtype('<f4')}
TAG_FOR_DTYPE = {np.dtype('float32'): 1}

logger = logging.getLogger(__name__)


class TensorArchiveError(Exception):
    """Custom exception for tensor archive encoding and decoding errors"""
    pass


def encode_archive(tensors: Mapping[str, np.ndarray]) -> bytes:
    """
    Encode named tensors in the given order.

    Raises:
        TensorArchiveError: On unsupported dtypes, non-finite data or oversized names
    """
    chunks = [MAGIC, struct.pack('<II', FORMAT_VERSION, len(tensors))]
    for name, tensor in tensors.items():
        array = np.asarray(tensor)
        if array.dtype not in TAG_FOR_DTYPE:
            if np.issubdtype(array.dtype, np.floating):
                array = array.astype(np.float32)
            else:
                raise TensorArchiveError(f"Tensor '{name}' has unsupported dtype {array.dtype}")
        if not np.all(np.isfinite(array)):
            raise TensorArchiveError(f"Tensor '{name}' contains non-finite values")
        encoded_name = name.encode('utf-8')
        if len(encoded_name) > 0xFFFF:
            raise TensorArchiveError(f"Tensor name too long: {name[:40]}...")
        if array.ndim > 0xFF:
            raise TensorArchiveError(f"Tensor '{name}' rank {array.ndim} exceeds 255")

        chunks.append(struct.pack('<H', len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack('<BB', TAG_FOR_DTYPE[array.dtype], array.ndim))
        chunks.append(struct.pack(f'<{array.ndim}I', *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype=DTYPE_TAGS[1]).tobytes())
    return b''.join(chunks)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise TensorArchiveError(f"Archive truncated while reading {what}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_archive(data: bytes,
                   expected: Optional[Mapping[str, Tuple[int, ...]]] = None) -> Dict[str, np.ndarray]:
    """
    Decode an archive.

    Args:
        data: Archive bytes
        expected: Optional name -> shape map; unknown names and shape
            mismatches are errors

    Returns:
        Ordered name -> float32 array map

    Raises:
        TensorArchiveError: Bad magic, version mismatch, truncation (naming the
            tensor), unknown dtype, unknown tensor name or shape mismatch
    """
    reader = _Reader(data)
    magic = reader.take(len(MAGIC), 'magic')
    if magic != MAGIC:
        raise TensorArchiveError(f"Not a tensor archive (magic {magic!r})")
    version, count = reader.unpack('<II', 'header')
    if version != FORMAT_VERSION:
        raise TensorArchiveError(
            f"Unsupported archive version {version} (expected {FORMAT_VERSION})"
        )

    tensors: Dict[str, np.ndarray] = OrderedDict()
    for index in range(count):
        (name_len,) = reader.unpack('<H', f"name length of tensor #{index}")
        name = reader.take(name_len, f"name of tensor #{index}").decode('utf-8')
        what = f"tensor '{name}'"
        dtype_tag, rank = reader.unpack('<BB', what)
        if dtype_tag not in DTYPE_TAGS:
            raise TensorArchiveError(f"Unknown dtype tag {dtype_tag} for {what}")
        dims = reader.unpack(f'<{rank}I', what) if rank else ()
        dtype = DTYPE_TAGS[dtype_tag]
        size = int(np.prod(dims, dtype=np.int64)) if dims else 1
        payload = reader.take(size * dtype.itemsize, what)
        array = np.frombuffer(payload, dtype=dtype).reshape(dims).astype(np.float32)

        if expected is not None:
            if name not in expected:
                raise TensorArchiveError(
                    f"Unknown tensor '{name}' in archive; expected names: {sorted(expected)}"
                )
            if tuple(expected[name]) != tuple(dims):
                raise TensorArchiveError(
                    f"Shape mismatch for tensor '{name}': archive {tuple(dims)}, "
                    f"expected {tuple(expected[name])}"
                )
        if name in tensors:
            raise TensorArchiveError(f"Duplicate tensor '{name}' in archive")
        tensors[name] = array

    if reader.offset != len(data):
        raise TensorArchiveError(f"{len(data) - reader.offset} trailing bytes after the last tensor")
    return tensors


def write_archive(path: str, tensors: Mapping[str, np.ndarray]) -> str:
    """
    Write tensors to `path`.

    Returns:
        The path written

    Raises:
        TensorArchiveError: If encoding or writing fails
    """
    data = encode_archive(tensors)
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as f:
            f.write(data)
    except OSError as e:
        raise TensorArchiveError(f"Failed to write archive {path}: {str(e)}")
    logger.info(f"Wrote {len(tensors)} tensors to {path}")
    return path


def read_archive(path: str,
                 expected: Optional[Mapping[str, Tuple[int, ...]]] = None) -> Dict[str, np.ndarray]:
    """Read and decode an archive file; see decode_archive."""
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise TensorArchiveError(f"Failed to read archive {path}: {str(e)}")
    try:
        return decode_archive(data, expected)
    except TensorArchiveError as e:
        raise TensorArchiveError(f"{path}: {str(e)}")


def tensor_names(path: str) -> Iterable[str]:
    return list(read_archive(path).keys())
