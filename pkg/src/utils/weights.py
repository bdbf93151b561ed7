"""
GFWT weight files.

Layout (little-endian): magic ``GFWT``, version u32, tensor count u32, then for
every tensor its name length u16, UTF-8 name, rank u8, extents u32 each and the
raw float32 data in row-major order. Tensors are written in name order.
"""
import struct
import logging
from pathlib import Path

import numpy as np

from src.core.errors import FormatError, UnsupportedVersionError
from src.utils.io import write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"GFWT"
VERSION = 1


def encode_weights(weights: dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(weights))]
    for name in sorted(weights):
        array = np.ascontiguousarray(weights[name], dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise FormatError(f"{self.source}: truncated at byte {self.offset} (needed {size} more)")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_weights(data: bytes, source: str = "<bytes>") -> dict[str, np.ndarray]:
    """
    Parse a GFWT blob.

    Raises:
        FormatError: On bad magic, truncation or trailing bytes.
        UnsupportedVersionError: On a version other than 1.
    """
    reader = _Reader(data, source)
    if reader.take(4) != MAGIC:
        raise FormatError(f"{source}: not a GFWT weight file")
    version, count = reader.unpack("<II")
    if version != VERSION:
        raise UnsupportedVersionError(f"{source}: GFWT version {version} is not supported (expected {VERSION})")
    weights: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I")
        size = int(np.prod(shape, dtype=np.int64)) * 4
        weights[name] = np.frombuffer(reader.take(size), dtype="<f4").reshape(shape).astype(np.float32)
    if reader.offset != len(data):
        raise FormatError(f"{source}: {len(data) - reader.offset} trailing bytes after {count} tensors")
    return weights


def save_weights(weights: dict[str, np.ndarray], path: str | Path) -> None:
    write_bytes(path, encode_weights(weights))
    logger.info(f"Saved {len(weights)} tensors to {path}")


def load_weights(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"weight file {path} not found")
    return decode_weights(path.read_bytes(), str(path))
