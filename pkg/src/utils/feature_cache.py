"""
GFVQ feature cache files, one per image.

Header (little-endian): magic ``GFVQ``, version u32, kind u8 (0 region,
1 grid), N u32, D u32, image H u32, image W u32. Geometry follows: for regions
a u8 mask per row then N x 4 float32 boxes; for grids GH, GW and stride as u32.
The payload is N x D float32, row-major.
"""
import struct
from pathlib import Path

import numpy as np

from src.core.errors import FormatError, ShapeError, UnsupportedVersionError
from src.models.feature_set import FeatureSet
from src.utils.io import write_bytes

MAGIC = b"GFVQ"
VERSION = 1
KIND_CODES = {"region": 0, "grid": 1}
HEADER = struct.Struct("<4sIBIIII")


def encoded_size(kind: str, n: int, d: int) -> int:
    geometry = n + 16 * n if kind == "region" else 12
    return HEADER.size + geometry + 4 * n * d


def encode_features(features: FeatureSet) -> bytes:
    height, width = features.image_size
    chunks = [HEADER.pack(MAGIC, VERSION, KIND_CODES[features.kind], features.num_features, features.dim, height, width)]
    if features.kind == "region":
        chunks.append(features.mask.astype(np.uint8).tobytes())
        chunks.append(np.ascontiguousarray(features.boxes, dtype="<f4").tobytes())
    else:
        chunks.append(struct.pack("<III", *features.grid_shape))
    chunks.append(np.ascontiguousarray(features.vectors, dtype="<f4").tobytes())
    return b"".join(chunks)


def decode_features(data: bytes, source: str = "<bytes>") -> FeatureSet:
    """
    Parse a GFVQ blob into a FeatureSet.

    Raises:
        FormatError: On bad magic, unknown kind, a size that does not match the
            header or grid geometry that does not match the row count.
        UnsupportedVersionError: On a version other than 1.
    """
    if len(data) < HEADER.size:
        raise FormatError(f"{source}: truncated header")
    magic, version, kind_code, n, d, height, width = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{source}: not a GFVQ feature file")
    if version != VERSION:
        raise UnsupportedVersionError(f"{source}: GFVQ version {version} is not supported (expected {VERSION})")
    kinds = {code: kind for kind, code in KIND_CODES.items()}
    if kind_code not in kinds:
        raise FormatError(f"{source}: unknown feature kind code {kind_code}")
    kind = kinds[kind_code]
    expected = encoded_size(kind, n, d)
    if len(data) != expected:
        raise FormatError(f"{source}: expected {expected} bytes, found {len(data)}")
    offset = HEADER.size
    boxes, grid_shape = None, None
    if kind == "region":
        mask = np.frombuffer(data, dtype=np.uint8, count=n, offset=offset).astype(bool)
        offset += n
        boxes = np.frombuffer(data, dtype="<f4", count=4 * n, offset=offset).reshape(n, 4).astype(np.float32)
        offset += 16 * n
    else:
        grid_shape = struct.unpack_from("<III", data, offset)
        mask = np.ones(n, dtype=bool)
        offset += 12
    vectors = np.frombuffer(data, dtype="<f4", count=n * d, offset=offset).reshape(n, d).astype(np.float32)
    try:
        return FeatureSet(kind, vectors, mask, (height, width), boxes=boxes, grid_shape=grid_shape)
    except ShapeError as e:
        raise FormatError(f"{source}: inconsistent geometry: {e.detail}") from e


def save_cache(features: FeatureSet, path: str | Path) -> None:
    write_bytes(path, encode_features(features))


def load_cache(path: str | Path) -> FeatureSet:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"feature file {path} not found")
    return decode_features(path.read_bytes(), str(path))


def cache_path(root: str | Path, split: str, image_id: str) -> Path:
    return Path(root) / split / f"{image_id}.gfvq"
