"""Binary containers for frames (.plaf2d) and maps (.plaf3d).

Both files are little-endian with a fixed 64-byte header: 8-byte magic,
u32 version, a dims block, zero padding. Payloads are raw row-major
arrays, so the frame payload is exactly the mask-indexed 2D cost and the
map's semantic payload (refs + pool) is exactly the index-and-reference
3D cost; point positions and observation counts ride after the semantic
payload and are accounted separately.

.plaf2d layout                        .plaf3d layout
------------------------------        -------------------------------------
0   8  magic "PLAF2DF\\0"             0   8  magic "PLAF3DM\\0"
8   4  u32 version (1)                8   4  u32 version (1)
12  4  u32 height                     12  4  u32 feature dim
16  4  u32 width                      16  4  u32 ref bytes (2|4)
20  4  u32 mask count                 20  4  u32 reserved (0)
24  4  u32 feature dim                24  8  u64 point count
28 36  zero pad                       32  8  u64 pool size
64     uint16 index map (H*W)         40 24  zero pad
...    float32 table (K*C)            64     refs (N * ref bytes)
                                      ...    float32 pool (M*C)
                                      ...    float32 positions (N*3)
                                      ...    uint64 counts (M)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from plaf.core import (
    FeaturePool,
    FormatError,
    MaskIndexedFrame,
    SemanticPointCloud,
    ValidationError,
    validate,
)

MAGIC_2D = b"PLAF2DF\x00"
MAGIC_3D = b"PLAF3DM\x00"
VERSION = 1
HEADER_BYTES = 64


def _pad(header: bytes) -> bytes:
    return header + b"\x00" * (HEADER_BYTES - len(header))


def _take(buf: bytes, offset: int, n: int, path, what: str) -> tuple[bytes, int]:
    if offset + n > len(buf):
        raise FormatError(
            f"truncated payload: expected {n} bytes of {what}",
            path=path,
            kind="truncated",
            offset=len(buf),
        )
    return buf[offset : offset + n], offset + n


def _check_header(buf: bytes, magic: bytes, path) -> None:
    if len(buf) < HEADER_BYTES:
        raise FormatError("truncated header", path=path, kind="truncated", offset=len(buf))
    if buf[:8] != magic:
        raise FormatError(
            f"bad magic {buf[:8]!r}, expected {magic!r}", path=path, kind="bad-magic", offset=0
        )
    (version,) = struct.unpack_from("<I", buf, 8)
    if version != VERSION:
        raise FormatError(
            f"unsupported version {version}, expected {VERSION}",
            path=path,
            kind="bad-version",
            offset=8,
        )


def frame_file_bytes(height: int, width: int, mask_count: int, feature_dim: int) -> int:
    """Exact on-disk size of a frame before writing it."""
    return HEADER_BYTES + height * width * 2 + mask_count * feature_dim * 4


def write_frame(frame: MaskIndexedFrame, path) -> int:
    """Serialize a frame; returns bytes written (predictable via
    :func:`frame_file_bytes`)."""
    report = validate(frame)
    if report:
        raise ValidationError("refusing to write an invalid frame", report)
    header = _pad(
        MAGIC_2D
        + struct.pack(
            "<IIIII", VERSION, frame.height, frame.width, frame.mask_count, frame.dim
        )
    )
    payload = frame.index_map.astype("<u2").tobytes() + frame.feature_table.astype(
        "<f4"
    ).tobytes()
    data = header + payload
    Path(path).write_bytes(data)
    return len(data)


def read_frame(path) -> MaskIndexedFrame:
    buf = Path(path).read_bytes()
    _check_header(buf, MAGIC_2D, path)
    height, width, mask_count, dim = struct.unpack_from("<IIII", buf, 12)
    off = HEADER_BYTES
    raw_idx, off = _take(buf, off, height * width * 2, path, "index map")
    raw_tab, off = _take(buf, off, mask_count * dim * 4, path, "feature table")
    if off != len(buf):
        raise FormatError(
            f"{len(buf) - off} trailing bytes after payload", path=path, kind="trailing", offset=off
        )
    frame = MaskIndexedFrame(
        index_map=np.frombuffer(raw_idx, dtype="<u2").reshape(height, width),
        feature_table=np.frombuffer(raw_tab, dtype="<f4").reshape(mask_count, dim),
    )
    report = validate(frame)
    if report:
        raise ValidationError(f"{path}: frame violates invariants: {report}", report)
    return frame


def map_semantic_bytes(point_count: int, pool_size: int, feature_dim: int, ref_bytes: int) -> int:
    """Size of the semantic payload (refs + pool), excluding geometry."""
    return point_count * ref_bytes + pool_size * feature_dim * 4


def write_map(pool: FeaturePool, cloud: SemanticPointCloud, path) -> int:
    if cloud.pool_refs.size and int(cloud.pool_refs.max()) >= pool.size:
        raise ValidationError("cloud references entries beyond the pool")
    ref_bytes = cloud.ref_bytes
    header = _pad(
        MAGIC_3D
        + struct.pack("<IIIIQQ", VERSION, pool.dim, ref_bytes, 0, cloud.count, pool.size)
    )
    ref_dtype = "<u2" if ref_bytes == 2 else "<u4"
    data = (
        header
        + cloud.pool_refs.astype(ref_dtype).tobytes()
        + pool.descriptors.astype("<f4").tobytes()
        + cloud.positions.astype("<f4").tobytes()
        + pool.counts.astype("<u8").tobytes()
    )
    Path(path).write_bytes(data)
    return len(data)


def read_map(path) -> tuple[FeaturePool, SemanticPointCloud]:
    buf = Path(path).read_bytes()
    _check_header(buf, MAGIC_3D, path)
    dim, ref_bytes, _reserved, n_points, pool_size = struct.unpack_from("<IIIQQ", buf, 12)
    if ref_bytes not in (2, 4):
        raise FormatError(f"invalid reference width {ref_bytes}", path=path, kind="bad-descriptor", offset=16)
    off = HEADER_BYTES
    raw_refs, off = _take(buf, off, n_points * ref_bytes, path, "pool references")
    raw_pool, off = _take(buf, off, pool_size * dim * 4, path, "descriptor pool")
    raw_pos, off = _take(buf, off, n_points * 12, path, "positions")
    raw_counts, off = _take(buf, off, pool_size * 8, path, "observation counts")
    if off != len(buf):
        raise FormatError(
            f"{len(buf) - off} trailing bytes after payload", path=path, kind="trailing", offset=off
        )
    ref_dtype = "<u2" if ref_bytes == 2 else "<u4"
    try:
        pool = FeaturePool(
            descriptors=np.frombuffer(raw_pool, dtype="<f4").reshape(pool_size, dim),
            counts=np.frombuffer(raw_counts, dtype="<u8").astype(np.int64),
        )
        cloud = SemanticPointCloud(
            positions=np.frombuffer(raw_pos, dtype="<f4").reshape(n_points, 3),
            pool_refs=np.frombuffer(raw_refs, dtype=ref_dtype),
            pool_size=pool_size,
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: map violates invariants: {exc}", getattr(exc, "report", []))
    return pool, cloud
