"""Shared domain types and their invariant checks.

Everything here is an immutable container around numpy arrays; no I/O and no
algorithms beyond validation. Arrays are made read-only at construction so
instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_MASK_ID = 65535  # index maps are uint16; 0 is the background sentinel

FEATURE_DTYPE = np.float32
INDEX_DTYPE = np.uint16


class PlafError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(PlafError):
    pass


class EmptyMaskError(PlafError):
    pass


class ValidationError(PlafError):
    """An artifact violated a type invariant (report carried in args)."""

    def __init__(self, message: str, report: list[str] | None = None):
        super().__init__(message)
        self.report = report or []


class FormatError(PlafError):
    """A file did not conform to its declared format.

    ``kind`` distinguishes failure modes ("bad-magic", "bad-version",
    "truncated", "trailing", "bad-descriptor"); ``offset`` points at the
    byte where parsing gave up, when meaningful.
    """

    def __init__(self, message: str, *, path=None, kind: str = "format", offset: int | None = None):
        loc = f"{path}: " if path is not None else ""
        at = f" (at byte {offset})" if offset is not None else ""
        super().__init__(f"{loc}{message}{at}")
        self.path = path
        self.kind = kind
        self.offset = offset


class InputMissingError(PlafError):
    pass


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_feature_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float32 vector, optionally checking its length."""
    vec = np.asarray(values, dtype=FEATURE_DTYPE).reshape(-1)
    if vec.size < 1:
        raise ValidationError("feature vector must have at least one entry")
    if dim is not None and vec.size != dim:
        raise DimensionMismatchError(f"feature vector has dim {vec.size}, expected {dim}")
    if not np.all(np.isfinite(vec)):
        raise ValidationError("feature vector contains non-finite entries")
    return vec


@dataclass(frozen=True)
class DenseFeatureMap:
    """A height x width grid of feature vectors (row-major, float32)."""

    data: np.ndarray  # (h, w, dim)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=FEATURE_DTYPE)
        if data.ndim != 3:
            raise DimensionMismatchError(f"feature map must be 3-D (h, w, dim), got shape {data.shape}")
        h, w, dim = data.shape
        if h < 1 or w < 1 or dim < 1:
            raise ValidationError(f"feature map dimensions must be positive, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("feature map contains non-finite entries")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class MaskSet:
    """K binary masks over a shared raster. Empty masks are rejected at ingest."""

    masks: np.ndarray  # (K, H, W) bool
    height: int
    width: int

    def __init__(self, masks, height: int | None = None, width: int | None = None):
        masks = np.asarray(masks)
        if masks.ndim == 3:
            masks = masks.astype(bool)
            if height is None:
                height = masks.shape[1]
            if width is None:
                width = masks.shape[2]
        elif masks.ndim == 2 and masks.shape[0] == 0 or masks.size == 0:
            if height is None or width is None:
                raise DimensionMismatchError("empty MaskSet needs explicit height and width")
            masks = np.zeros((0, height, width), dtype=bool)
        else:
            raise DimensionMismatchError(f"masks must be (K, H, W), got shape {masks.shape}")
        if masks.shape[1:] != (height, width):
            raise DimensionMismatchError(
                f"masks of shape {masks.shape[1:]} do not match raster ({height}, {width})"
            )
        if height < 1 or width < 1:
            raise ValidationError("mask raster dimensions must be positive")
        if masks.shape[0] > MAX_MASK_ID:
            raise ValidationError(f"at most {MAX_MASK_ID} masks per frame, got {masks.shape[0]}")
        counts = masks.reshape(masks.shape[0], masks.shape[1] * masks.shape[2]).sum(axis=1)
        empty = np.nonzero(counts == 0)[0]
        if empty.size:
            raise EmptyMaskError(f"masks {empty.tolist()} have no foreground pixels")
        object.__setattr__(self, "masks", _freeze(masks))
        object.__setattr__(self, "height", int(height))
        object.__setattr__(self, "width", int(width))

    @property
    def count(self) -> int:
        return self.masks.shape[0]

    def areas(self) -> np.ndarray:
        """Foreground pixel count per mask."""
        return (
            self.masks.reshape(self.count, self.height * self.width).sum(axis=1).astype(np.int64)
        )


@dataclass(frozen=True)
class MaskIndexedFrame:
    """The per-image semantic memory: an index map plus one feature row per mask.

    ``index_map`` holds uint16 mask IDs (0 = background, 1..K = masks);
    ``feature_table`` row k-1 stores the feature of mask ID k. Structural
    problems (dtype, shape, K > 65535) raise at construction; semantic
    invariants are reported by :func:`validate`, which never raises.
    """

    index_map: np.ndarray  # (H, W) uint16
    feature_table: np.ndarray  # (K, dim) float32

    def __post_init__(self):
        index_map = np.asarray(self.index_map)
        table = np.asarray(self.feature_table, dtype=FEATURE_DTYPE)
        if index_map.ndim != 2:
            raise DimensionMismatchError(f"index map must be 2-D, got shape {index_map.shape}")
        if index_map.dtype != INDEX_DTYPE:
            if not np.issubdtype(index_map.dtype, np.integer):
                raise ValidationError("index map must be an integer raster")
            if index_map.size and (index_map.min() < 0 or index_map.max() > MAX_MASK_ID):
                raise ValidationError("index map values do not fit in uint16")
            index_map = index_map.astype(INDEX_DTYPE)
        if table.ndim != 2:
            raise DimensionMismatchError(f"feature table must be 2-D (K, dim), got shape {table.shape}")
        if table.shape[0] > MAX_MASK_ID:
            raise ValidationError(f"at most {MAX_MASK_ID} masks per frame, got {table.shape[0]}")
        if table.shape[1] < 1:
            raise ValidationError("feature dimension must be at least 1")
        object.__setattr__(self, "index_map", _freeze(index_map))
        object.__setattr__(self, "feature_table", _freeze(table))

    @property
    def height(self) -> int:
        return self.index_map.shape[0]

    @property
    def width(self) -> int:
        return self.index_map.shape[1]

    @property
    def mask_count(self) -> int:
        return self.feature_table.shape[0]

    @property
    def dim(self) -> int:
        return self.feature_table.shape[1]


def validate(frame: MaskIndexedFrame) -> list[str]:
    """Check every MaskIndexedFrame invariant; returns violations, [] if clean.

    Pure and non-aborting: identical inputs give identical reports.
    """
    report = []
    k = frame.mask_count
    idx = frame.index_map
    if idx.size:
        max_idx = int(idx.max())
        if max_idx > k:
            report.append(f"index out of range: index map contains {max_idx} but table has {k} masks")
    present = np.unique(idx)
    present = present[present > 0]
    missing = sorted(set(range(1, k + 1)) - set(int(i) for i in present))
    if missing:
        report.append(f"unreferenced mask ID: {missing} never appear in the index map")
    if frame.feature_table.size and not np.all(np.isfinite(frame.feature_table)):
        report.append("feature table contains non-finite entries")
    return report


@dataclass(frozen=True)
class CameraFrame:
    """Depth + pinhole intrinsics + rigid world-from-camera pose for one view.

    Depth entries that are non-positive or non-finite are invalid pixels.
    """

    depth: np.ndarray  # (H, W) float32, meters
    fx: float
    fy: float
    cx: float
    cy: float
    pose_world_from_camera: np.ndarray  # (4, 4) float64

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float32)
        if depth.ndim != 2:
            raise DimensionMismatchError(f"depth must be 2-D, got shape {depth.shape}")
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        pose = np.asarray(self.pose_world_from_camera, dtype=np.float64)
        if pose.shape != (4, 4):
            raise DimensionMismatchError(f"pose must be 4x4, got shape {pose.shape}")
        rot = pose[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise ValidationError("pose rotation block is not orthonormal within 1e-6")
        if np.linalg.det(rot) < 0:
            raise ValidationError("pose rotation block has negative determinant")
        if not np.allclose(pose[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise ValidationError("pose bottom row must be [0, 0, 0, 1]")
        object.__setattr__(self, "depth", _freeze(depth))
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "pose_world_from_camera", _freeze(pose))

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


UNIT_NORM_TOL = 1e-5


@dataclass(frozen=True)
class FeaturePool:
    """M unique unit-norm descriptors with observation counts."""

    descriptors: np.ndarray  # (M, dim) float32, rows unit L2 within 1e-5
    counts: np.ndarray  # (M,) int64, all >= 1

    def __post_init__(self):
        desc = np.asarray(self.descriptors, dtype=FEATURE_DTYPE)
        counts = np.asarray(self.counts, dtype=np.int64)
        if desc.ndim != 2:
            raise DimensionMismatchError(f"descriptors must be 2-D (M, dim), got shape {desc.shape}")
        if desc.shape[1] < 1:
            raise ValidationError("feature dimension must be at least 1")
        if counts.shape != (desc.shape[0],):
            raise DimensionMismatchError("counts must have one entry per descriptor")
        if desc.size and not np.all(np.isfinite(desc)):
            raise ValidationError("pool contains non-finite descriptors")
        if desc.size:
            norms = np.linalg.norm(desc.astype(np.float64), axis=1)
            bad = np.nonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
            if bad.size:
                raise ValidationError(
                    f"descriptors {bad.tolist()} are not unit L2 within {UNIT_NORM_TOL}"
                )
        if counts.size and counts.min() < 1:
            raise ValidationError("observation counts must be positive")
        object.__setattr__(self, "descriptors", _freeze(desc))
        object.__setattr__(self, "counts", _freeze(counts))

    @property
    def size(self) -> int:
        return self.descriptors.shape[0]

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]


@dataclass(frozen=True)
class SemanticPointCloud:
    """N points, each holding only a small integer reference into a FeaturePool."""

    positions: np.ndarray  # (N, 3) float32, meters
    pool_refs: np.ndarray  # (N,) uint16 or uint32

    def __init__(self, positions, pool_refs, pool_size: int | None = None):
        positions = np.asarray(positions, dtype=np.float32)
        pool_refs = np.asarray(pool_refs)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise DimensionMismatchError(f"positions must be (N, 3), got shape {positions.shape}")
        if pool_refs.shape != (positions.shape[0],):
            raise DimensionMismatchError("pool_refs must have one entry per point")
        if pool_refs.dtype not in (np.uint16, np.uint32):
            if not np.issubdtype(pool_refs.dtype, np.integer):
                raise ValidationError("pool_refs must be integers")
            if pool_refs.size and pool_refs.min() < 0:
                raise ValidationError("pool_refs must be non-negative")
            max_ref = int(pool_refs.max()) if pool_refs.size else 0
            pool_refs = pool_refs.astype(np.uint16 if max_ref <= MAX_MASK_ID else np.uint32)
        if pool_size is not None and pool_refs.size and int(pool_refs.max()) >= pool_size:
            raise ValidationError(
                f"pool reference {int(pool_refs.max())} out of range for pool of size {pool_size}"
            )
        object.__setattr__(self, "positions", _freeze(positions))
        object.__setattr__(self, "pool_refs", _freeze(pool_refs))

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def ref_bytes(self) -> int:
        return self.pool_refs.dtype.itemsize
