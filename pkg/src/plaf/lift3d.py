"""3D stage: back-project masked pixels, fuse mask descriptors across views
into a compact pool, and emit a point cloud of integer references.

Fusion is sequential greedy clustering: each mask descriptor is L2
normalized and compared (cosine) against the current pool; at or above the
similarity threshold it merges into the best entry via an observation-count
weighted running mean (renormalized), otherwise it opens a new entry.
Greedy clustering is order-dependent by construction — the contract is that
a fixed frame order gives a bit-deterministic result, not that reorderings
agree. Points are deduplicated on a voxel grid, keeping the latest
observation per voxel.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from plaf import kernels
from plaf.core import (
    CameraFrame,
    DimensionMismatchError,
    FeaturePool,
    MaskIndexedFrame,
    SemanticPointCloud,
    ValidationError,
)
from plaf.storage import costs


@dataclass(frozen=True)
class FusionConfig:
    similarity_threshold: float = 0.90  # cosine needed to merge into an entry
    voxel_size: float = 0.02  # meters; dedup grid pitch
    pixel_stride: int = 4  # back-project every s-th pixel in both axes

    def __post_init__(self):
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValidationError(f"similarity threshold must be in [0, 1], got {self.similarity_threshold}")
        if not self.voxel_size > 0:
            raise ValidationError(f"voxel size must be positive, got {self.voxel_size}")
        if self.pixel_stride < 1:
            raise ValidationError(f"pixel stride must be >= 1, got {self.pixel_stride}")


@dataclass
class FrameReport:
    new_entries: int = 0
    merged_entries: int = 0
    points_added: int = 0
    pixels_skipped: int = 0


@dataclass
class BuildReport:
    frames: list[FrameReport] = field(default_factory=list)
    point_count: int = 0
    pool_size: int = 0
    feature_dim: int = 0
    ref_bytes: int = 2
    dense_3d_bytes: int = 0
    index_ref_3d_bytes: int = 0
    ratio_3d: float = 0.0

    def to_dict(self) -> dict:
        return {
            "frames": [vars(r) for r in self.frames],
            "point_count": self.point_count,
            "pool_size": self.pool_size,
            "feature_dim": self.feature_dim,
            "ref_bytes": self.ref_bytes,
            "dense_3d_bytes": self.dense_3d_bytes,
            "index_ref_3d_bytes": self.index_ref_3d_bytes,
            "ratio_3d": self.ratio_3d,
        }


def back_project(cam: CameraFrame, index_map: np.ndarray, stride: int = 1):
    """World-frame points for stride-sampled pixels with valid depth and a
    foreground index. Returns (points float64 (n, 3), mask IDs (n,), skipped)."""
    index_map = np.asarray(index_map, dtype=np.uint16)
    if index_map.shape != cam.depth.shape:
        raise DimensionMismatchError(
            f"index map {index_map.shape} does not match depth {cam.depth.shape}"
        )
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    return kernels.back_project(
        cam.depth, index_map, cam.fx, cam.fy, cam.cx, cam.cy,
        cam.pose_world_from_camera, stride,
    )


def project(cam: CameraFrame, points_world: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of back_project for the same camera: continuous pixel
    coordinates (u, v) and camera-frame depth z for world points."""
    pts = np.asarray(points_world, dtype=np.float64).reshape(-1, 3)
    pose = cam.pose_world_from_camera
    rel = pts - pose[:3, 3]
    cam_pts = rel @ pose[:3, :3]  # R^T p, row-vector form
    z = cam_pts[:, 2]
    u = cam.fx * cam_pts[:, 0] / z + cam.cx - 0.5
    v = cam.fy * cam_pts[:, 1] / z + cam.cy - 0.5
    return u, v, z


def _normalize(vec: np.ndarray) -> np.ndarray:
    """Unit-normalize in float64, skipping the division when the squared
    norm is already 1 within 1e-12 (keeps exact fixed points exact)."""
    n2 = float(np.dot(vec, vec))
    if n2 <= 0.0 or not math.isfinite(n2):
        raise ValidationError("cannot normalize a zero or non-finite descriptor")
    if abs(n2 - 1.0) <= 1e-12:
        return vec
    return vec / math.sqrt(n2)


class MapBuilder:
    """Mutable fusion state: the descriptor pool plus the voxel-deduped cloud.

    Not thread-safe; updates must arrive in frame order (determinism is
    promised only for a fixed order).
    """

    def __init__(self, dim: int, config: FusionConfig):
        self.dim = int(dim)
        self.config = config
        self._pool = np.empty((16, dim), dtype=np.float64)
        self._counts: list[int] = []
        self._positions: list[np.ndarray] = []
        self._refs: list[int] = []
        self._voxels: dict[tuple[int, int, int], int] = {}

    @property
    def pool_size(self) -> int:
        return len(self._counts)

    @property
    def point_count(self) -> int:
        return len(self._positions)

    def _grow(self) -> None:
        bigger = np.empty((self._pool.shape[0] * 2, self.dim), dtype=np.float64)
        bigger[: self._pool.shape[0]] = self._pool
        self._pool = bigger

    def absorb_descriptor(self, descriptor: np.ndarray) -> tuple[int, bool]:
        """Merge-or-append one raw (unnormalized) descriptor; returns
        (pool index, merged?)."""
        desc = _normalize(np.asarray(descriptor, dtype=np.float64).reshape(-1))
        m = self.pool_size
        if m:
            scores = self._pool[:m] @ desc
            best = int(np.argmax(scores))
            if scores[best] >= self.config.similarity_threshold:
                count = self._counts[best]
                old = self._pool[best]
                merged = old + (desc - old) / (count + 1)
                self._pool[best] = _normalize(merged)
                self._counts[best] = count + 1
                return best, True
        if m == self._pool.shape[0]:
            self._grow()
        self._pool[m] = desc
        self._counts.append(1)
        return m, False

    def add_points(self, positions: np.ndarray, refs: np.ndarray) -> int:
        """Voxel-dedup and store points; a voxel collision keeps the latest
        observation (position and reference). Returns newly occupied voxels."""
        v = self.config.voxel_size
        keys = np.floor(positions / v).astype(np.int64)
        added = 0
        voxels = self._voxels
        pos_list = self._positions
        ref_list = self._refs
        for i in range(keys.shape[0]):
            key = (int(keys[i, 0]), int(keys[i, 1]), int(keys[i, 2]))
            slot = voxels.get(key)
            if slot is None:
                voxels[key] = len(pos_list)
                pos_list.append(positions[i])
                ref_list.append(int(refs[i]))
                added += 1
            else:
                pos_list[slot] = positions[i]
                ref_list[slot] = int(refs[i])
        return added

    def freeze(self) -> tuple[FeaturePool, SemanticPointCloud]:
        m = self.pool_size
        pool = FeaturePool(
            descriptors=self._pool[:m].astype(np.float32),
            counts=np.asarray(self._counts, dtype=np.int64),
        )
        ref_dtype = np.uint16 if m <= 65535 else np.uint32
        positions = (
            np.asarray(self._positions, dtype=np.float64)
            if self._positions
            else np.zeros((0, 3), dtype=np.float64)
        )
        cloud = SemanticPointCloud(
            positions=positions.astype(np.float32),
            pool_refs=np.asarray(self._refs, dtype=ref_dtype),
            pool_size=m if self._refs else None,
        )
        return pool, cloud


def fuse_frame(
    builder: MapBuilder,
    frame: MaskIndexedFrame,
    cam: CameraFrame,
    precomputed=None,
) -> FrameReport:
    """Fold one view into the builder: absorb each mask descriptor in frame
    order, then attach the resulting pool indices to that mask's
    back-projected points. ``precomputed`` may carry this frame's
    back-projection (points, ids, skipped) from a concurrent prepass."""
    if frame.dim != builder.dim:
        raise DimensionMismatchError(f"frame dim {frame.dim} does not match pool dim {builder.dim}")
    if (frame.height, frame.width) != (cam.height, cam.width):
        raise DimensionMismatchError(
            f"frame {frame.height}x{frame.width} does not match depth {cam.height}x{cam.width}"
        )
    report = FrameReport()
    refs_for_mask = np.zeros(frame.mask_count + 1, dtype=np.int64)
    for k in range(frame.mask_count):
        idx, merged = builder.absorb_descriptor(frame.feature_table[k])
        refs_for_mask[k + 1] = idx
        if merged:
            report.merged_entries += 1
        else:
            report.new_entries += 1

    if precomputed is None:
        precomputed = back_project(cam, frame.index_map, builder.config.pixel_stride)
    points, ids, skipped = precomputed
    report.pixels_skipped = skipped
    if points.shape[0]:
        report.points_added = builder.add_points(points, refs_for_mask[ids])
    return report


def _thread_count() -> int:
    env = os.environ.get("PLAF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def build_map(
    frames: list[tuple[MaskIndexedFrame, CameraFrame]],
    config: FusionConfig = FusionConfig(),
) -> tuple[FeaturePool, SemanticPointCloud, BuildReport]:
    """Fuse an ordered list of (frame, camera) views into a pool + cloud.

    Equals the sequential fuse_frame fold in the given order; back-projection
    is precomputed concurrently (capped by PLAF_THREADS) since it is pure,
    while pool and voxel updates stay serialized in frame order.
    """
    if not frames:
        raise ValidationError("build_map needs at least one frame")
    dim = frames[0][0].dim
    for f, _ in frames:
        if f.dim != dim:
            raise DimensionMismatchError("all frames must share one feature dimension")
    builder = MapBuilder(dim, config)

    workers = _thread_count()
    if workers > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            projected = list(
                executor.map(
                    lambda fc: back_project(fc[1], fc[0].index_map, config.pixel_stride), frames
                )
            )
    else:
        projected = [back_project(cam, f.index_map, config.pixel_stride) for f, cam in frames]

    report = BuildReport(feature_dim=dim)
    for (frame, cam), pre in zip(frames, projected):
        report.frames.append(fuse_frame(builder, frame, cam, precomputed=pre))

    feature_pool, cloud = builder.freeze()
    report.point_count = cloud.count
    report.pool_size = feature_pool.size
    report.ref_bytes = cloud.ref_bytes
    if cloud.count:
        model = costs.StorageModel(
            feature_dim=dim,
            float_bytes=4,
            ref_bytes=cloud.ref_bytes,
            point_count=cloud.count,
            pool_size=feature_pool.size,
        )
        report.dense_3d_bytes = costs.dense_3d_cost(model)
        report.index_ref_3d_bytes = costs.index_ref_3d_cost(model)
        report.ratio_3d = costs.ratio_3d(model)
    return feature_pool, cloud, report
