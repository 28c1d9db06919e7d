"""2D stage: upsample dense features, pool them per mask, resolve pixel
ownership, and pack the result into a MaskIndexedFrame.

All operations are pure functions; hot loops live in :mod:`plaf.kernels`.
"""

from __future__ import annotations

import enum

import numpy as np

from plaf import kernels
from plaf.core import (
    DenseFeatureMap,
    DimensionMismatchError,
    EmptyMaskError,
    MaskIndexedFrame,
    MaskSet,
)


class AssignmentPolicy(enum.Enum):
    """Tie-break rule for pixels covered by more than one mask.

    SMALLEST_MASK: the covering mask with the fewest foreground pixels wins,
    so fine structure survives overlap with large regions; equal areas break
    toward the lowest mask ID. Deterministic by construction.
    """

    SMALLEST_MASK = "smallest-mask"


def upsample_bilinear(feat: DenseFeatureMap, target_h: int, target_w: int) -> DenseFeatureMap:
    """Bilinear resample to (target_h, target_w), align-corners-false.

    Sample centers at (i + 0.5) / size, clamped at the borders; exact on
    constant maps and an element-wise identity when sizes already match.
    """
    if target_h < 1 or target_w < 1:
        raise DimensionMismatchError(f"target size must be positive, got {target_h}x{target_w}")
    if target_h == feat.height and target_w == feat.width:
        return feat
    return DenseFeatureMap(kernels.upsample_bilinear(feat.data, target_h, target_w))


def aggregate_mask_features(feat: DenseFeatureMap, masks: MaskSet) -> np.ndarray:
    """Mean feature over each mask's foreground set, one float32 row per mask.

    Sums are accumulated in float64 so the result is independent of pixel
    order within 1e-6 even for very large masks.
    """
    if (feat.height, feat.width) != (masks.height, masks.width):
        raise DimensionMismatchError(
            f"feature map {feat.height}x{feat.width} does not match masks "
            f"{masks.height}x{masks.width}"
        )
    if masks.count == 0:
        return np.zeros((0, feat.dim), dtype=np.float32)
    if np.any(masks.areas() == 0):
        raise EmptyMaskError("cannot average over an empty mask")
    return kernels.mask_means(feat.data, masks.masks)


def _paint_order(masks: MaskSet) -> np.ndarray:
    # Painted sequentially with later masks overwriting, so the winner
    # (smallest area, then lowest ID) must come last.
    areas = masks.areas()
    ids = np.arange(masks.count, dtype=np.int64)
    return ids[np.lexsort((-ids, -areas))]


def assign_pixels(
    masks: MaskSet, policy: AssignmentPolicy = AssignmentPolicy.SMALLEST_MASK
) -> np.ndarray:
    """Resolve each pixel to one mask ID (uint16; 0 where nothing covers)."""
    if not isinstance(policy, AssignmentPolicy):
        raise ValueError(f"unrecognized assignment policy {policy!r}")
    if masks.count == 0:
        return np.zeros((masks.height, masks.width), dtype=np.uint16)
    return kernels.assign_pixels(masks.masks, _paint_order(masks))


def build_frame(
    feat: DenseFeatureMap,
    masks: MaskSet,
    policy: AssignmentPolicy = AssignmentPolicy.SMALLEST_MASK,
) -> MaskIndexedFrame:
    """Full 2D pipeline: upsample if needed, aggregate, assign, compact.

    Masks left with zero assigned pixels after overlap resolution are
    dropped and IDs compacted, so every surviving ID appears in the index
    map and the mask count in the storage arithmetic stays honest.
    """
    feat = upsample_bilinear(feat, masks.height, masks.width)
    table = aggregate_mask_features(feat, masks)
    index_map = assign_pixels(masks, policy)

    if masks.count:
        assigned = np.bincount(index_map.reshape(-1).astype(np.int64), minlength=masks.count + 1)
        survivors = np.nonzero(assigned[1:] > 0)[0]  # 0-based mask indices
        if survivors.size != masks.count:
            remap = np.zeros(masks.count + 1, dtype=np.uint16)
            remap[survivors + 1] = np.arange(1, survivors.size + 1, dtype=np.uint16)
            index_map = remap[index_map]
            table = table[survivors]
    return MaskIndexedFrame(index_map=index_map, feature_table=table)


def reconstruct_dense(frame: MaskIndexedFrame) -> tuple[np.ndarray, np.ndarray]:
    """Expand a frame back to per-pixel features by table lookup.

    Returns (features (H, W, dim) float32, valid (H, W) bool); background
    pixels are flagged invalid and hold zeros. Pure gather — values are
    bitwise equal to their table rows.
    """
    idx = frame.index_map.astype(np.int64)
    valid = idx > 0
    table = np.concatenate(
        [np.zeros((1, frame.dim), dtype=np.float32), frame.feature_table], axis=0
    )
    return table[idx], valid
