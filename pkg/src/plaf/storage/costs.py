"""Storage cost arithmetic for dense vs indexed semantic representations.

2D: a dense map stores one feature vector per pixel; the mask-indexed
scheme stores one small integer per pixel plus one feature row per mask.
3D: dense attaches a descriptor to every point; the index-and-reference
scheme stores one small integer per point plus a pool of unique
descriptors. All byte counts are exact integers (Python ints never wrap);
inputs are range-checked so a nonsense model fails loudly instead of
producing a plausible-looking number.
"""

from __future__ import annotations

from dataclasses import dataclass

from plaf.core import ValidationError

_ELEMENT_WIDTHS = (2, 4)


@dataclass(frozen=True)
class StorageModel:
    """Scene dimensions plus element widths used by the cost formulas.

    Only the fields a given formula touches need to be meaningful; the
    others may be left at their defaults.
    """

    feature_dim: int = 0  # entries per descriptor
    float_bytes: int = 4  # bytes per feature element (4 = FP32, 2 = FP16)
    index_bytes: int = 2  # bytes per 2D mask index
    ref_bytes: int = 2  # bytes per 3D pool reference
    height: int = 0
    width: int = 0
    mask_count: int = 0  # masks in one image
    point_count: int = 0  # 3D points
    pool_size: int = 0  # unique descriptors after fusion

    def _need(self, **fields: int) -> None:
        for name, minimum in fields.items():
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if value < minimum:
                raise ValidationError(f"{name} must be >= {minimum}, got {value}")
        for name in ("float_bytes", "index_bytes", "ref_bytes"):
            if name in fields and getattr(self, name) not in _ELEMENT_WIDTHS:
                raise ValidationError(f"{name} must be one of {_ELEMENT_WIDTHS}")


def dense_2d_cost(m: StorageModel) -> int:
    """Bytes to store one feature vector per pixel: H*W*C*float_bytes."""
    m._need(height=1, width=1, feature_dim=1, float_bytes=2)
    return m.height * m.width * m.feature_dim * m.float_bytes


def mask_indexed_2d_cost(m: StorageModel) -> int:
    """Bytes for the index map plus the mask feature table:
    H*W*index_bytes + K*C*float_bytes."""
    m._need(height=1, width=1, feature_dim=1, float_bytes=2, index_bytes=2, mask_count=0)
    return m.height * m.width * m.index_bytes + m.mask_count * m.feature_dim * m.float_bytes


def ratio_2d(m: StorageModel) -> float:
    """mask_indexed_2d_cost / dense_2d_cost.

    Algebraically equal to index_bytes/(C*float_bytes) + K/(H*W); both
    forms agree within 1e-12 and tests hold us to that.
    """
    return mask_indexed_2d_cost(m) / dense_2d_cost(m)


def ratio_2d_closed_form(m: StorageModel) -> float:
    m._need(height=1, width=1, feature_dim=1, float_bytes=2, index_bytes=2, mask_count=0)
    return m.index_bytes / (m.feature_dim * m.float_bytes) + m.mask_count / (m.height * m.width)


def dense_3d_cost(m: StorageModel) -> int:
    """Bytes to attach a descriptor to every point: N*C*float_bytes."""
    m._need(point_count=1, feature_dim=1, float_bytes=2)
    return m.point_count * m.feature_dim * m.float_bytes


def index_ref_3d_cost(m: StorageModel) -> int:
    """Bytes for per-point references plus the descriptor pool:
    N*ref_bytes + M*C*float_bytes."""
    m._need(point_count=1, feature_dim=1, float_bytes=2, ref_bytes=2, pool_size=0)
    return m.point_count * m.ref_bytes + m.pool_size * m.feature_dim * m.float_bytes


def ratio_3d(m: StorageModel) -> float:
    """index_ref_3d_cost / dense_3d_cost (= ref_bytes/(C*float_bytes) + M/N)."""
    return index_ref_3d_cost(m) / dense_3d_cost(m)


def ratio_3d_closed_form(m: StorageModel) -> float:
    m._need(point_count=1, feature_dim=1, float_bytes=2, ref_bytes=2, pool_size=0)
    return m.ref_bytes / (m.feature_dim * m.float_bytes) + m.pool_size / m.point_count
