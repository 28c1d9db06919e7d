"""Open-vocabulary querying against frames (2D) and maps (3D).

A query is an externally produced text embedding; similarity is cosine
(dot product of unit vectors), so selection is invariant to positive
rescaling of the embedding. Scores are computed once per mask or pool
entry and broadcast to pixels/points through the index indirection, which
guarantees that targets sharing a reference share a score. Background
targets carry a -inf sentinel and are never selected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from plaf.core import (
    DimensionMismatchError,
    FeaturePool,
    MaskIndexedFrame,
    SemanticPointCloud,
    ValidationError,
    as_feature_vector,
)

NEG_INF = np.float32(-np.inf)


@dataclass(frozen=True)
class TextQuery:
    label: str
    embedding: np.ndarray  # (dim,) float32, any positive scale
    score_threshold: float = 0.5
    top_k: int | None = None

    def __post_init__(self):
        vec = as_feature_vector(self.embedding)
        if not float(np.dot(vec.astype(np.float64), vec.astype(np.float64))) > 0.0:
            raise ValidationError("query embedding must have non-zero norm")
        if not -1.0 <= self.score_threshold <= 1.0:
            raise ValidationError(f"score threshold must be in [-1, 1], got {self.score_threshold}")
        if self.top_k is not None and self.top_k < 1:
            raise ValidationError(f"top_k must be positive, got {self.top_k}")
        object.__setattr__(self, "embedding", vec)

    def unit_embedding(self) -> np.ndarray:
        vec = self.embedding.astype(np.float64)
        return vec / math.sqrt(float(np.dot(vec, vec)))


@dataclass(frozen=True)
class QueryResult:
    """Per-target scores plus the thresholded/top-k selection.

    ``scores`` is flat over targets (row-major pixels for 2D); ``selected``
    holds target indices in descending score order (ties broken by target
    index), a prefix of the full threshold selection when top_k is set.
    ``shape`` remembers the 2D raster when applicable.
    """

    scores: np.ndarray  # (n,) float32, -inf for background targets
    selected: np.ndarray  # (k,) int64
    threshold: float
    top_k: int | None = None
    shape: tuple[int, int] | None = None

    @property
    def selected_mask(self) -> np.ndarray:
        out = np.zeros(self.scores.shape[0], dtype=bool)
        out[self.selected] = True
        return out


def _select(scores: np.ndarray, threshold: float, top_k: int | None) -> np.ndarray:
    eligible = np.nonzero(scores >= threshold)[0]
    order = np.argsort(-scores[eligible], kind="stable")
    ranked = eligible[order]
    if top_k is not None:
        ranked = ranked[:top_k]
    return ranked.astype(np.int64)


def score_pool(pool: FeaturePool, q: TextQuery) -> np.ndarray:
    """Cosine of every pool descriptor against the normalized query."""
    if pool.dim != q.embedding.size:
        raise DimensionMismatchError(f"query dim {q.embedding.size} does not match pool dim {pool.dim}")
    scores = pool.descriptors.astype(np.float64) @ q.unit_embedding()
    return np.clip(scores, -1.0, 1.0).astype(np.float32)


def query_points(pool: FeaturePool, cloud: SemanticPointCloud, q: TextQuery) -> QueryResult:
    """Score every point through its pool reference: one pool evaluation,
    N index lookups."""
    if cloud.pool_refs.size and int(cloud.pool_refs.max()) >= pool.size:
        raise ValidationError("cloud references entries beyond the pool")
    entry_scores = score_pool(pool, q)
    scores = entry_scores[cloud.pool_refs.astype(np.int64)] if cloud.count else np.zeros(0, np.float32)
    return QueryResult(
        scores=scores,
        selected=_select(scores, q.score_threshold, q.top_k),
        threshold=q.score_threshold,
        top_k=q.top_k,
    )


def query_pixels(frame: MaskIndexedFrame, q: TextQuery) -> QueryResult:
    """Score each mask once (K cosines) and broadcast through the index map;
    background pixels get -inf and are excluded."""
    if frame.dim != q.embedding.size:
        raise DimensionMismatchError(f"query dim {q.embedding.size} does not match frame dim {frame.dim}")
    table = frame.feature_table.astype(np.float64)
    norms = np.linalg.norm(table, axis=1)
    if np.any(norms == 0):
        raise ValidationError("frame contains an all-zero mask feature")
    mask_scores = (table / norms[:, None]) @ q.unit_embedding()
    mask_scores = np.clip(mask_scores, -1.0, 1.0).astype(np.float32)
    lut = np.concatenate([[NEG_INF], mask_scores])
    scores = lut[frame.index_map.astype(np.int64)].reshape(-1)
    return QueryResult(
        scores=scores,
        selected=_select(scores, q.score_threshold, q.top_k),
        threshold=q.score_threshold,
        top_k=q.top_k,
        shape=(frame.height, frame.width),
    )


def argmax_labels(results: list[QueryResult]) -> np.ndarray:
    """Alternative discrete readout over several queries of one target set:
    per target, the index of the highest-scoring query, or -1 where every
    query scored -inf (background)."""
    if not results:
        raise ValidationError("argmax_labels needs at least one result")
    stacked = np.stack([r.scores for r in results], axis=0)
    labels = np.argmax(stacked, axis=0).astype(np.int64)
    labels[np.all(np.isneginf(stacked), axis=0)] = -1
    return labels


def _format_float(v: float) -> str:
    return f"{float(v):.9g}"


def export_heatmap_pgm(result: QueryResult, path) -> None:
    """Binary PGM of the score raster plus a raw float32 sidecar.

    Gray levels map [-1, 1] affinely to [0, 255] (a fixed scale keeps
    separate queries comparable); background pixels render as 0. The raw
    scores (including -inf sentinels) go to <path>.f32 with a JSON
    descriptor, readable by the standard raw-array reader.
    """
    if result.shape is None:
        raise ValidationError("PGM export needs a 2D result")
    from plaf.storage import inputs

    h, w = result.shape
    scores = result.scores.reshape(h, w)
    valid = np.isfinite(scores)
    gray = np.zeros((h, w), dtype=np.uint8)
    gray[valid] = np.clip(np.rint((scores[valid] + 1.0) * 127.5), 0, 255).astype(np.uint8)
    path = Path(path)
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + gray.tobytes())
    inputs.write_raw_array(path.with_suffix(".f32"), scores)


def export_cloud_ply(result: QueryResult, cloud: SemanticPointCloud, path) -> None:
    """ASCII PLY with per-vertex x y z score and a selected flag (0/1).

    Output bytes are deterministic for identical inputs.
    """
    if result.scores.shape[0] != cloud.count:
        raise DimensionMismatchError("result does not match cloud size")
    selected = result.selected_mask
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {cloud.count}",
        "property float x",
        "property float y",
        "property float z",
        "property float score",
        "property uchar selected",
        "end_header",
    ]
    pos = cloud.positions
    for i in range(cloud.count):
        lines.append(
            f"{_format_float(pos[i, 0])} {_format_float(pos[i, 1])} {_format_float(pos[i, 2])} "
            f"{_format_float(result.scores[i])} {1 if selected[i] else 0}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
