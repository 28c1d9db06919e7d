"""Compact mask-indexed semantic memory for open-vocabulary 2D/3D mapping.

Dense language-aligned pixel features are pooled per class-agnostic mask
into an index map plus a small feature table per image, lifted to a 3D
point cloud whose points hold integer references into a deduplicated
descriptor pool, and queried with externally produced text embeddings.
"""

from plaf.core import (
    CameraFrame,
    DenseFeatureMap,
    FeaturePool,
    MaskIndexedFrame,
    MaskSet,
    SemanticPointCloud,
    validate,
)
from plaf.frame2d import (
    AssignmentPolicy,
    aggregate_mask_features,
    assign_pixels,
    build_frame,
    reconstruct_dense,
    upsample_bilinear,
)
from plaf.lift3d import FusionConfig, MapBuilder, back_project, build_map, fuse_frame, project
from plaf.query import (
    QueryResult,
    TextQuery,
    export_cloud_ply,
    export_heatmap_pgm,
    query_pixels,
    query_points,
    score_pool,
)

__version__ = "0.1.0"

__all__ = [
    "CameraFrame",
    "DenseFeatureMap",
    "FeaturePool",
    "MaskIndexedFrame",
    "MaskSet",
    "SemanticPointCloud",
    "validate",
    "AssignmentPolicy",
    "aggregate_mask_features",
    "assign_pixels",
    "build_frame",
    "reconstruct_dense",
    "upsample_bilinear",
    "FusionConfig",
    "MapBuilder",
    "back_project",
    "build_map",
    "fuse_frame",
    "project",
    "QueryResult",
    "TextQuery",
    "export_cloud_ply",
    "export_heatmap_pgm",
    "query_pixels",
    "query_points",
    "score_pool",
    "__version__",
]
