"""Storage cost arithmetic, binary containers, and ingest file formats."""

from plaf.storage.costs import (
    StorageModel,
    dense_2d_cost,
    dense_3d_cost,
    index_ref_3d_cost,
    mask_indexed_2d_cost,
    ratio_2d,
    ratio_2d_closed_form,
    ratio_3d,
    ratio_3d_closed_form,
)
from plaf.storage.container import (
    HEADER_BYTES,
    frame_file_bytes,
    map_semantic_bytes,
    read_frame,
    read_map,
    write_frame,
    write_map,
)

__all__ = [
    "StorageModel",
    "dense_2d_cost",
    "mask_indexed_2d_cost",
    "ratio_2d",
    "ratio_2d_closed_form",
    "dense_3d_cost",
    "index_ref_3d_cost",
    "ratio_3d",
    "ratio_3d_closed_form",
    "HEADER_BYTES",
    "frame_file_bytes",
    "map_semantic_bytes",
    "read_frame",
    "read_map",
    "write_frame",
    "write_map",
]
