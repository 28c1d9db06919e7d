"""Numpy implementations of the hot per-pixel kernels.

This is the fallback backend; ``_native`` (Cython) implements the same
arithmetic loop-for-loop. Interpolation and back-projection evaluate the
identical float64 expression trees in both backends, so results agree
bitwise; mask means use float64 accumulation in both (numpy sums pairwise,
the native kernel sequentially — the float32 results still agree because
the float64 noise is far below float32 resolution).
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def upsample_bilinear(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Channel-wise bilinear resample, align-corners-false, clamped at borders.

    Sample centers sit at (i + 0.5) / size; arithmetic in float64, result
    cast to float32. Output rows are processed in chunks to bound the
    float64 working set.
    """
    h, w, dim = src.shape
    ry = h / out_h
    rx = w / out_w

    pos_x = (np.arange(out_w, dtype=np.float64) + 0.5) * rx - 0.5
    x0f = np.floor(pos_x)
    fx = pos_x - x0f
    x0 = np.clip(x0f.astype(np.int64), 0, w - 1)
    x1 = np.clip(x0f.astype(np.int64) + 1, 0, w - 1)

    pos_y = (np.arange(out_h, dtype=np.float64) + 0.5) * ry - 0.5
    y0f = np.floor(pos_y)
    fy = pos_y - y0f
    y0 = np.clip(y0f.astype(np.int64), 0, h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, h - 1)

    out = np.empty((out_h, out_w, dim), dtype=np.float32)
    src64 = src.astype(np.float64)
    # chunk size keeps the six (rows, out_w, dim) float64 temporaries modest
    chunk = max(1, int(32 * 1024 * 1024 / (out_w * dim * 8)))
    wx0 = (1.0 - fx)[None, :, None]
    wx1 = fx[None, :, None]
    for r0 in range(0, out_h, chunk):
        r1 = min(r0 + chunk, out_h)
        ys0 = y0[r0:r1]
        ys1 = y1[r0:r1]
        wy1 = fy[r0:r1][:, None, None]
        wy0 = 1.0 - wy1
        v00 = src64[ys0][:, x0]
        v01 = src64[ys0][:, x1]
        v10 = src64[ys1][:, x0]
        v11 = src64[ys1][:, x1]
        out[r0:r1] = wy0 * (wx0 * v00 + wx1 * v01) + wy1 * (wx0 * v10 + wx1 * v11)
    return out


def mask_means(feat: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Per-mask mean of feature vectors over each mask's foreground set.

    Accumulates in float64, stores float32. Empty masks are the caller's
    problem (MaskSet rejects them at ingest).
    """
    k = masks.shape[0]
    dim = feat.shape[2]
    out = np.empty((k, dim), dtype=np.float32)
    flat = feat.reshape(-1, dim)
    for i in range(k):
        sel = flat[masks[i].reshape(-1)]
        out[i] = sel.astype(np.float64).sum(axis=0) / sel.shape[0]
    return out


def assign_pixels(masks: np.ndarray, paint_order: np.ndarray) -> np.ndarray:
    """Paint mask IDs over the raster; later paints in ``paint_order`` win.

    The caller encodes the tie-break policy in the order (the winner is the
    mask painted last). Returns uint16 IDs, 0 where no mask covers.
    """
    out = np.zeros(masks.shape[1:], dtype=np.uint16)
    for k in paint_order:
        out[masks[k]] = k + 1
    return out


def back_project(
    depth: np.ndarray,
    index_map: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    pose: np.ndarray,
    stride: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Lift stride-sampled foreground pixels with valid depth to world points.

    Camera point for pixel (u, v) with depth d is
    ((u + 0.5 - cx) * d / fx, (v + 0.5 - cy) * d / fy, d), then transformed
    by the world-from-camera pose. Returns (points float64 (n, 3), mask IDs
    int64 (n,), skipped sample count); samples are emitted row-major.
    """
    d = depth[::stride, ::stride].astype(np.float64)
    ids = index_map[::stride, ::stride].astype(np.int64)
    hh, ww = d.shape
    vv, uu = np.meshgrid(
        np.arange(0, stride * hh, stride, dtype=np.float64),
        np.arange(0, stride * ww, stride, dtype=np.float64),
        indexing="ij",
    )
    keep = np.isfinite(d) & (d > 0.0) & (ids > 0)
    n_samples = d.size
    u = uu[keep]
    v = vv[keep]
    dk = d[keep]
    x = (u + 0.5 - cx) * dk / fx
    y = (v + 0.5 - cy) * dk / fy
    z = dk
    r = pose[:3, :3]
    t = pose[:3, 3]
    pts = np.empty((x.shape[0], 3), dtype=np.float64)
    pts[:, 0] = r[0, 0] * x + r[0, 1] * y + r[0, 2] * z + t[0]
    pts[:, 1] = r[1, 0] * x + r[1, 1] * y + r[1, 2] * z + t[1]
    pts[:, 2] = r[2, 0] * x + r[2, 1] * y + r[2, 2] * z + t[2]
    return pts, ids[keep], int(n_samples - x.shape[0])
