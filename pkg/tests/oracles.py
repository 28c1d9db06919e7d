"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately written the slow, obvious way (scalar
loops, textbook formulas) and never calls into the package's own kernels,
so tests compare two independent routes to the same math.
"""

from __future__ import annotations

import math

import numpy as np


def bilinear_scalar(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Scalar bilinear interpolation, align-corners-false, border-clamped."""
    h, w, dim = src.shape
    out = np.zeros((out_h, out_w, dim), dtype=np.float64)
    for i in range(out_h):
        sy = (i + 0.5) * h / out_h - 0.5
        y0 = math.floor(sy)
        fy = sy - y0
        y0c = min(max(y0, 0), h - 1)
        y1c = min(max(y0 + 1, 0), h - 1)
        for j in range(out_w):
            sx = (j + 0.5) * w / out_w - 0.5
            x0 = math.floor(sx)
            fx = sx - x0
            x0c = min(max(x0, 0), w - 1)
            x1c = min(max(x0 + 1, 0), w - 1)
            for c in range(dim):
                top = (1 - fx) * float(src[y0c, x0c, c]) + fx * float(src[y0c, x1c, c])
                bot = (1 - fx) * float(src[y1c, x0c, c]) + fx * float(src[y1c, x1c, c])
                out[i, j, c] = (1 - fy) * top + fy * bot
    return out


def mask_mean_scalar(feat: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Plain sum-and-divide mean over one mask's foreground pixels."""
    h, w, dim = feat.shape
    acc = np.zeros(dim, dtype=np.float64)
    n = 0
    for v in range(h):
        for u in range(w):
            if mask[v, u]:
                acc += feat[v, u].astype(np.float64)
                n += 1
    assert n > 0, "oracle called on an empty mask"
    return acc / n


def assign_scalar(masks: np.ndarray) -> np.ndarray:
    """Per-pixel evaluation of the smallest-mask policy (ties: lowest ID)."""
    k, h, w = masks.shape
    areas = [int(masks[i].sum()) for i in range(k)]
    out = np.zeros((h, w), dtype=np.int64)
    for v in range(h):
        for u in range(w):
            best = 0
            best_key = None
            for i in range(k):
                if masks[i, v, u]:
                    key = (areas[i], i)
                    if best_key is None or key < best_key:
                        best_key = key
                        best = i + 1
            out[v, u] = best
    return out


def reconstruct_scalar(feat: np.ndarray, masks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mask means, then per-pixel lookup through the assignment policy."""
    k = masks.shape[0]
    means = [mask_mean_scalar(feat, masks[i]) for i in range(k)]
    assignment = assign_scalar(masks)
    h, w = assignment.shape
    out = np.zeros((h, w, feat.shape[2]), dtype=np.float64)
    valid = assignment > 0
    for v in range(h):
        for u in range(w):
            if assignment[v, u] > 0:
                out[v, u] = means[assignment[v, u] - 1]
    return out, valid


def greedy_pool_scalar(
    descriptors: np.ndarray, threshold: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sequential greedy cosine clustering, textbook form.

    Normalizes every input, takes the best cosine against the current pool
    (first maximum on ties), merges via the count-weighted mean
    (c*old + new) / (c+1) with an unconditional renormalize, otherwise
    appends. The pool matrix is preallocated so oracle runs stay linear in
    allocations for long streams. Returns (pool (M, dim) float64,
    counts (M,), assignment (n,) entry index per input).
    """
    n, dim = descriptors.shape
    pool = np.zeros((max(n, 1), dim), dtype=np.float64)
    counts: list[int] = []
    assignment = np.zeros(n, dtype=np.int64)
    m = 0
    for i, raw in enumerate(descriptors.astype(np.float64)):
        d = raw / np.linalg.norm(raw)
        best = int(np.argmax(pool[:m] @ d)) if m else -1
        if best >= 0 and float(np.dot(pool[best], d)) >= threshold:
            c = counts[best]
            merged = (c * pool[best] + d) / (c + 1)
            pool[best] = merged / np.linalg.norm(merged)
            counts[best] = c + 1
            assignment[i] = best
        else:
            pool[m] = d
            counts.append(1)
            assignment[i] = m
            m += 1
    return pool[:m], np.asarray(counts, dtype=np.int64), assignment


def project_scalar(point_world, pose, fx, fy, cx, cy) -> tuple[float, float]:
    """Pinhole projection by hand: world -> camera -> pixel center coords."""
    p = np.asarray(point_world, dtype=np.float64)
    r = np.asarray(pose)[:3, :3]
    t = np.asarray(pose)[:3, 3]
    cam = r.T @ (p - t)
    u = fx * cam[0] / cam[2] + cx - 0.5
    v = fy * cam[1] / cam[2] + cy - 0.5
    return float(u), float(v)


def random_mask_set(rng: np.random.Generator, h: int, w: int, k: int) -> np.ndarray:
    """Random rectangles (overlaps allowed), each guaranteed non-empty."""
    masks = np.zeros((k, h, w), dtype=bool)
    for i in range(k):
        y0 = int(rng.integers(0, h - 1))
        x0 = int(rng.integers(0, w - 1))
        y1 = int(rng.integers(y0 + 1, h + 1))
        x1 = int(rng.integers(x0 + 1, w + 1))
        masks[i, y0:y1, x0:x1] = True
    return masks
