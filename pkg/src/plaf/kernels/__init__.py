"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set PLAF_KERNELS=python or PLAF_KERNELS=native to force a backend (forcing
``native`` raises if the extension was not built). Both backends implement
the same arithmetic and are interchangeable; ``backend_name()`` reports
which one is active.
"""

from __future__ import annotations

import os

from plaf.kernels import _reference


def load_backend(name: str):
    """Return the backend module for ``name`` ("python" or "native")."""
    if name == "python":
        return _reference
    if name == "native":
        from plaf.kernels import _native

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    forced = os.environ.get("PLAF_KERNELS")
    if forced:
        return load_backend(forced)
    try:
        return load_backend("native")
    except ImportError:
        return _reference


_active = _select()


def use(name: str) -> None:
    """Switch the active backend (mainly for tests and benchmarks)."""
    global _active
    _active = load_backend(name)


def backend_name() -> str:
    return _active.NAME


def upsample_bilinear(src, out_h, out_w):
    return _active.upsample_bilinear(src, out_h, out_w)


def mask_means(feat, masks):
    return _active.mask_means(feat, masks)


def assign_pixels(masks, paint_order):
    return _active.assign_pixels(masks, paint_order)


def back_project(depth, index_map, fx, fy, cx, cy, pose, stride):
    return _active.back_project(depth, index_map, fx, fy, cx, cy, pose, stride)
