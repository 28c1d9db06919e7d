"""Readers and writers for the ingest-side file formats.

Array payloads are raw little-endian row-major files with a JSON sidecar
describing their shape; for payload ``X.f32`` the sidecar is ``X.json``.

  dense features   float32 h*w*C      sidecar {height, width, channels}
  depth            float32 H*W        sidecar {height, width, channels: 1}
  masks (raw)      uint8 K*H*W        sidecar {height, width, count, encoding: "raw"}
  masks (rle)      per mask: u32 run count, then u32 run lengths
                   alternating background/foreground starting with
                   background, over the flattened raster
                                      sidecar {height, width, count, encoding: "rle"}
  text embedding   float32 C          sidecar {label, dim}
  camera           single JSON {fx, fy, cx, cy, pose (16 row-major), depth}
                   with ``depth`` a path relative to the JSON file
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from plaf.core import (
    CameraFrame,
    DenseFeatureMap,
    FormatError,
    InputMissingError,
    MaskSet,
)


def sidecar_path(payload_path) -> Path:
    return Path(payload_path).with_suffix(".json")


def _read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputMissingError(f"missing descriptor {path}")
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}", path=path, kind="bad-descriptor")
    if not isinstance(meta, dict):
        raise FormatError("descriptor must be a JSON object", path=path, kind="bad-descriptor")
    return meta


def _meta_int(meta: dict, key: str, path, minimum: int = 1) -> int:
    if key not in meta:
        raise FormatError(f"descriptor missing field {key!r}", path=path, kind="bad-descriptor")
    value = meta[key]
    if not isinstance(value, int) or value < minimum:
        raise FormatError(
            f"descriptor field {key!r} must be an integer >= {minimum}, got {value!r}",
            path=path,
            kind="bad-descriptor",
        )
    return value


def _read_payload(path, expected_bytes: int, what: str) -> bytes:
    path = Path(path)
    if not path.exists():
        raise InputMissingError(f"missing {what} file {path}")
    buf = path.read_bytes()
    if len(buf) != expected_bytes:
        kind = "truncated" if len(buf) < expected_bytes else "trailing"
        raise FormatError(
            f"truncated payload: {what} holds {len(buf)} bytes, expected {expected_bytes}"
            if kind == "truncated"
            else f"{what} holds {len(buf)} bytes, expected {expected_bytes}",
            path=path,
            kind=kind,
            offset=min(len(buf), expected_bytes),
        )
    return buf


def write_raw_array(path, arr: np.ndarray, **extra) -> None:
    """Write a float32 payload plus its sidecar descriptor."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 2:
        meta = {"height": arr.shape[0], "width": arr.shape[1], "channels": 1}
    elif arr.ndim == 3:
        meta = {"height": arr.shape[0], "width": arr.shape[1], "channels": arr.shape[2]}
    else:
        raise FormatError(f"raw arrays must be 2-D or 3-D, got shape {arr.shape}", path=path)
    meta.update(extra)
    Path(path).write_bytes(arr.astype("<f4").tobytes())
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_dense_features(path) -> DenseFeatureMap:
    path = Path(path)
    meta = _read_json(sidecar_path(path))
    h = _meta_int(meta, "height", path)
    w = _meta_int(meta, "width", path)
    c = _meta_int(meta, "channels", path)
    buf = _read_payload(path, h * w * c * 4, "dense feature")
    return DenseFeatureMap(np.frombuffer(buf, dtype="<f4").reshape(h, w, c))


def read_depth(path) -> np.ndarray:
    path = Path(path)
    meta = _read_json(sidecar_path(path))
    h = _meta_int(meta, "height", path)
    w = _meta_int(meta, "width", path)
    channels = meta.get("channels", 1)
    if channels != 1:
        raise FormatError("depth maps must have 1 channel", path=path, kind="bad-descriptor")
    buf = _read_payload(path, h * w * 4, "depth")
    return np.frombuffer(buf, dtype="<f4").reshape(h, w)


def write_masks_raw(path, masks: np.ndarray) -> None:
    masks = np.asarray(masks).astype(np.uint8)
    k, h, w = masks.shape
    Path(path).write_bytes(masks.tobytes())
    sidecar_path(path).write_text(
        json.dumps({"height": h, "width": w, "count": k, "encoding": "raw"}, sort_keys=True) + "\n"
    )


def rle_encode(mask: np.ndarray) -> np.ndarray:
    """Runs over the flattened raster, alternating background/foreground,
    starting with background (possibly a zero-length run)."""
    flat = np.asarray(mask, dtype=bool).reshape(-1)
    if flat.size == 0:
        return np.zeros(0, dtype=np.uint32)
    change = np.nonzero(flat[1:] != flat[:-1])[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [flat.size]])
    runs = (ends - starts).astype(np.uint32)
    if flat[0]:  # must start with a background run
        runs = np.concatenate([np.zeros(1, dtype=np.uint32), runs])
    return runs


def rle_decode(runs: np.ndarray, height: int, width: int) -> np.ndarray:
    total = int(np.asarray(runs, dtype=np.int64).sum())
    if total != height * width:
        raise FormatError(
            f"RLE runs cover {total} pixels, raster has {height * width}", kind="bad-descriptor"
        )
    values = np.zeros(len(runs), dtype=bool)
    values[1::2] = True
    return np.repeat(values, runs).reshape(height, width)


def write_masks_rle(path, masks: np.ndarray) -> None:
    masks = np.asarray(masks).astype(bool)
    k, h, w = masks.shape
    parts = []
    for i in range(k):
        runs = rle_encode(masks[i])
        parts.append(np.uint32(len(runs)).tobytes())
        parts.append(runs.astype("<u4").tobytes())
    Path(path).write_bytes(b"".join(parts))
    sidecar_path(path).write_text(
        json.dumps({"height": h, "width": w, "count": k, "encoding": "rle"}, sort_keys=True) + "\n"
    )


def read_masks(path) -> MaskSet:
    path = Path(path)
    meta = _read_json(sidecar_path(path))
    h = _meta_int(meta, "height", path)
    w = _meta_int(meta, "width", path)
    k = _meta_int(meta, "count", path, minimum=0)
    encoding = meta.get("encoding", "raw")
    if encoding == "raw":
        buf = _read_payload(path, k * h * w, "mask")
        rasters = np.frombuffer(buf, dtype=np.uint8).reshape(k, h, w)
        if rasters.size and rasters.max() > 1:
            raise FormatError("raw mask rasters must be binary (0/1)", path=path)
        return MaskSet(rasters.astype(bool), height=h, width=w)
    if encoding == "rle":
        if not path.exists():
            raise InputMissingError(f"missing mask file {path}")
        buf = path.read_bytes()
        masks = np.zeros((k, h, w), dtype=bool)
        off = 0
        for i in range(k):
            if off + 4 > len(buf):
                raise FormatError(
                    f"truncated payload: run count of mask {i}", path=path, kind="truncated", offset=off
                )
            n_runs = int(np.frombuffer(buf, dtype="<u4", count=1, offset=off)[0])
            off += 4
            if off + 4 * n_runs > len(buf):
                raise FormatError(
                    f"truncated payload: runs of mask {i}", path=path, kind="truncated", offset=off
                )
            runs = np.frombuffer(buf, dtype="<u4", count=n_runs, offset=off)
            off += 4 * n_runs
            try:
                masks[i] = rle_decode(runs, h, w)
            except FormatError as exc:
                raise FormatError(f"mask {i}: {exc}", path=path, kind="bad-descriptor", offset=off)
        if off != len(buf):
            raise FormatError(
                f"{len(buf) - off} trailing bytes after mask runs", path=path, kind="trailing", offset=off
            )
        return MaskSet(masks, height=h, width=w)
    raise FormatError(f"unknown mask encoding {encoding!r}", path=path, kind="bad-descriptor")


def write_camera(path, cam: CameraFrame, depth_path) -> None:
    """Camera JSON stores intrinsics, row-major pose, and the depth payload
    path relative to the JSON file."""
    path = Path(path)
    depth_rel = Path(depth_path).name if Path(depth_path).parent == path.parent else str(depth_path)
    meta = {
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "pose": [float(v) for v in cam.pose_world_from_camera.reshape(-1)],
        "depth": depth_rel,
    }
    write_raw_array(depth_path, cam.depth)
    path.write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_camera(path) -> CameraFrame:
    path = Path(path)
    if not path.exists():
        raise InputMissingError(f"missing camera file {path}")
    meta = _read_json(path)
    for key in ("fx", "fy", "cx", "cy", "pose", "depth"):
        if key not in meta:
            raise FormatError(f"camera descriptor missing field {key!r}", path=path, kind="bad-descriptor")
    pose = np.asarray(meta["pose"], dtype=np.float64)
    if pose.size != 16:
        raise FormatError("camera pose must hold 16 numbers", path=path, kind="bad-descriptor")
    depth_path = Path(meta["depth"])
    if not depth_path.is_absolute():
        depth_path = path.parent / depth_path
    depth = read_depth(depth_path)
    return CameraFrame(
        depth=depth,
        fx=float(meta["fx"]),
        fy=float(meta["fy"]),
        cx=float(meta["cx"]),
        cy=float(meta["cy"]),
        pose_world_from_camera=pose.reshape(4, 4),
    )


def write_text_embedding(path, label: str, vec: np.ndarray) -> None:
    vec = np.asarray(vec, dtype=np.float32).reshape(-1)
    Path(path).write_bytes(vec.astype("<f4").tobytes())
    sidecar_path(path).write_text(
        json.dumps({"label": label, "dim": int(vec.size)}, sort_keys=True) + "\n"
    )


def read_text_embedding(path) -> tuple[str, np.ndarray]:
    path = Path(path)
    meta = _read_json(sidecar_path(path))
    dim = _meta_int(meta, "dim", path)
    label = meta.get("label", "")
    buf = _read_payload(path, dim * 4, "text embedding")
    return str(label), np.frombuffer(buf, dtype="<f4").copy()
