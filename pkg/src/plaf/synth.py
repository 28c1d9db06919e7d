"""Synthetic scene generator: lets the whole pipeline run end to end with
zero external models, with ground truth known by construction.

A scene is a ring of axis-aligned boxes in a room, one orthonormal
descriptor per box (Gram-Schmidt on seeded Gaussian vectors). Cameras sit
on a circle looking inward; each frame is ray-cast against the boxes to
produce a depth map, per-object masks (nearest hit wins, so masks are
disjoint), and a feature map holding the object descriptor plus Gaussian
noise inside each mask. Each object's clean descriptor is also written as
a text-embedding file. Generation is deterministic given the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from plaf.core import CameraFrame, ValidationError
from plaf.storage import inputs


@dataclass(frozen=True)
class SyntheticSceneSpec:
    object_count: int = 5
    feature_dim: int = 32
    height: int = 96
    width: int = 128
    frame_count: int = 8
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.object_count < 1:
            raise ValidationError("need at least one object")
        if self.feature_dim < self.object_count:
            raise ValidationError(
                f"feature dim {self.feature_dim} cannot hold {self.object_count} "
                "orthogonal descriptors"
            )
        if self.noise_sigma < 0:
            raise ValidationError("noise sigma must be non-negative")
        if self.height < 8 or self.width < 8:
            raise ValidationError("image size too small to render the scene")
        if self.frame_count < 1:
            raise ValidationError("need at least one frame")


def orthonormal_descriptors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Gram-Schmidt on Gaussian draws; rows are exactly unit and mutually
    orthogonal to machine precision."""
    raw = rng.standard_normal((count, dim))
    basis = np.empty_like(raw)
    for i in range(count):
        v = raw[i].copy()
        for j in range(i):
            v -= np.dot(basis[j], v) * basis[j]
        norm = np.linalg.norm(v)
        if norm < 1e-9:
            raise ValidationError("degenerate draw while orthogonalizing descriptors")
        basis[i] = v / norm
    return basis


def _look_at(eye: np.ndarray, target: np.ndarray) -> np.ndarray:
    """World-from-camera pose for a camera at eye looking at target
    (camera x right, y down, z forward; world z up)."""
    fwd = target - eye
    fwd = fwd / np.linalg.norm(fwd)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(fwd, up)
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    pose = np.eye(4)
    pose[:3, 0] = right
    pose[:3, 1] = down
    pose[:3, 2] = fwd
    pose[:3, 3] = eye
    return pose


def _ray_cast_boxes(
    cam: CameraFrame, h: int, w: int, box_min: np.ndarray, box_max: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Slab-test all pixels against all boxes.

    Returns (depth (h, w) float32 with 0 where nothing is hit,
    winner (h, w) int64 object index or -1). Depth is the camera-frame z of
    the nearest hit, matching the pinhole model used for lifting.
    """
    pose = cam.pose_world_from_camera
    uu, vv = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dirs_cam = np.stack(
        [(uu + 0.5 - cam.cx) / cam.fx, (vv + 0.5 - cam.cy) / cam.fy, np.ones_like(uu)], axis=-1
    )
    dirs = dirs_cam @ pose[:3, :3].T  # world-frame, z_cam = t by construction
    origin = pose[:3, 3]

    n_boxes = box_min.shape[0]
    t_best = np.full((h, w), np.inf)
    winner = np.full((h, w), -1, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        for b in range(n_boxes):
            t1 = (box_min[b] - origin) * inv
            t2 = (box_max[b] - origin) * inv
            t_near = np.minimum(t1, t2).max(axis=-1)
            t_far = np.maximum(t1, t2).min(axis=-1)
            hit = (t_far >= t_near) & (t_far > 0)
            t_hit = np.where(t_near > 0, t_near, t_far)
            better = hit & (t_hit < t_best)
            t_best[better] = t_hit[better]
            winner[better] = b
    depth = np.where(np.isfinite(t_best), t_best, 0.0).astype(np.float32)
    return depth, winner


def generate_scene(spec: SyntheticSceneSpec, out_dir) -> dict:
    """Write features/masks/depth/camera files per frame plus one text
    embedding per object; returns the manifest (also saved as scene.json)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    descriptors = orthonormal_descriptors(rng, spec.object_count, spec.feature_dim)

    ring_radius = 1.6
    half_extents = rng.uniform(0.22, 0.35, size=(spec.object_count, 3))
    angles = 2.0 * np.pi * np.arange(spec.object_count) / spec.object_count
    centers = np.stack(
        [ring_radius * np.cos(angles), ring_radius * np.sin(angles), half_extents[:, 2]], axis=1
    )
    box_min = centers - half_extents
    box_max = centers + half_extents

    fx = fy = 0.75 * spec.width
    cx = spec.width / 2.0
    cy = spec.height / 2.0
    cam_radius = 4.0
    cam_height = 1.6
    target = np.array([0.0, 0.0, 0.6])

    manifest = {
        "spec": {
            "object_count": spec.object_count,
            "feature_dim": spec.feature_dim,
            "height": spec.height,
            "width": spec.width,
            "frame_count": spec.frame_count,
            "noise_sigma": spec.noise_sigma,
            "seed": spec.seed,
        },
        "objects": [],
        "frames": [],
    }

    for i in range(spec.object_count):
        emb_path = out / f"text_{i:02d}.f32"
        inputs.write_text_embedding(emb_path, f"object-{i}", descriptors[i].astype(np.float32))
        manifest["objects"].append(
            {
                "label": f"object-{i}",
                "embedding": emb_path.name,
                "box_min": box_min[i].tolist(),
                "box_max": box_max[i].tolist(),
            }
        )

    for f in range(spec.frame_count):
        angle = 2.0 * np.pi * f / spec.frame_count
        eye = np.array(
            [cam_radius * math.cos(angle), cam_radius * math.sin(angle), cam_height]
        )
        pose = _look_at(eye, target)
        cam = CameraFrame(
            depth=np.zeros((spec.height, spec.width), dtype=np.float32),
            fx=fx, fy=fy, cx=cx, cy=cy, pose_world_from_camera=pose,
        )
        depth, winner = _ray_cast_boxes(cam, spec.height, spec.width, box_min, box_max)

        features = np.zeros((spec.height, spec.width, spec.feature_dim), dtype=np.float32)
        mask_list = []
        mask_objects = []
        for i in range(spec.object_count):
            mask = winner == i
            npix = int(mask.sum())
            if npix == 0:
                continue
            block = descriptors[i][None, :] + (
                spec.noise_sigma * rng.standard_normal((npix, spec.feature_dim))
                if spec.noise_sigma > 0
                else 0.0
            )
            features[mask] = block.astype(np.float32)
            mask_list.append(mask)
            mask_objects.append(i)

        feat_path = out / f"features_{f:03d}.f32"
        mask_path = out / f"masks_{f:03d}.rle"
        depth_path = out / f"depth_{f:03d}.f32"
        cam_path = out / f"camera_{f:03d}.json"

        inputs.write_raw_array(feat_path, features)
        masks = (
            np.stack(mask_list, axis=0)
            if mask_list
            else np.zeros((0, spec.height, spec.width), dtype=bool)
        )
        inputs.write_masks_rle(mask_path, masks)
        cam = CameraFrame(
            depth=depth, fx=fx, fy=fy, cx=cx, cy=cy, pose_world_from_camera=pose
        )
        inputs.write_camera(cam_path, cam, depth_path)
        manifest["frames"].append(
            {
                "features": feat_path.name,
                "masks": mask_path.name,
                "camera": cam_path.name,
                "mask_objects": mask_objects,
            }
        )

    (out / "scene.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest
