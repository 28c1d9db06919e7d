"""Extraction jobs: run the chosen models over images and write the mapping
engine's ingest formats (raw float32 arrays + JSON sidecars, RLE mask
files, text embedding files).

The writers here mirror the consumer's documented on-disk layouts; this
package deliberately does not import the consumer, it only produces files
for it. Every output is written to a temporary name and atomically
renamed, so a crash never leaves a partial file behind.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from plaf_extract.backbones import load_backbone
from plaf_extract.errors import ImageError, ModelError
from plaf_extract.maskers import load_masker
from plaf_extract.textenc import load_text_encoder

logger = logging.getLogger(__name__)


@dataclass
class ExtractionJob:
    images: list[Path]
    out_dir: Path
    labels: list[str] = field(default_factory=list)
    backbone: str = "radio"
    masker: str = "sam"
    text_encoder: str = "openclip"
    device: str = "cpu"
    min_mask_area: int = 32

    def __post_init__(self):
        self.images = [Path(p) for p in self.images]
        self.out_dir = Path(self.out_dir)
        if not self.images:
            raise ImageError("no input images given")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _write_sidecar(payload_path: Path, meta: dict) -> None:
    sidecar = payload_path.with_suffix(".json")
    tmp = sidecar.with_name(sidecar.name + ".tmp")
    tmp.write_text(json.dumps(meta, sort_keys=True) + "\n")
    os.replace(tmp, sidecar)


def write_features(path: Path, feat: np.ndarray, patch: int) -> None:
    h, w, dim = feat.shape
    _atomic_write(path, feat.astype("<f4").tobytes())
    _write_sidecar(path, {"height": h, "width": w, "channels": dim, "patch": patch})


def _rle_runs(mask: np.ndarray) -> np.ndarray:
    flat = mask.reshape(-1)
    change = np.nonzero(flat[1:] != flat[:-1])[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [flat.size]])
    runs = (ends - starts).astype(np.uint32)
    if flat[0]:  # format requires the leading run to be background
        runs = np.concatenate([np.zeros(1, dtype=np.uint32), runs])
    return runs


def write_masks(path: Path, masks: list[np.ndarray], height: int, width: int) -> None:
    parts = []
    for mask in masks:
        runs = _rle_runs(mask.astype(bool))
        parts.append(np.uint32(len(runs)).tobytes())
        parts.append(runs.astype("<u4").tobytes())
    _atomic_write(path, b"".join(parts))
    _write_sidecar(
        path, {"height": height, "width": width, "count": len(masks), "encoding": "rle"}
    )


def write_text_embedding(path: Path, label: str, vec: np.ndarray) -> None:
    _atomic_write(path, vec.astype("<f4").tobytes())
    _write_sidecar(path, {"label": label, "dim": int(vec.size)})


def _load_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageError(f"cannot decode image {path}: {exc}") from exc


def run(job: ExtractionJob) -> dict:
    """Extract features, masks, and text embeddings; returns the manifest."""
    backbone = load_backbone(job.backbone, job.device)
    masker = load_masker(job.masker, job.device, min_area=job.min_mask_area)
    encoder = load_text_encoder(job.text_encoder, dim=backbone.dim, device=job.device)
    if encoder.dim != backbone.dim:
        raise ModelError(
            f"text encoder dim {encoder.dim} does not match backbone dim {backbone.dim}"
        )

    job.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "backbone": backbone.name,
        "masker": masker.name,
        "text_encoder": encoder.name,
        "feature_dim": backbone.dim,
        "patch": backbone.patch,
        "images": [],
        "embeddings": [],
    }

    for i, image_path in enumerate(job.images):
        image = _load_image(image_path)
        h, w = image.shape[:2]
        feat = backbone.extract(image)
        masks = masker.generate(image)

        feat_path = job.out_dir / f"features_{i:03d}.f32"
        mask_path = job.out_dir / f"masks_{i:03d}.rle"
        write_features(feat_path, feat, backbone.patch)
        write_masks(mask_path, masks, h, w)

        coverage = (
            float(np.logical_or.reduce([m for m in masks]).mean()) if masks else 0.0
        )
        logger.info(
            "%s: %d masks, %.1f%% coverage, features %dx%dx%d",
            image_path.name, len(masks), 100 * coverage, *feat.shape,
        )
        manifest["images"].append(
            {
                "source": str(image_path),
                "features": feat_path.name,
                "masks": mask_path.name,
                "mask_count": len(masks),
                "coverage": coverage,
            }
        )

    if job.labels:
        embeddings = encoder.encode(job.labels)
        for label, vec in zip(job.labels, embeddings):
            slug = "".join(c if c.isalnum() else "_" for c in label) or "label"
            emb_path = job.out_dir / f"text_{slug}.f32"
            write_text_embedding(emb_path, label, vec)
            manifest["embeddings"].append({"label": label, "file": emb_path.name})

    manifest_path = job.out_dir / "manifest.json"
    tmp = manifest_path.with_name(manifest_path.name + ".tmp")
    tmp.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    os.replace(tmp, manifest_path)
    return manifest
