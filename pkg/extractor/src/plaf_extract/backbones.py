"""Dense feature backbones, pluggable by identifier.

A backbone turns an RGB image (H, W, 3) uint8 into a patch-grid feature map
(h, w, C) float32 with h = H // patch, w = W // patch. The built-in
``colorstat`` backbone needs no weights or network access and is fully
deterministic: per-patch color statistics pushed through a fixed random
projection. Heavyweight identifiers load real models lazily and raise
ModelError with a clear message when they are not available locally.
"""

from __future__ import annotations

import numpy as np

from plaf_extract.errors import ModelError


class ColorStatBackbone:
    """Per-patch color statistics -> fixed random projection -> tanh.

    Stats per patch: mean/std of RGB, mean of RG/GB/RB products, and the
    normalized patch position — 12 numbers, projected to ``dim`` with a
    seed-fixed Gaussian matrix. Nothing is learned; the point is a
    deterministic, dimension-correct stand-in with mild locality.
    """

    def __init__(self, dim: int = 64, patch: int = 16, seed: int = 1234):
        self.name = f"colorstat-{dim}"
        self.dim = dim
        self.patch = patch
        rng = np.random.default_rng(seed)
        self._proj = rng.standard_normal((12, dim)) / np.sqrt(12.0)

    def extract(self, image: np.ndarray) -> np.ndarray:
        p = self.patch
        h, w = image.shape[0] // p, image.shape[1] // p
        if h < 1 or w < 1:
            raise ModelError(f"image smaller than one {p}x{p} patch")
        rgb = image[: h * p, : w * p, :3].astype(np.float64) / 255.0
        patches = rgb.reshape(h, p, w, p, 3).transpose(0, 2, 1, 3, 4).reshape(h, w, p * p, 3)
        mean = patches.mean(axis=2)
        std = patches.std(axis=2)
        cross = np.stack(
            [
                (patches[..., 0] * patches[..., 1]).mean(axis=2),
                (patches[..., 1] * patches[..., 2]).mean(axis=2),
                (patches[..., 0] * patches[..., 2]).mean(axis=2),
            ],
            axis=-1,
        )
        ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        pos = np.stack(
            [ys / max(h - 1, 1), xs / max(w - 1, 1), np.full((h, w), 0.5)], axis=-1
        )
        stats = np.concatenate([mean, std, cross, pos], axis=-1)  # (h, w, 12)
        return np.tanh(stats @ self._proj).astype(np.float32)


class _TorchHubBackbone:
    """Adapter for dense ViT-style backbones published on torch hub."""

    def __init__(self, repo: str, entry: str, name: str, patch: int, device: str):
        self.name = name
        self.patch = patch
        try:
            import torch
        except ImportError as exc:
            raise ModelError(f"model load failure for {name!r}: torch is not installed") from exc
        try:
            self._model = torch.hub.load(repo, entry, progress=False).to(device).eval()
        except Exception as exc:
            raise ModelError(
                f"model load failure for {name!r}: {exc} (weights must be available locally)"
            ) from exc
        self._torch = torch
        self._device = device
        self.dim = getattr(self._model, "embed_dim", None) or getattr(
            getattr(self._model, "model", None), "embed_dim", 0
        )

    def extract(self, image: np.ndarray) -> np.ndarray:
        torch = self._torch
        h, w = image.shape[0] // self.patch, image.shape[1] // self.patch
        tensor = (
            torch.from_numpy(image[: h * self.patch, : w * self.patch, :3].copy())
            .permute(2, 0, 1)
            .unsqueeze(0)
            .float()
            .div_(255.0)
            .to(self._device)
        )
        with torch.no_grad():
            _, features = self._model(tensor)
        feat = features.reshape(1, h, w, -1)[0].cpu().numpy().astype(np.float32)
        if not self.dim:
            self.dim = feat.shape[-1]
        return feat


def load_backbone(identifier: str, device: str = "cpu"):
    if identifier.startswith("colorstat"):
        dim = int(identifier.split("-", 1)[1]) if "-" in identifier else 64
        return ColorStatBackbone(dim=dim)
    if identifier == "radio":
        return _TorchHubBackbone("NVlabs/RADIO", "radio_model", "radio", patch=16, device=device)
    raise ModelError(f"unknown backbone identifier {identifier!r}")
