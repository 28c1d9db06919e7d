"""Text encoders, pluggable by identifier.

Encoders return one unit L2-norm float32 vector per label, with the same
dimension as the chosen backbone. The built-in ``hashproj`` encoder seeds a
Gaussian draw from a hash of the label text: deterministic, distinct for
distinct strings ("chair" vs "a chair" give different vectors), and
dimension-matched by construction. It is NOT language-aligned — pair it
with the built-in backbone for plumbing and contract tests only.
"""

from __future__ import annotations

import hashlib

import numpy as np

from plaf_extract.errors import ModelError


class HashProjectionEncoder:
    name = "hashproj"

    def __init__(self, dim: int):
        self.dim = dim

    def encode(self, labels: list[str]) -> np.ndarray:
        out = np.empty((len(labels), self.dim), dtype=np.float32)
        for i, label in enumerate(labels):
            digest = hashlib.sha256(label.encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            vec = rng.standard_normal(self.dim)
            out[i] = (vec / np.linalg.norm(vec)).astype(np.float32)
        return out


class _OpenClipEncoder:
    name = "openclip"

    def __init__(self, device: str):
        try:
            import open_clip
            import torch
        except ImportError as exc:
            raise ModelError(
                "model load failure for 'openclip': open_clip/torch not installed"
            ) from exc
        try:
            self._model, _, _ = open_clip.create_model_and_transforms("ViT-H-14")
            self._tokenize = open_clip.get_tokenizer("ViT-H-14")
        except Exception as exc:
            raise ModelError(f"model load failure for 'openclip': {exc}") from exc
        self._torch = torch
        self._device = device
        self._model = self._model.to(device).eval()
        self.dim = self._model.text_projection.shape[1]

    def encode(self, labels: list[str]) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            tokens = self._tokenize(labels).to(self._device)
            emb = self._model.encode_text(tokens).float()
            emb = emb / emb.norm(dim=-1, keepdim=True)
        return emb.cpu().numpy().astype(np.float32)


def load_text_encoder(identifier: str, dim: int, device: str = "cpu"):
    if identifier == "hashproj":
        return HashProjectionEncoder(dim=dim)
    if identifier == "openclip":
        return _OpenClipEncoder(device)
    raise ModelError(f"unknown text encoder identifier {identifier!r}")
