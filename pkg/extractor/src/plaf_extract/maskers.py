"""Class-agnostic mask generators, pluggable by identifier.

The built-in ``colorcc`` masker quantizes colors and takes connected
components — crude, but deterministic, label-free, and shaped exactly like
a real mask generator's output (a list of binary rasters, overlaps
allowed). The ``sam`` identifier adapts a promptable segmenter when its
package and weights are installed locally.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from plaf_extract.errors import ModelError


class ColorComponentMasker:
    """Connected components of a color-quantized image.

    ``levels`` controls quantization granularity; components smaller than
    ``min_area`` pixels are dropped. A constant image yields exactly one
    mask covering everything.
    """

    name = "colorcc"

    def __init__(self, levels: int = 4, min_area: int = 32):
        self.levels = levels
        self.min_area = min_area

    def generate(self, image: np.ndarray) -> list[np.ndarray]:
        rgb = image[..., :3].astype(np.int64)
        q = np.minimum(rgb * self.levels // 256, self.levels - 1)
        bins = (q[..., 0] * self.levels + q[..., 1]) * self.levels + q[..., 2]
        masks = []
        for value in np.unique(bins):
            labels, count = ndimage.label(bins == value)
            for comp in range(1, count + 1):
                mask = labels == comp
                if int(mask.sum()) >= self.min_area:
                    masks.append(mask)
        return masks


class _SamMasker:
    name = "sam"

    def __init__(self, device: str):
        try:
            from segment_anything import SamAutomaticMaskGenerator, sam_model_registry
        except ImportError as exc:
            raise ModelError(
                "model load failure for 'sam': segment_anything is not installed"
            ) from exc
        try:
            sam = sam_model_registry["vit_h"]()
            self._generator = SamAutomaticMaskGenerator(sam.to(device))
        except Exception as exc:
            raise ModelError(f"model load failure for 'sam': {exc}") from exc

    def generate(self, image: np.ndarray) -> list[np.ndarray]:
        records = self._generator.generate(image[..., :3])
        return [rec["segmentation"].astype(bool) for rec in records]


def load_masker(identifier: str, device: str = "cpu", min_area: int = 32):
    if identifier == "colorcc":
        return ColorComponentMasker(min_area=min_area)
    if identifier == "sam":
        return _SamMasker(device)
    raise ModelError(f"unknown masker identifier {identifier!r}")
