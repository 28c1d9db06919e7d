import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def fixture_images(tmp_path_factory):
    """Three deterministic images: boxes on a gradient (VGA-sized, so the
    patch arithmetic is visible), a blank frame, and noise blocks."""
    root = tmp_path_factory.mktemp("images")

    grad = np.zeros((480, 640, 3), dtype=np.uint8)
    grad[..., 0] = np.linspace(0, 255, 640, dtype=np.uint8)[None, :]
    grad[..., 1] = np.linspace(0, 255, 480, dtype=np.uint8)[:, None]
    grad[..., 2] = 40
    grad[80:240, 100:260] = [220, 40, 40]
    grad[260:420, 350:560] = [40, 200, 60]
    Image.fromarray(grad).save(root / "boxes.png")

    blank = np.full((64, 64, 3), 128, dtype=np.uint8)
    Image.fromarray(blank).save(root / "blank.png")

    rng = np.random.default_rng(77)
    noise = np.repeat(
        np.repeat(rng.integers(0, 256, (6, 8, 3), dtype=np.uint8), 16, axis=0), 16, axis=1
    )
    Image.fromarray(noise).save(root / "noise.png")

    return root
