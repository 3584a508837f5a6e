"""Binary P6 pixmap I/O."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(2) != b"P6":
            raise ValueError(f"{path}: not a binary P6 pixmap")
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def write_ppm(path, image) -> None:
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("image must be an (H, W, 3) uint8 array")
    Image.fromarray(img, "RGB").save(Path(path), format="PPM")
