"""8-bit RGB raster carrier plus the sampling primitive used by all warps.

Pixel-center convention: pixel (i, j) spans the unit square whose center is
the continuous coordinate (i + 0.5, j + 0.5), x along columns, y along rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["Raster", "bilinear_sample"]


@dataclass
class Raster:
    """Rectangular 8-bit RGB pixel grid; pixels has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) pixels, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("raster must be non-empty")
        if arr.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {arr.dtype}")
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def filled(cls, width: int, height: int, color=(0, 0, 0)) -> "Raster":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:] = np.asarray(color, dtype=np.uint8)
        return cls(px)

    @classmethod
    def from_file(cls, path: str | Path) -> "Raster":
        with Image.open(path) as img:
            return cls(np.asarray(img.convert("RGB"), dtype=np.uint8))

    def save(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.pixels, mode="RGB").save(path)

    def copy(self) -> "Raster":
        return Raster(self.pixels.copy())


def bilinear_sample(pixels: np.ndarray, u, v) -> np.ndarray:
    """Sample an RGB array at continuous coordinates (u, v); black outside.

    u and v are arrays in the pixel-center convention. Samples inside
    [0, width] x [0, height] interpolate the four surrounding pixel centers
    (edge pixels replicate across the outer half-pixel ring); anything
    outside returns (0, 0, 0). Returns float64 with shape u.shape + (3,).
    """
    h, w = pixels.shape[:2]
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore"):
        inside = (u >= 0.0) & (u <= w) & (v >= 0.0) & (v <= h)
    x = np.clip(np.where(inside, u, 0.0) - 0.5, 0.0, w - 1.0)
    y = np.clip(np.where(inside, v, 0.0) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    src = pixels.astype(np.float64)
    top = (1.0 - fx) * src[y0, x0] + fx * src[y0, x1]
    bot = (1.0 - fx) * src[y1, x0] + fx * src[y1, x1]
    out = (1.0 - fy) * top + fy * bot
    out[~inside] = 0.0
    return out
