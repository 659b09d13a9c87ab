"""Image preprocessing: masking, iris-centered cropping and CLAHE enhancement.

Images are 2-D ``uint8`` arrays, masks are 2-D ``bool`` arrays of the same
shape (True = usable iris texture). All functions are pure and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import cv2
import numpy as np
from PIL import Image


@dataclass(frozen=True)
class ClaheParams:
    """Tile grid and clip limit for contrast-limited adaptive equalization."""

    tile_grid: Tuple[int, int] = (8, 8)
    clip_limit: float = 2.0

    def __post_init__(self):
        if self.tile_grid[0] < 1 or self.tile_grid[1] < 1:
            raise ValueError(f"tile_grid components must be >= 1, got {self.tile_grid}")
        if self.clip_limit < 1.0:
            raise ValueError(f"clip_limit must be >= 1.0, got {self.clip_limit}")

    def to_dict(self) -> dict:
        return {"tile_grid": list(self.tile_grid), "clip_limit": self.clip_limit}


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"expected 2-D uint8 image, got shape {img.shape} dtype {img.dtype}")
    if img.size == 0:
        raise ValueError("empty image")
    return img


def check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected 2-D mask, got shape {mask.shape}")
    if mask.dtype != bool:
        mask = mask != 0
    if mask.size == 0:
        raise ValueError("empty mask")
    return mask


def load_image(path) -> np.ndarray:
    """Load an 8-bit grayscale PNG (other modes are converted to grayscale)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def load_mask(path) -> np.ndarray:
    """Load a mask PNG; any nonzero pixel counts as iris."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) != 0


def save_image(img: np.ndarray, path) -> None:
    Image.fromarray(check_image(img), mode="L").save(Path(path), format="PNG")


def save_mask(mask: np.ndarray, path) -> None:
    arr = (check_mask(mask).astype(np.uint8)) * 255
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")


def apply_mask(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero out every pixel outside the mask. Idempotent."""
    img = check_image(img)
    mask = check_mask(mask)
    if img.shape != mask.shape:
        raise ValueError(f"image {img.shape} and mask {mask.shape} dimensions differ")
    return np.where(mask, img, np.uint8(0))


def mask_centroid(mask: np.ndarray) -> Tuple[float, float]:
    """Arithmetic mean (x, y) of set-pixel centers. Raises on an empty mask."""
    mask = check_mask(mask)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise ValueError("mask has no set pixels")
    return float(xs.mean()), float(ys.mean())


def crop_to_iris(
    img: np.ndarray, mask: np.ndarray, side: int = 256
) -> Tuple[np.ndarray, np.ndarray, Tuple[int, int]]:
    """Crop a side x side window centered on the rounded mask centroid.

    Regions outside the source image are zero-padded (post-mortem irises often
    sit near the frame edge). Returns (cropped image, cropped mask, offset)
    where ``offset`` is the (x, y) of the window origin in source coordinates;
    subtract it to bring source-frame geometry into crop coordinates.
    """
    img = check_image(img)
    mask = check_mask(mask)
    if img.shape != mask.shape:
        raise ValueError(f"image {img.shape} and mask {mask.shape} dimensions differ")
    if side <= 0:
        raise ValueError(f"side must be positive, got {side}")
    cx, cy = mask_centroid(mask)
    # round-half-up so a pixel-grid-symmetric centroid yields the identity crop
    x0 = int(np.floor(cx + 0.5)) - side // 2
    y0 = int(np.floor(cy + 0.5)) - side // 2

    out_img = np.zeros((side, side), dtype=np.uint8)
    out_mask = np.zeros((side, side), dtype=bool)
    h, w = img.shape
    sx0, sx1 = max(x0, 0), min(x0 + side, w)
    sy0, sy1 = max(y0, 0), min(y0 + side, h)
    if sx0 < sx1 and sy0 < sy1:
        out_img[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = img[sy0:sy1, sx0:sx1]
        out_mask[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = mask[sy0:sy1, sx0:sx1]
    return out_img, out_mask, (x0, y0)


def clahe(img: np.ndarray, params: ClaheParams = ClaheParams()) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization (deterministic, uint8)."""
    img = check_image(img)
    op = cv2.createCLAHE(clipLimit=params.clip_limit, tileGridSize=tuple(params.tile_grid))
    return op.apply(img)


def preprocess(
    img: np.ndarray,
    mask: np.ndarray,
    side: int = 256,
    params: ClaheParams = ClaheParams(),
) -> Tuple[np.ndarray, np.ndarray, Tuple[int, int]]:
    """Full preprocessing chain: mask -> crop -> CLAHE.

    CLAHE runs after masking and cropping, so its tile statistics include the
    zeroed background. Returns (enhanced crop, cropped mask, crop offset).
    """
    masked = apply_mask(img, mask)
    cropped, cmask, offset = crop_to_iris(masked, mask, side)
    return clahe(cropped, params), cmask, offset
