"""Procedural iris-like fixtures for demos and end-to-end tests.

Textures combine radial furrow patterns with band-limited noise inside an
annular mask, which is enough structure for the texture-variance fallback
detector and the matcher to produce meaningful genuine/impostor separation.
Nothing here imitates real anatomy; it only has to be deterministic and
texture-rich.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from .detection import DetectionSet, fallback_detect, write_detections
from .imaging import preprocess, save_image, save_mask
from .matching import PipelineConfig


def synthetic_iris(
    seed: int,
    size: int = 320,
    iris_frac: float = 0.40,
    pupil_frac: float = 0.12,
) -> Tuple[np.ndarray, np.ndarray]:
    """Deterministic iris-like texture and annular mask for one identity."""
    rng = np.random.default_rng(seed)
    c = size / 2.0
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r = np.hypot(xx - c, yy - c)
    theta = np.arctan2(yy - c, xx - c)

    fine = ndimage.gaussian_filter(rng.standard_normal((size, size)), 1.5)
    coarse = ndimage.gaussian_filter(rng.standard_normal((size, size)), 6.0)
    n_furrows = int(rng.integers(24, 40))
    phase = rng.uniform(0, 2 * np.pi)
    furrows = np.sin(theta * n_furrows + phase + 4.0 * coarse)
    rings = np.sin(r / (2.0 + 3.0 * rng.random()) + 5.0 * coarse)

    tex = 118.0 + 42.0 * fine / max(1e-9, np.abs(fine).max()) \
        + 28.0 * furrows + 18.0 * rings + 25.0 * coarse / max(1e-9, np.abs(coarse).max())
    img = np.clip(tex, 0, 255).astype(np.uint8)

    iris_r = size * iris_frac
    pupil_r = size * pupil_frac
    wobble = 1.0 + 0.05 * np.sin(theta * 3 + phase)
    mask = (r <= iris_r * wobble) & (r >= pupil_r)
    return img, mask


def perturbed_copy(
    img: np.ndarray,
    mask: np.ndarray,
    seed: int,
    max_rotation_deg: float = 10.0,
    noise_sigma: float = 5.0,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Same identity re-imaged: small in-plane rotation plus sensor noise."""
    rng = np.random.default_rng(seed)
    angle = float(rng.uniform(-max_rotation_deg, max_rotation_deg))
    rot = ndimage.rotate(img.astype(np.float64), angle, reshape=False, order=1, cval=0.0)
    rot_mask = ndimage.rotate(mask.astype(np.uint8), angle, reshape=False, order=0, cval=0) > 0
    noisy = rot + rng.normal(0.0, noise_sigma, img.shape)
    return np.clip(noisy, 0, 255).astype(np.uint8), rot_mask, angle


def detect_on_crop(
    img: np.ndarray,
    mask: np.ndarray,
    k: int = 8,
    window: int = 32,
    config: PipelineConfig = PipelineConfig(),
    image_id: str = "synthetic",
    subject_id: str = "s000",
    eye: str = "L",
    pmi_hours: float = 0.0,
) -> DetectionSet:
    """Run preprocessing then the fallback detector; detections are crop-frame."""
    enhanced, cmask, _ = preprocess(img, mask, config.crop_side, config.clahe)
    return fallback_detect(
        enhanced, cmask, k=k, window=window,
        image_id=image_id, subject_id=subject_id, eye=eye, pmi_hours=pmi_hours,
    )


def write_sample(
    directory,
    prefix: str,
    img: np.ndarray,
    mask: np.ndarray,
    detections: Optional[DetectionSet] = None,
) -> dict:
    """Write image/mask/detections files; returns their relative names."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = {"image": f"{prefix}.png", "mask": f"{prefix}_mask.png"}
    save_image(img, directory / names["image"])
    save_mask(mask, directory / names["mask"])
    if detections is not None:
        names["detections"] = f"{prefix}_det.json"
        write_detections(detections, directory / names["detections"])
    return names
