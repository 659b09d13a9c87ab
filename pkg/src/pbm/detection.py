"""Patch detections: interchange-file parsing, polygon rasterization,
annotation aggregation, patch geometry and a non-learned fallback detector.

Detections normally come from an external instance-segmentation model via the
JSON interchange format (see ``data/detection_schema.json``); the fallback
detector exists so end-to-end tests and demos can run without that model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from jsonschema import Draft202012Validator

from .imaging import check_image, check_mask, mask_centroid

DETECTION_SOURCES = ("model", "human", "fallback")
EYES = ("L", "R")

_SCHEMA_PATH = Path(__file__).parent / "data" / "detection_schema.json"
_validator: Optional[Draft202012Validator] = None


def _schema_validator() -> Draft202012Validator:
    global _validator
    if _validator is None:
        _validator = Draft202012Validator(json.loads(_SCHEMA_PATH.read_text()))
    return _validator


def rasterize_polygon(vertices: np.ndarray, width: int, height: int) -> np.ndarray:
    """Even-odd fill: a pixel belongs to the polygon iff its center (integer
    coordinates) is inside by the crossing-number rule."""
    v = np.asarray(vertices, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise ValueError(f"polygon needs >= 3 (x, y) vertices, got shape {v.shape}")
    mask = np.zeros((height, width), dtype=bool)
    x0 = max(0, int(math.floor(v[:, 0].min())))
    x1 = min(width - 1, int(math.ceil(v[:, 0].max())))
    y0 = max(0, int(math.floor(v[:, 1].min())))
    y1 = min(height - 1, int(math.ceil(v[:, 1].max())))
    if x0 > x1 or y0 > y1:
        return mask
    px = np.arange(x0, x1 + 1, dtype=np.float64)[None, :]
    py = np.arange(y0, y1 + 1, dtype=np.float64)[:, None]
    crossings = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=np.int64)
    n = v.shape[0]
    for i in range(n):
        xa, ya = v[i]
        xb, yb = v[(i + 1) % n]
        if ya == yb:
            continue
        straddle = (ya > py) != (yb > py)
        xc = xa + (py - ya) * (xb - xa) / (yb - ya)
        crossings += straddle & (px < xc)
    mask[y0 : y1 + 1, x0 : x1 + 1] = (crossings & 1).astype(bool)
    return mask


@dataclass
class PatchDetection:
    """One detected feature: polygon outline, rasterized shape, confidence."""

    id: str
    polygon: np.ndarray  # (V, 2) float, crop coordinates
    shape_mask: np.ndarray  # (height, width) bool
    confidence: float
    source: str = "model"

    def __post_init__(self):
        self.polygon = np.asarray(self.polygon, dtype=np.float64)
        if self.polygon.ndim != 2 or self.polygon.shape[1] != 2 or self.polygon.shape[0] < 3:
            raise ValueError(f"detection {self.id}: polygon needs >= 3 vertices")
        self.shape_mask = check_mask(self.shape_mask)
        if not self.shape_mask.any():
            raise ValueError(f"detection {self.id}: shape mask is empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"detection {self.id}: confidence {self.confidence} outside [0, 1]")
        if self.source not in DETECTION_SOURCES:
            raise ValueError(f"detection {self.id}: unknown source {self.source!r}")

    def centroid(self) -> Tuple[float, float]:
        return mask_centroid(self.shape_mask)


@dataclass
class DetectionSet:
    """All detections for one image, plus sample metadata."""

    image_id: str
    subject_id: str
    eye: str
    pmi_hours: float
    width: int
    height: int
    detections: List[PatchDetection] = field(default_factory=list)

    def __post_init__(self):
        if self.eye not in EYES:
            raise ValueError(f"eye must be one of {EYES}, got {self.eye!r}")
        if self.pmi_hours < 0:
            raise ValueError(f"pmi_hours must be >= 0, got {self.pmi_hours}")
        ids = [d.id for d in self.detections]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate detection ids in {self.image_id!r}")

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "subject_id": self.subject_id,
            "eye": self.eye,
            "pmi_hours": self.pmi_hours,
            "width": self.width,
            "height": self.height,
            "detections": [
                {
                    "id": d.id,
                    "polygon": [[float(x), float(y)] for x, y in d.polygon],
                    "confidence": float(d.confidence),
                    "source": d.source,
                }
                for d in self.detections
            ],
        }


def validate_detection_dict(doc: dict) -> List[str]:
    """Schema-check a detection document; returns human-readable problems."""
    problems = [e.message for e in _schema_validator().iter_errors(doc)]
    if problems:
        return problems
    w, h = doc["width"], doc["height"]
    seen = set()
    for det in doc["detections"]:
        if det["id"] in seen:
            problems.append(f"duplicate detection id {det['id']!r}")
        seen.add(det["id"])
        for x, y in det["polygon"]:
            if not (0 <= x <= w and 0 <= y <= h):
                problems.append(f"detection {det['id']!r}: vertex ({x}, {y}) outside [0, {w}] x [0, {h}]")
                break
    return problems


def detection_set_from_dict(doc: dict) -> DetectionSet:
    problems = validate_detection_dict(doc)
    if problems:
        raise ValueError("invalid detection document: " + "; ".join(problems))
    dets = []
    for det in doc["detections"]:
        poly = np.asarray(det["polygon"], dtype=np.float64)
        shape = rasterize_polygon(poly, doc["width"], doc["height"])
        if not shape.any():
            raise ValueError(f"detection {det['id']!r}: polygon rasterizes to an empty mask")
        dets.append(
            PatchDetection(
                id=det["id"],
                polygon=poly,
                shape_mask=shape,
                confidence=float(det["confidence"]),
                source=det["source"],
            )
        )
    return DetectionSet(
        image_id=doc["image_id"],
        subject_id=doc["subject_id"],
        eye=doc["eye"],
        pmi_hours=float(doc["pmi_hours"]),
        width=int(doc["width"]),
        height=int(doc["height"]),
        detections=dets,
    )


def parse_detections(path) -> DetectionSet:
    return detection_set_from_dict(json.loads(Path(path).read_text()))


def write_detections(ds: DetectionSet, path) -> None:
    Path(path).write_text(json.dumps(ds.to_dict(), indent=1, sort_keys=True) + "\n")


def aggregate_annotations(masks: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Deduplicate overlapping annotation masks.

    Repeatedly removes the smaller of any pair whose intersection covers more
    than half of the smaller mask's area (equal areas: the later entry goes),
    until no such pair remains. The survivors are returned in input order and
    are always members of the input list.
    """
    alive = [check_mask(m) for m in masks]
    areas = [int(m.sum()) for m in alive]
    changed = True
    while changed:
        changed = False
        n = len(alive)
        for i in range(n):
            for j in range(i + 1, n):
                inter = int((alive[i] & alive[j]).sum())
                smaller = min(areas[i], areas[j])
                if smaller > 0 and inter > 0.5 * smaller:
                    drop = j if areas[j] <= areas[i] else i
                    del alive[drop], areas[drop]
                    changed = True
                    break
            if changed:
                break
    return alive


def patch_angle(det: PatchDetection, iris_center: Tuple[float, float]) -> float:
    """Angle of the patch centroid about the iris center, degrees in (-180, 180].

    Image coordinates: x right, y down; measured from +x, positive toward +y.
    """
    cx, cy = det.centroid()
    dx, dy = cx - iris_center[0], cy - iris_center[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError(f"detection {det.id}: centroid coincides with the iris center")
    ang = math.degrees(math.atan2(dy, dx))
    if ang <= -180.0:
        ang += 360.0
    return ang


def fallback_detect(
    img: np.ndarray,
    mask: np.ndarray,
    k: int,
    window: int = 32,
    image_id: str = "",
    subject_id: str = "",
    eye: str = "L",
    pmi_hours: float = 0.0,
) -> DetectionSet:
    """Texture-energy sliding-window detector (test/demo stand-in).

    Scores every window (stride window/2) fully inside the mask by intensity
    standard deviation, applies greedy suppression of windows overlapping a
    kept one by more than 30% of their area, and returns the top k as square
    detections with confidence = score / max score.
    """
    img = check_image(img)
    mask = check_mask(mask)
    if img.shape != mask.shape:
        raise ValueError(f"image {img.shape} and mask {mask.shape} dimensions differ")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if window < 4:
        raise ValueError(f"window must be >= 4, got {window}")
    h, w = img.shape
    step = window // 2
    candidates = []  # (score, y, x)
    for y in range(0, h - window + 1, step):
        for x in range(0, w - window + 1, step):
            if mask[y : y + window, x : x + window].all():
                score = float(np.std(img[y : y + window, x : x + window].astype(np.float64)))
                candidates.append((score, y, x))
    if not candidates:
        raise ValueError("no window of the requested size fits fully inside the mask")
    max_score = max(c[0] for c in candidates)
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    kept: List[Tuple[float, int, int]] = []
    area = float(window * window)
    for score, y, x in candidates:
        ok = True
        for _, ky, kx in kept:
            ix = max(0, min(x + window, kx + window) - max(x, kx))
            iy = max(0, min(y + window, ky + window) - max(y, ky))
            if ix * iy > 0.30 * area:
                ok = False
                break
        if ok:
            kept.append((score, y, x))
            if len(kept) == k:
                break
    detections = []
    for idx, (score, y, x) in enumerate(kept):
        poly = np.array(
            [[x, y], [x + window, y], [x + window, y + window], [x, y + window]],
            dtype=np.float64,
        )
        detections.append(
            PatchDetection(
                id=f"f{idx:03d}",
                polygon=poly,
                shape_mask=rasterize_polygon(poly, w, h),
                confidence=0.0 if max_score == 0.0 else score / max_score,
                source="fallback",
            )
        )
    return DetectionSet(
        image_id=image_id,
        subject_id=subject_id,
        eye=eye,
        pmi_hours=pmi_hours,
        width=w,
        height=h,
        detections=detections,
    )
