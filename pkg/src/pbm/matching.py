"""Patch-based comparison: angle gating, exhaustive alignment search, greedy
one-to-one assignment and the mean-of-best-pairs score.

Scores live in [0, 1] with lower = more similar; a comparison that yields no
acceptable feature pair reports the chance-level sentinel 0.5 together with an
explicit ``no_evidence`` flag. All functions are pure; candidate alignments
are merged in sorted order so any parallel evaluation would give identical
results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import bsif
from .bsif import FilterBank, IrisCode, PatchCode, UnusablePatchError
from .detection import DetectionSet, patch_angle
from .imaging import ClaheParams, mask_centroid, preprocess

NO_EVIDENCE_SCORE = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    """Thresholds echoed into every result for reproducibility."""

    crop_side: int = 256
    clahe: ClaheParams = ClaheParams()
    angle_tol: float = 20.0
    max_pairs: int = 5
    overlap_frac: float = 0.5
    top_n_detections: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "crop_side": self.crop_side,
            "clahe": self.clahe.to_dict(),
            "angle_tol": self.angle_tol,
            "max_pairs": self.max_pairs,
            "overlap_frac": self.overlap_frac,
            "top_n_detections": self.top_n_detections,
        }


@dataclass
class PatchDescriptor:
    """A detected feature ready for matching."""

    id: str
    code: PatchCode
    centroid: Tuple[float, float]  # usable-pixel centroid, crop coordinates
    angle: float  # degrees in (-180, 180], about the iris center
    area: int  # usable pixels
    polygon: Optional[np.ndarray] = None  # outline carried for rendering


@dataclass
class MatchPair:
    id_a: str
    id_b: str
    distance: float
    offset: Tuple[int, int]
    overlap_area: int
    centroid_a: Optional[Tuple[float, float]] = None
    centroid_b: Optional[Tuple[float, float]] = None
    polygon_a: Optional[List[List[float]]] = None
    polygon_b: Optional[List[List[float]]] = None

    def to_dict(self) -> dict:
        return {
            "id_a": self.id_a,
            "id_b": self.id_b,
            "distance": self.distance,
            "offset": list(self.offset),
            "overlap_area": self.overlap_area,
            "centroid_a": list(self.centroid_a) if self.centroid_a else None,
            "centroid_b": list(self.centroid_b) if self.centroid_b else None,
            "polygon_a": self.polygon_a,
            "polygon_b": self.polygon_b,
        }

    @staticmethod
    def from_dict(d: dict) -> "MatchPair":
        return MatchPair(
            id_a=d["id_a"],
            id_b=d["id_b"],
            distance=float(d["distance"]),
            offset=tuple(d["offset"]),
            overlap_area=int(d["overlap_area"]),
            centroid_a=tuple(d["centroid_a"]) if d.get("centroid_a") else None,
            centroid_b=tuple(d["centroid_b"]) if d.get("centroid_b") else None,
            polygon_a=d.get("polygon_a"),
            polygon_b=d.get("polygon_b"),
        )


@dataclass
class ComparisonResult:
    score: float
    pairs: List[MatchPair] = field(default_factory=list)
    n_candidates: int = 0
    no_evidence: bool = False
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "pairs": [p.to_dict() for p in self.pairs],
            "n_candidates": self.n_candidates,
            "no_evidence": self.no_evidence,
            "params": self.params,
        }

    @staticmethod
    def from_dict(d: dict) -> "ComparisonResult":
        return ComparisonResult(
            score=float(d["score"]),
            pairs=[MatchPair.from_dict(p) for p in d["pairs"]],
            n_candidates=int(d["n_candidates"]),
            no_evidence=bool(d["no_evidence"]),
            params=d.get("params", {}),
        )


def angle_difference(a: float, b: float) -> float:
    """Circular angular difference in degrees, in [0, 180]."""
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


def angular_gate(a: PatchDescriptor, b: PatchDescriptor, tol: float = 20.0) -> bool:
    """True iff the two patches sit within ``tol`` degrees of rotation (inclusive)."""
    if tol < 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    return angle_difference(a.angle, b.angle) <= tol


def best_alignment_distance(
    a: PatchDescriptor, b: PatchDescriptor, overlap_frac: float = 0.5
) -> Optional[MatchPair]:
    """Minimum masked Hamming distance over every integer translation of b.

    Only translations whose usability overlap exceeds ``overlap_frac`` of the
    smaller patch's area qualify; returns None (rejection) when no translation
    does. Equal distances resolve to the lexicographically smallest (dy, dx),
    and the winning distance is recomputed through the packed-word kernel.
    """
    total_diff, overlap = bsif.alignment_maps(a.code, b.code)
    required = overlap_frac * min(a.area, b.area)
    valid = overlap > required
    if not valid.any():
        return None
    dist = np.full(overlap.shape, np.inf)
    dist[valid] = total_diff[valid] / (a.code.n_planes * overlap[valid])
    i, j = np.argwhere(dist == dist.min())[0]
    offset = (int(j) - (b.code.width - 1), int(i) - (b.code.height - 1))
    distance, overlap_area = bsif.hamming_masked(a.code, b.code, offset)
    return MatchPair(
        id_a=a.id,
        id_b=b.id,
        distance=distance,
        offset=offset,
        overlap_area=overlap_area,
        centroid_a=a.centroid,
        centroid_b=b.centroid,
        polygon_a=None if a.polygon is None else [[float(x), float(y)] for x, y in a.polygon],
        polygon_b=None if b.polygon is None else [[float(x), float(y)] for x, y in b.polygon],
    )


def enumerate_valid_pairs(
    descriptors_a: Sequence[PatchDescriptor],
    descriptors_b: Sequence[PatchDescriptor],
    tol: float = 20.0,
    overlap_frac: float = 0.5,
) -> List[MatchPair]:
    """All angle-gated pairs that survive the alignment overlap constraint."""
    pairs = []
    for a in descriptors_a:
        for b in descriptors_b:
            if not angular_gate(a, b, tol):
                continue
            pair = best_alignment_distance(a, b, overlap_frac)
            if pair is not None:
                pairs.append(pair)
    return pairs


def greedy_assign(pairs: Sequence[MatchPair]) -> List[MatchPair]:
    """One-to-one reduction: ascending-distance scan, each feature used once.

    Ties order by (id_a, id_b) so the outcome is platform-independent.
    """
    used_a, used_b = set(), set()
    kept = []
    for pair in sorted(pairs, key=lambda p: (p.distance, p.id_a, p.id_b)):
        if pair.id_a in used_a or pair.id_b in used_b:
            continue
        used_a.add(pair.id_a)
        used_b.add(pair.id_b)
        kept.append(pair)
    return kept


def comparison_score(
    assigned: Sequence[MatchPair],
    max_pairs: int = 5,
    n_candidates: int = 0,
    params: Optional[dict] = None,
) -> ComparisonResult:
    """Mean distance of the best ``max_pairs`` assigned pairs (all, if fewer).

    No assigned pairs at all means the comparison carries no evidence; the
    score is then the chance-level sentinel 0.5.
    """
    ranked = sorted(assigned, key=lambda p: (p.distance, p.id_a, p.id_b))[:max_pairs]
    if not ranked:
        return ComparisonResult(
            score=NO_EVIDENCE_SCORE,
            pairs=[],
            n_candidates=n_candidates,
            no_evidence=True,
            params=params or {},
        )
    score = sum(p.distance for p in ranked) / len(ranked)
    return ComparisonResult(
        score=score,
        pairs=ranked,
        n_candidates=n_candidates,
        no_evidence=False,
        params=params or {},
    )


def build_descriptors(
    code: IrisCode,
    detections: DetectionSet,
    iris_center: Tuple[float, float],
    top_n: Optional[int] = None,
) -> List[PatchDescriptor]:
    """Turn detections into matchable descriptors; unusable patches are dropped.

    A patch is unusable when its shape has no pixel on the valid code region
    or its centroid coincides with the iris center (angle undefined).
    """
    dets = list(detections.detections)
    if top_n is not None:
        dets.sort(key=lambda d: (-d.confidence, d.id))
        dets = dets[:top_n]
    out = []
    for det in dets:
        try:
            patch = bsif.extract_patch_code(code, det.shape_mask)
            angle = patch_angle(det, iris_center)
        except (UnusablePatchError, ValueError):
            continue
        ys, xs = np.nonzero(patch.usable)
        centroid = (float(xs.mean()) + patch.origin[0], float(ys.mean()) + patch.origin[1])
        out.append(
            PatchDescriptor(
                id=det.id,
                code=patch,
                centroid=centroid,
                angle=angle,
                area=patch.area,
                polygon=det.polygon,
            )
        )
    return out


def _result_params(config: PipelineConfig, bank: FilterBank) -> dict:
    params = config.to_dict()
    params["n_filters"] = bank.n_filters
    params["filter_size"] = bank.size
    return params


def compare(
    img_a: np.ndarray,
    mask_a: np.ndarray,
    det_a: DetectionSet,
    img_b: np.ndarray,
    mask_b: np.ndarray,
    det_b: DetectionSet,
    bank: FilterBank,
    config: PipelineConfig = PipelineConfig(),
) -> ComparisonResult:
    """Full pairwise comparison from raw images, masks and detections.

    Detections must be expressed in crop coordinates of the same preprocessing
    (their width/height fields are checked against the configured crop side).
    """
    params = _result_params(config, bank)
    for name, ds in (("A", det_a), ("B", det_b)):
        if (ds.width, ds.height) != (config.crop_side, config.crop_side):
            raise ValueError(
                f"detections {name} are on a {ds.width}x{ds.height} frame, "
                f"expected {config.crop_side}x{config.crop_side}"
            )

    descriptors = []
    for img, mask, dets in ((img_a, mask_a, det_a), (img_b, mask_b, det_b)):
        enhanced, cmask, _ = preprocess(img, mask, config.crop_side, config.clahe)
        if not cmask.any():
            descriptors.append([])
            continue
        code = bsif.encode(enhanced, cmask, bank)
        center = mask_centroid(cmask)
        descriptors.append(build_descriptors(code, dets, center, config.top_n_detections))
    if not descriptors[0] or not descriptors[1]:
        return ComparisonResult(
            score=NO_EVIDENCE_SCORE, pairs=[], n_candidates=0, no_evidence=True, params=params
        )
    candidates = enumerate_valid_pairs(
        descriptors[0], descriptors[1], config.angle_tol, config.overlap_frac
    )
    assigned = greedy_assign(candidates)
    return comparison_score(assigned, config.max_pairs, len(candidates), params)
