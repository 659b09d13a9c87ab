"""Patch-based iris matching with human-readable evidence.

Pipeline: preprocess (mask, crop, CLAHE) -> encode binary texture codes ->
describe detected patches -> angle-gated exhaustive alignment matching ->
greedy one-to-one assignment -> mean-of-best-pairs score. Companion modules
cover evaluation metrics, SVG evidence rendering, and the two-step human
annotation trial service.
"""

from .bsif import (
    FilterBank,
    IrisCode,
    PatchCode,
    UnusablePatchError,
    encode,
    extract_patch_code,
    hamming_masked,
    load_filter_bank,
    save_filter_bank,
    synthetic_filter_bank,
)
from .detection import (
    DetectionSet,
    PatchDetection,
    aggregate_annotations,
    fallback_detect,
    parse_detections,
    patch_angle,
    rasterize_polygon,
    write_detections,
)
from .evaluation import RocCurve, ScoreRecord, ScoreSet, auc, dprime, eer, roc
from .imaging import ClaheParams, apply_mask, clahe, crop_to_iris, mask_centroid, preprocess
from .matching import (
    ComparisonResult,
    MatchPair,
    PatchDescriptor,
    PipelineConfig,
    angular_gate,
    best_alignment_distance,
    compare,
    comparison_score,
    enumerate_valid_pairs,
    greedy_assign,
)

__version__ = "0.1.0"
