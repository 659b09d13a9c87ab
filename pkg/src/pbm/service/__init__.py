from .app import create_app
from .store import Store, StoreError, canonical_json
from .trials import (
    DECISIONS,
    MIN_CONCLUSIVE_ANNOTATIONS,
    NotFoundError,
    TrialService,
    ValidationError,
    derive_rng,
    low_pmi_pool_filter,
    validate_annotation,
)

__all__ = [
    "create_app",
    "Store",
    "StoreError",
    "canonical_json",
    "DECISIONS",
    "MIN_CONCLUSIVE_ANNOTATIONS",
    "NotFoundError",
    "TrialService",
    "ValidationError",
    "derive_rng",
    "low_pmi_pool_filter",
    "validate_annotation",
]
