"""Trial workflow: planned evaluation trials, verification trials seeded with
prior annotations, decision validation, and persisted comparisons.

Every randomized choice (plan order, shown-annotation subset) is made once,
with an RNG derived from the service seed, and recorded in the log, so replay
never re-randomizes.
"""

from __future__ import annotations

import hashlib
import random
from pathlib import Path
from typing import List, Optional

from .. import evaluation, matching, report
from ..bsif import FilterBank
from ..detection import parse_detections
from ..imaging import load_image, load_mask, preprocess
from .store import Store, canonical_json

DECISIONS = ("same_eye", "different_eyes", "dont_know")
MIN_CONCLUSIVE_ANNOTATIONS = 5
PLAN_SIZE_PER_CLASS = 10
DEFAULT_LOW_PMI_HOURS = 72.0


class ValidationError(ValueError):
    """Client-side mistake: nothing was persisted."""


class NotFoundError(KeyError):
    pass


def derive_rng(seed: int, *tags) -> random.Random:
    material = "|".join([str(seed)] + [str(t) for t in tags])
    digest = hashlib.sha256(material.encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def validate_annotation(ann: dict) -> None:
    if not isinstance(ann, dict):
        raise ValidationError("annotation must be an object")
    role = ann.get("role")
    if role not in ("matching", "nonmatching"):
        raise ValidationError(f"annotation role must be matching or nonmatching, got {role!r}")
    pa, pb = ann.get("polygon_a"), ann.get("polygon_b")

    def check_poly(p, name):
        if not isinstance(p, list) or len(p) < 3:
            raise ValidationError(f"{name} must be a polygon with >= 3 vertices")
        for v in p:
            if not (isinstance(v, list) and len(v) == 2):
                raise ValidationError(f"{name} vertices must be [x, y] pairs")

    if role == "matching":
        if pa is None or pb is None:
            raise ValidationError("matching annotations link one polygon on each image")
        check_poly(pa, "polygon_a")
        check_poly(pb, "polygon_b")
    else:
        if (pa is None) == (pb is None):
            raise ValidationError("nonmatching annotations carry exactly one polygon")
        check_poly(pa if pa is not None else pb, "polygon")


def pair_label(pair: dict) -> str:
    a, b = pair["a"], pair["b"]
    same = a["subject_id"] == b["subject_id"] and a["eye"] == b["eye"]
    return "genuine" if same else "impostor"


def low_pmi_pool_filter(pairs: List[dict], threshold_hours: float) -> List[dict]:
    """Keep pairs where at least one side is from the low-PMI range."""
    return [
        p for p in pairs
        if min(p["a"]["pmi_hours"], p["b"]["pmi_hours"]) <= threshold_hours
    ]


class TrialService:
    def __init__(
        self,
        store: Store,
        data_dir,
        bank: FilterBank,
        seed: int = 0,
        config: matching.PipelineConfig = matching.PipelineConfig(),
        low_pmi_hours: float = DEFAULT_LOW_PMI_HOURS,
        pool_filter=None,
    ):
        self.store = store
        self.data_dir = Path(data_dir)
        self.bank = bank
        self.seed = seed
        self.config = config
        self.low_pmi_hours = low_pmi_hours
        self.pool_filter = pool_filter or (
            lambda pairs: low_pmi_pool_filter(pairs, self.low_pmi_hours)
        )

    # -- pairs ----------------------------------------------------------------

    def register_pair(self, payload: dict) -> dict:
        for key in ("pair_id", "a", "b"):
            if key not in payload:
                raise ValidationError(f"missing field {key!r}")
        if self.store.pair(payload["pair_id"]) is not None:
            raise ValidationError(f"pair {payload['pair_id']!r} already registered")
        for side in ("a", "b"):
            info = payload[side]
            for key in ("subject_id", "eye", "pmi_hours", "image", "mask", "detections"):
                if key not in info:
                    raise ValidationError(f"side {side!r} missing field {key!r}")
            if info["eye"] not in ("L", "R"):
                raise ValidationError(f"side {side!r}: eye must be L or R")
            if info["pmi_hours"] < 0:
                raise ValidationError(f"side {side!r}: pmi_hours must be >= 0")
        pair = dict(payload)
        pair["label"] = pair_label(payload)
        self.store.append({"event": "pair_registered", "ts": self.store.now(), "pair": pair})
        return pair

    # -- planning ---------------------------------------------------------------

    def plan_trials(self, annotator_id: str) -> dict:
        existing = self.store.index["plans"].get(annotator_id)
        if existing is not None:
            return existing
        pool = self.pool_filter(sorted(self.store.index["pairs"].values(),
                                       key=lambda p: p["pair_id"]))
        genuine = [p["pair_id"] for p in pool if p["label"] == "genuine"]
        impostor = [p["pair_id"] for p in pool if p["label"] == "impostor"]
        if len(genuine) < PLAN_SIZE_PER_CLASS or len(impostor) < PLAN_SIZE_PER_CLASS:
            raise ValidationError(
                f"pair pool needs >= {PLAN_SIZE_PER_CLASS} genuine and "
                f">= {PLAN_SIZE_PER_CLASS} impostor pairs "
                f"(have {len(genuine)}/{len(impostor)})"
            )
        rng = derive_rng(self.seed, "plan", annotator_id)
        chosen = rng.sample(genuine, PLAN_SIZE_PER_CLASS) + rng.sample(
            impostor, PLAN_SIZE_PER_CLASS
        )
        rng.shuffle(chosen)
        plan = {"annotator_id": annotator_id, "pairs": chosen}
        self.store.append({"event": "plan_created", "ts": self.store.now(), "plan": plan})
        return plan

    # -- trials -------------------------------------------------------------------

    def _trials_of(self, annotator_id: str, step: str) -> List[dict]:
        return [
            t
            for t in self.store.index["trials"].values()
            if t["annotator_id"] == annotator_id and t["step"] == step
        ]

    def next_evaluation_trial(self, annotator_id: str) -> dict:
        plan = self.plan_trials(annotator_id)
        seen = {t["pair_id"] for t in self._trials_of(annotator_id, "evaluation")}
        open_trials = [t for t in self._trials_of(annotator_id, "evaluation")
                       if t["status"] == "open"]
        if open_trials:
            return self._trial_payload(open_trials[0])
        pending = [p for p in plan["pairs"] if p not in seen]
        if not pending:
            raise NotFoundError(f"evaluation plan for {annotator_id!r} is exhausted")
        trial = {
            "trial_id": self.store.next_trial_id(),
            "step": "evaluation",
            "pair_id": pending[0],
            "annotator_id": annotator_id,
            "status": "open",
            "decision": None,
            "annotations": [],
            "prior_trial": None,
            "shown_prior_annotations": None,
            "opened_at": self.store.now(),
            "closed_at": None,
        }
        self.store.append({"event": "trial_opened", "ts": trial["opened_at"], "trial": trial})
        return self._trial_payload(trial)

    def next_verification_trial(self, annotator_id: str) -> dict:
        open_trials = [t for t in self._trials_of(annotator_id, "verification")
                       if t["status"] == "open"]
        if open_trials:
            return self._trial_payload(open_trials[0])
        verified = self.store.index["verified"]
        candidates = sorted(
            t["trial_id"]
            for t in self.store.index["trials"].values()
            if t["step"] == "evaluation"
            and t["status"] == "closed"
            and t["trial_id"] not in verified
            and t["annotator_id"] != annotator_id
        )
        if not candidates:
            raise NotFoundError("no completed, unverified evaluation trial available")
        prior = self.store.trial(candidates[0])
        rng = derive_rng(self.seed, "verify", prior["trial_id"])
        n_prior = len(prior["annotations"])
        n_show = rng.randint(1, n_prior)
        shown = sorted(rng.sample(range(n_prior), n_show))
        trial = {
            "trial_id": self.store.next_trial_id(),
            "step": "verification",
            "pair_id": prior["pair_id"],
            "annotator_id": annotator_id,
            "status": "open",
            "decision": None,
            "annotations": [],
            "prior_trial": prior["trial_id"],
            "shown_prior_annotations": shown,
            "opened_at": self.store.now(),
            "closed_at": None,
        }
        self.store.append({"event": "trial_opened", "ts": trial["opened_at"], "trial": trial})
        return self._trial_payload(trial)

    def _trial_payload(self, trial: dict) -> dict:
        payload = dict(trial)
        pair = self.store.pair(trial["pair_id"])
        payload["pair"] = {
            "pair_id": pair["pair_id"],
            "a": {k: pair["a"][k] for k in ("image", "mask")},
            "b": {k: pair["b"][k] for k in ("image", "mask")},
        }
        if trial["prior_trial"] is not None:
            prior = self.store.trial(trial["prior_trial"])
            payload["prior"] = {
                "trial_id": prior["trial_id"],
                "decision": prior["decision"],
                "annotations": [
                    prior["annotations"][i] for i in trial["shown_prior_annotations"]
                ],
                "annotation_indices": trial["shown_prior_annotations"],
            }
        return payload

    def submit_decision(
        self, trial_id: str, decision: str, annotations: List[dict],
        annotator_id: Optional[str] = None,
    ) -> dict:
        trial = self.store.trial(trial_id)
        if trial is None:
            raise NotFoundError(f"unknown trial {trial_id!r}")
        if trial["status"] != "open":
            raise ValidationError(f"trial {trial_id!r} was already submitted")
        if annotator_id is not None and trial["annotator_id"] != annotator_id:
            raise ValidationError(f"trial {trial_id!r} belongs to another annotator")
        if decision not in DECISIONS:
            raise ValidationError(f"decision must be one of {DECISIONS}, got {decision!r}")
        annotations = list(annotations or [])
        for ann in annotations:
            validate_annotation(ann)
        required = MIN_CONCLUSIVE_ANNOTATIONS if decision != "dont_know" else 1
        if len(annotations) < required:
            raise ValidationError(
                f"decision {decision!r} requires at least {required} annotation(s), "
                f"got {len(annotations)}"
            )
        event = {
            "event": "decision_submitted",
            "trial_id": trial_id,
            "decision": decision,
            "annotations": annotations,
            "ts": self.store.now(),
        }
        self.store.append(event)
        return self.store.trial(trial_id)

    # -- comparisons ---------------------------------------------------------------

    def config_hash(self) -> str:
        blob = canonical_json(
            {"pipeline": self.config.to_dict(), "bank": [self.bank.n_filters, self.bank.size]}
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def run_comparison(self, pair_id: str) -> dict:
        pair = self.store.pair(pair_id)
        if pair is None:
            raise NotFoundError(f"pair {pair_id!r} is not registered")
        chash = self.config_hash()
        stored = self.store.index["results"].get(pair_id, {}).get(chash)
        if stored is not None:
            return stored
        sides = {}
        for side in ("a", "b"):
            info = pair[side]
            for key in ("image", "mask", "detections"):
                path = self.data_dir / info[key]
                if not path.exists():
                    raise NotFoundError(f"pair {pair_id!r}: missing asset {info[key]!r}")
            sides[side] = (
                load_image(self.data_dir / info["image"]),
                load_mask(self.data_dir / info["mask"]),
                parse_detections(self.data_dir / info["detections"]),
            )
        result = matching.compare(*sides["a"], *sides["b"], self.bank, self.config)
        record = result.to_dict()
        record["pair_id"] = pair_id
        record["config_hash"] = chash
        evidence_dir = self.data_dir / "evidence"
        evidence_dir.mkdir(parents=True, exist_ok=True)
        svg_name = f"evidence/{pair_id}.{chash}.svg"
        crop_a = self._crop_for_render(sides["a"])
        crop_b = self._crop_for_render(sides["b"])
        (self.data_dir / svg_name).write_text(
            report.render_comparison(result, crop_a, crop_b)
        )
        record["evidence_svg"] = svg_name
        self.store.append(
            {
                "event": "comparison_stored",
                "pair_id": pair_id,
                "config_hash": chash,
                "result": record,
                "ts": self.store.now(),
            }
        )
        return record

    def _crop_for_render(self, side_tuple):
        img, mask, _ = side_tuple
        enhanced, _, _ = preprocess(img, mask, self.config.crop_side, self.config.clahe)
        return enhanced

    def get_result(self, pair_id: str, config_hash: Optional[str] = None) -> dict:
        by_hash = self.store.index["results"].get(pair_id)
        if not by_hash:
            raise NotFoundError(f"no stored comparison for pair {pair_id!r}")
        if config_hash is None:
            config_hash = self.config_hash()
            if config_hash not in by_hash:
                config_hash = sorted(by_hash)[-1]
        if config_hash not in by_hash:
            raise NotFoundError(f"no result for pair {pair_id!r} under config {config_hash!r}")
        return by_hash[config_hash]

    def record_review(self, pair_id: str, annotator_id: str, agree: bool) -> dict:
        if self.store.pair(pair_id) is None:
            raise NotFoundError(f"pair {pair_id!r} is not registered")
        if not self.store.index["results"].get(pair_id):
            raise ValidationError(f"pair {pair_id!r} has no comparison to review")
        event = {
            "event": "review_recorded",
            "pair_id": pair_id,
            "annotator_id": annotator_id,
            "agree": bool(agree),
            "ts": self.store.now(),
        }
        self.store.append(event)
        return event

    # -- statistics --------------------------------------------------------------

    def trial_outcomes(self) -> List[evaluation.TrialOutcome]:
        out = []
        for trial in self.store.index["trials"].values():
            if trial["status"] != "closed":
                continue
            pair = self.store.pair(trial["pair_id"])
            prior_decision = None
            if trial["prior_trial"] is not None:
                prior_decision = self.store.trial(trial["prior_trial"])["decision"]
            out.append(
                evaluation.TrialOutcome(
                    step=trial["step"],
                    annotator_id=trial["annotator_id"],
                    truth=pair["label"],
                    decision=trial["decision"],
                    prior_decision=prior_decision,
                )
            )
        return out

    def human_stats(self) -> dict:
        return evaluation.human_accuracy_stats(self.trial_outcomes())

    def change_stats(self) -> dict:
        counts = evaluation.decision_change_stats(self.trial_outcomes())
        return {f"{transition}:{effect}": n for (transition, effect), n in sorted(counts.items())}

    def public_config(self) -> dict:
        return {
            "min_conclusive_annotations": MIN_CONCLUSIVE_ANNOTATIONS,
            "min_inconclusive_annotations": 1,
            "decisions": list(DECISIONS),
            "plan_size_per_class": PLAN_SIZE_PER_CLASS,
            "low_pmi_hours": self.low_pmi_hours,
            "pipeline": self.config.to_dict(),
        }
