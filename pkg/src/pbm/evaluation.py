"""Score bookkeeping and recognition metrics: ROC, AUC, EER, d-prime, plus
accuracy tables for the two-step human annotation workflow.

Score polarity is distance-like throughout: lower = more similar, so a
comparison is declared a match when its score falls at or below the threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

LABELS = ("genuine", "impostor")
DECISIONS = ("same_eye", "different_eyes", "dont_know")

_DECISION_CLAIM = {"same_eye": "genuine", "different_eyes": "impostor"}


@dataclass(frozen=True)
class ScoreRecord:
    pair_id: str
    subject_a: str
    subject_b: str
    score: float
    label: str
    no_evidence: bool = False


class ScoreSet:
    """Validated collection of labelled comparison scores."""

    def __init__(self, records: Iterable[ScoreRecord]):
        self.records: List[ScoreRecord] = list(records)
        for r in self.records:
            if r.label not in LABELS:
                raise ValueError(f"{r.pair_id}: unknown label {r.label!r}")
            if not math.isfinite(r.score):
                raise ValueError(f"{r.pair_id}: non-finite score {r.score}")
            if (r.subject_a == r.subject_b) != (r.label == "genuine"):
                raise ValueError(
                    f"{r.pair_id}: label {r.label!r} inconsistent with subjects "
                    f"{r.subject_a!r} vs {r.subject_b!r}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def scores(self, label: str, exclude_no_evidence: bool = False) -> np.ndarray:
        return np.array(
            [
                r.score
                for r in self.records
                if r.label == label and not (exclude_no_evidence and r.no_evidence)
            ],
            dtype=np.float64,
        )


def read_scores(path) -> ScoreSet:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                ScoreRecord(
                    pair_id=row["pair_id"],
                    subject_a=row["subject_a"],
                    subject_b=row["subject_b"],
                    score=float(row["score"]),
                    label=row["label"],
                    no_evidence=row["no_evidence"].strip().lower() in ("1", "true"),
                )
            )
    return ScoreSet(records)


def write_scores(scores: ScoreSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "subject_a", "subject_b", "score", "label", "no_evidence"])
        for r in scores.records:
            writer.writerow(
                [r.pair_id, r.subject_a, r.subject_b, repr(r.score), r.label,
                 "true" if r.no_evidence else "false"]
            )


@dataclass
class RocCurve:
    """Operating points swept over match thresholds, loosest last.

    Thresholds are midpoints between consecutive distinct scores plus the two
    infinite endpoints, so the curve always contains (far 0, frr 1) and
    (far 1, frr 0) and is resolution-complete for the given score set.
    """

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    n_genuine: int = 0
    n_impostor: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.far) < 0) or np.any(np.diff(self.frr) > 0):
            raise ValueError("ROC points must have monotone far/frr")
        if not (
            self.far[0] == 0.0 and self.frr[0] == 1.0
            and self.far[-1] == 1.0 and self.frr[-1] == 0.0
        ):
            raise ValueError("ROC endpoints must cover (far 0, frr 1) and (far 1, frr 0)")


def roc(scores: ScoreSet, exclude_no_evidence: bool = False) -> RocCurve:
    """Sweep all informative thresholds; lower score = declared match."""
    genuine = scores.scores("genuine", exclude_no_evidence)
    impostor = scores.scores("impostor", exclude_no_evidence)
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("need at least one genuine and one impostor score")
    observed = np.unique(np.concatenate([genuine, impostor]))
    mids = (observed[:-1] + observed[1:]) / 2.0
    thresholds = np.concatenate([[-np.inf], mids, [np.inf]])
    far = np.array([(impostor <= t).mean() for t in thresholds])
    frr = np.array([(genuine > t).mean() for t in thresholds])
    return RocCurve(thresholds, far, frr, n_genuine=genuine.size, n_impostor=impostor.size)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under (1 - frr) versus far."""
    return float(np.trapezoid(1.0 - curve.frr, curve.far))


def eer(curve: RocCurve) -> float:
    """far at the far = frr crossing, linearly interpolated between points."""
    delta = curve.far - curve.frr
    for idx in range(len(delta)):
        if delta[idx] == 0.0:
            return float(curve.far[idx])
        if idx + 1 < len(delta) and delta[idx] < 0.0 <= delta[idx + 1]:
            d0, d1 = delta[idx], delta[idx + 1]
            s = d0 / (d0 - d1)
            return float(curve.far[idx] + s * (curve.far[idx + 1] - curve.far[idx]))
    raise ValueError("ROC curve has no far = frr crossing")


def dprime(scores: ScoreSet, exclude_no_evidence: bool = False) -> float:
    """Decidability: |mean separation| over pooled per-class spread."""
    genuine = scores.scores("genuine", exclude_no_evidence)
    impostor = scores.scores("impostor", exclude_no_evidence)
    if genuine.size < 2 or impostor.size < 2:
        raise ValueError("d-prime needs at least two scores in each class")
    num = abs(float(impostor.mean()) - float(genuine.mean()))
    pooled = math.sqrt((float(genuine.var(ddof=1)) + float(impostor.var(ddof=1))) / 2.0)
    if pooled == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / pooled


# ---------------------------------------------------------------------------
# Human-trial statistics


@dataclass(frozen=True)
class TrialOutcome:
    """Minimal view of one completed trial, decoupled from storage."""

    step: str  # "evaluation" | "verification"
    annotator_id: str
    truth: str  # "genuine" | "impostor"
    decision: str  # same_eye | different_eyes | dont_know
    prior_decision: Optional[str] = None  # verification trials only


def _is_correct(decision: str, truth: str) -> bool:
    return _DECISION_CLAIM.get(decision) == truth


def human_accuracy_stats(trials: Iterable[TrialOutcome]) -> Dict[str, dict]:
    """Per-step accuracy fractions: overall, per class, inconclusive rate."""
    steps: Dict[str, List[TrialOutcome]] = {"evaluation": [], "verification": []}
    for t in trials:
        steps.setdefault(t.step, []).append(t)
    out = {}
    for step, items in steps.items():
        n = len(items)
        genuine = [t for t in items if t.truth == "genuine"]
        impostor = [t for t in items if t.truth == "impostor"]
        correct = sum(_is_correct(t.decision, t.truth) for t in items)
        out[step] = {
            "n_trials": n,
            "n_annotators": len({t.annotator_id for t in items}),
            "overall": correct / n if n else 0.0,
            "genuine": (
                sum(_is_correct(t.decision, t.truth) for t in genuine) / len(genuine)
                if genuine
                else 0.0
            ),
            "impostor": (
                sum(_is_correct(t.decision, t.truth) for t in impostor) / len(impostor)
                if impostor
                else 0.0
            ),
            "inconclusive": (
                sum(t.decision == "dont_know" for t in items) / n if n else 0.0
            ),
        }
    return out


def format_accuracy_table(stats: Dict[str, dict]) -> str:
    """Two-column accuracy table (evaluation step vs verification step)."""
    s1 = stats.get("evaluation", {})
    s2 = stats.get("verification", {})

    def pct(d, key):
        return f"{100.0 * d.get(key, 0.0):.1f}%" if d else "-"

    rows = [
        ("", "Step 1 (evaluation)", "Step 2 (verification)"),
        ("Overall", pct(s1, "overall"), pct(s2, "overall")),
        ("Genuine pairs", pct(s1, "genuine"), pct(s2, "genuine")),
        ("Impostor pairs", pct(s1, "impostor"), pct(s2, "impostor")),
        ("Inconclusive", pct(s1, "inconclusive"), pct(s2, "inconclusive")),
        ("Number of annotators", str(s1.get("n_annotators", 0)), str(s2.get("n_annotators", 0))),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)) for r in rows)


_CLAIM_NAME = {"same_eye": "genuine", "different_eyes": "impostor", "dont_know": "unsure"}

CHANGE_TRANSITIONS = (
    "genuine_to_impostor",
    "impostor_to_genuine",
    "unsure_to_genuine",
    "unsure_to_impostor",
    "genuine_to_unsure",
    "impostor_to_unsure",
)


def decision_change_stats(trials: Iterable[TrialOutcome]) -> Dict[Tuple[str, str], int]:
    """Counts of verification-step decision changes by correctness effect.

    Keys are (transition, effect); transition names use the claim vocabulary
    (genuine/impostor/unsure) and effect is one of incorrect_to_correct,
    correct_to_incorrect, incorrect_to_incorrect. Unchanged decisions are not
    transitions and are skipped.
    """
    counts: Dict[Tuple[str, str], int] = {}
    for t in trials:
        if t.step != "verification" or t.prior_decision is None:
            continue
        if t.decision == t.prior_decision:
            continue
        transition = f"{_CLAIM_NAME[t.prior_decision]}_to_{_CLAIM_NAME[t.decision]}"
        before = _is_correct(t.prior_decision, t.truth)
        after = _is_correct(t.decision, t.truth)
        effect = f"{'correct' if before else 'incorrect'}_to_{'correct' if after else 'incorrect'}"
        counts[(transition, effect)] = counts.get((transition, effect), 0) + 1
    return counts


def format_change_table(counts: Dict[Tuple[str, str], int]) -> str:
    header = ("", "Incorrect to Correct", "Correct to Incorrect")
    rows = [header]
    for transition in CHANGE_TRANSITIONS:
        label = transition.replace("_", " ").title().replace(" To ", " to ")
        inc_cor = counts.get((transition, "incorrect_to_correct"), 0)
        cor_inc = counts.get((transition, "correct_to_incorrect"), 0)
        from_unsure = transition.startswith("unsure")
        to_unsure = transition.endswith("unsure")
        rows.append(
            (
                label,
                "-" if to_unsure else str(inc_cor),
                "-" if from_unsure else str(cor_inc),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)) for r in rows)


# ---------------------------------------------------------------------------
# Pairing helpers


@dataclass(frozen=True)
class Sample:
    image_id: str
    subject_key: str  # subject identity including eye, e.g. "s012:L"
    session: str = ""


def generate_pairs(samples: Sequence[Sample], mode: str = "all_vs_all") -> List[Tuple[str, str, str]]:
    """Enumerate (image_a, image_b, label) pairs from a sample listing.

    ``all_vs_all`` pairs every two images; ``cross_session`` only pairs images
    from different acquisition sessions.
    """
    if mode not in ("all_vs_all", "cross_session"):
        raise ValueError(f"unknown pairing mode {mode!r}")
    out = []
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            a, b = samples[i], samples[j]
            if mode == "cross_session" and a.session == b.session:
                continue
            label = "genuine" if a.subject_key == b.subject_key else "impostor"
            out.append((a.image_id, b.image_id, label))
    return out


def roc_to_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "far", "frr"])
        for t, fa, fr in zip(curve.thresholds, curve.far, curve.frr):
            writer.writerow([repr(float(t)), repr(float(fa)), repr(float(fr))])


def roc_to_svg(curve: RocCurve, path, size: int = 400) -> None:
    """Minimal ROC polyline: (far, 1 - frr) on a unit square with a diagonal."""
    pts = " ".join(
        f"{fa * size:.2f},{fr * size:.2f}" for fa, fr in zip(curve.far, curve.frr)
    )
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n'
        f'<rect width="{size}" height="{size}" fill="white" stroke="black"/>\n'
        f'<line x1="0" y1="{size}" x2="{size}" y2="0" stroke="#bbbbbb" stroke-dasharray="4"/>\n'
        f'<polyline points="{pts}" fill="none" stroke="#00008b" stroke-width="2"/>\n'
        "</svg>\n"
    )
    Path(path).write_text(svg)
