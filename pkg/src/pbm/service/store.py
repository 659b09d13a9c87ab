"""Append-only persistence for trials, comparisons and reviews.

The newline-delimited JSON log is the single source of truth: every state
change is one appended record, and replaying the log from disk rebuilds the
derived in-memory index byte-for-byte (``snapshot_bytes``). Appends are
serialized through one lock; reads need no coordination.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Callable, Optional


class StoreError(ValueError):
    """Raised for events that cannot be applied to the current index."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Store:
    def __init__(self, log_path, clock: Callable[[], float] = time.time):
        self.log_path = Path(log_path)
        self.clock = clock
        self._lock = threading.Lock()
        self._index = {
            "pairs": {},  # pair_id -> registration payload
            "plans": {},  # annotator_id -> plan
            "trials": {},  # trial_id -> trial record
            "results": {},  # pair_id -> {config_hash -> comparison result}
            "reviews": {},  # pair_id -> [review, ...]
            "verified": {},  # evaluation trial_id -> verification trial_id
        }
        if self.log_path.exists():
            with open(self.log_path) as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._apply(json.loads(line))

    # -- event application --------------------------------------------------

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        idx = self._index
        if kind == "pair_registered":
            pair = event["pair"]
            if pair["pair_id"] in idx["pairs"]:
                raise StoreError(f"pair {pair['pair_id']!r} already registered")
            idx["pairs"][pair["pair_id"]] = pair
        elif kind == "plan_created":
            plan = event["plan"]
            if plan["annotator_id"] in idx["plans"]:
                raise StoreError(f"plan for {plan['annotator_id']!r} already exists")
            idx["plans"][plan["annotator_id"]] = plan
        elif kind == "trial_opened":
            trial = event["trial"]
            if trial["trial_id"] in idx["trials"]:
                raise StoreError(f"trial {trial['trial_id']!r} already exists")
            idx["trials"][trial["trial_id"]] = trial
            prior = trial.get("prior_trial")
            if prior is not None:
                if prior in idx["verified"]:
                    raise StoreError(f"evaluation trial {prior!r} already assigned")
                idx["verified"][prior] = trial["trial_id"]
        elif kind == "decision_submitted":
            trial = idx["trials"].get(event["trial_id"])
            if trial is None:
                raise StoreError(f"unknown trial {event['trial_id']!r}")
            if trial["status"] != "open":
                raise StoreError(f"trial {event['trial_id']!r} is not open")
            trial["status"] = "closed"
            trial["decision"] = event["decision"]
            trial["annotations"] = event["annotations"]
            trial["closed_at"] = event["ts"]
        elif kind == "comparison_stored":
            by_hash = idx["results"].setdefault(event["pair_id"], {})
            by_hash[event["config_hash"]] = event["result"]
        elif kind == "review_recorded":
            idx["reviews"].setdefault(event["pair_id"], []).append(
                {
                    "annotator_id": event["annotator_id"],
                    "agree": event["agree"],
                    "ts": event["ts"],
                }
            )
        else:
            raise StoreError(f"unknown event kind {kind!r}")

    # -- public API ----------------------------------------------------------

    def append(self, event: dict) -> dict:
        """Apply and persist one event atomically (single-writer discipline)."""
        with self._lock:
            self._apply(event)
            with open(self.log_path, "a") as fh:
                fh.write(canonical_json(event) + "\n")
                fh.flush()
        return event

    def now(self) -> float:
        return float(self.clock())

    @property
    def index(self) -> dict:
        return self._index

    def snapshot_bytes(self) -> bytes:
        """Canonical serialization of the derived index."""
        return canonical_json(self._index).encode()

    # convenience lookups

    def pair(self, pair_id: str) -> Optional[dict]:
        return self._index["pairs"].get(pair_id)

    def trial(self, trial_id: str) -> Optional[dict]:
        return self._index["trials"].get(trial_id)

    def next_trial_id(self) -> str:
        return f"t{len(self._index['trials']):06d}"
