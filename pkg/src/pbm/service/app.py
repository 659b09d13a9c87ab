"""HTTP facade over the trial service (JSON bodies, annotator-id header)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, Header, HTTPException, Query
from fastapi.staticfiles import StaticFiles

from .trials import NotFoundError, TrialService, ValidationError


def create_app(service: TrialService) -> FastAPI:
    app = FastAPI(title="patch-based iris matching service")
    app.state.service = service

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0]))

    @app.get("/config")
    def get_config():
        return service.public_config()

    @app.post("/pairs")
    def register_pair(payload: dict = Body(...)):
        return guard(service.register_pair, payload)

    @app.post("/compare/{pair_id}")
    def run_comparison(pair_id: str):
        return guard(service.run_comparison, pair_id)

    @app.get("/results/{pair_id}")
    def get_result(pair_id: str, config_hash: Optional[str] = Query(default=None)):
        return guard(service.get_result, pair_id, config_hash)

    @app.post("/results/{pair_id}/review")
    def record_review(pair_id: str, payload: dict = Body(...),
                      x_annotator_id: str = Header(default="anonymous")):
        if "agree" not in payload:
            raise HTTPException(status_code=400, detail="body must carry an 'agree' boolean")
        return guard(service.record_review, pair_id, x_annotator_id, bool(payload["agree"]))

    @app.get("/reviews/{pair_id}")
    def get_reviews(pair_id: str):
        return service.store.index["reviews"].get(pair_id, [])

    @app.get("/trials/next")
    def next_trial(annotator: str = Query(...), step: str = Query(default="evaluation")):
        if step == "evaluation":
            return guard(service.next_evaluation_trial, annotator)
        if step == "verification":
            return guard(service.next_verification_trial, annotator)
        raise HTTPException(status_code=400, detail=f"unknown step {step!r}")

    @app.post("/trials/{trial_id}/decision")
    def submit_decision(trial_id: str, payload: dict = Body(...),
                        x_annotator_id: Optional[str] = Header(default=None)):
        if "decision" not in payload:
            raise HTTPException(status_code=400, detail="body must carry a 'decision'")
        return guard(
            service.submit_decision,
            trial_id,
            payload["decision"],
            payload.get("annotations", []),
            x_annotator_id,
        )

    @app.get("/stats/human")
    def human_stats():
        return service.human_stats()

    @app.get("/stats/changes")
    def change_stats():
        return service.change_stats()

    files_dir = Path(service.data_dir)
    files_dir.mkdir(parents=True, exist_ok=True)
    app.mount("/files", StaticFiles(directory=files_dir), name="files")
    return app
