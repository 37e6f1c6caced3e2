"""HTTP boundary for human hypothesis selection.

Read-only views of run progress and the pending-review queue, plus one
mutating endpoint that records a selection and unblocks the parked task.
Optionally serves the built review UI bundle at "/".
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import UnknownHypothesis, UnknownTask
from .evalharness import RunLedger
from .reduce_store import ReviewHub, SelectionRecord


class SelectionBody(BaseModel):
    run_id: str
    task_id: str
    annotator: str = "anonymous"
    chosen_hypothesis_ids: list[str] = []


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(hub: ReviewHub,
               ledger_paths: Optional[dict[str, Path]] = None,
               static_dir: Optional[Path] = None) -> FastAPI:
    """API over one review hub and any number of run ledgers.

    Ledgers are reloaded from disk per request so progress reflects a
    concurrently running harness within one polling interval.
    """
    ledger_paths = dict(ledger_paths or {})
    app = FastAPI(title="hypothesearch review")
    # local development only; the service is not meant to face a network
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(422, "ValidationError", str(exc.errors()))

    @app.exception_handler(HTTPException)
    async def on_http_error(request: Request, exc: HTTPException):
        code = exc.detail if isinstance(exc.detail, str) else "HTTPError"
        return _error(exc.status_code, code, code)

    def load_ledger(run_id: str) -> Optional[RunLedger]:
        path = ledger_paths.get(run_id)
        if path and Path(path).exists():
            return RunLedger.load(path)
        return None

    def run_state(run_id: str) -> dict:
        pending = len(hub.list_pending(run_id))
        ledger = load_ledger(run_id)
        if ledger is None:
            return {"run_id": run_id, "mode": "unknown",
                    "progress": {"done": 0, "total": 0},
                    "pending_reviews": pending}
        total = len((ledger.header or {}).get("task_ids") or []) or len(ledger.outcomes)
        return {"run_id": run_id, "mode": ledger.mode,
                "progress": {"done": len(ledger.outcomes), "total": total},
                "pending_reviews": pending}

    def known_runs() -> list[str]:
        ids = list(ledger_paths)
        for run_id in hub.known_run_ids():
            if run_id not in ids:
                ids.append(run_id)
        return ids

    def run_completed(run_id: str) -> bool:
        ledger = load_ledger(run_id)
        if ledger is None:
            return False
        state = run_state(run_id)
        done, total = state["progress"]["done"], state["progress"]["total"]
        return total > 0 and done >= total and state["pending_reviews"] == 0

    @app.get("/runs")
    def list_runs():
        return [run_state(run_id) for run_id in known_runs()]

    @app.get("/runs/{run_id}/pending")
    def list_pending(run_id: str):
        if run_id not in known_runs():
            raise HTTPException(404, "UnknownRun")
        return [{"task_id": e["task_id"], "domain": e["domain"],
                 "train": e["train"], "hypotheses": e["hypotheses"]}
                for e in hub.list_pending(run_id)]

    @app.post("/selections", status_code=201)
    def post_selection(body: SelectionBody):
        if run_completed(body.run_id):
            raise HTTPException(409, "RunCompleted")
        try:
            record = hub.record_selection(SelectionRecord(
                run_id=body.run_id, task_id=body.task_id,
                annotator=body.annotator,
                chosen_hypothesis_ids=tuple(body.chosen_hypothesis_ids)))
        except UnknownTask as e:
            raise HTTPException(422, "UnknownTask") from e
        except UnknownHypothesis as e:
            raise HTTPException(422, "UnknownHypothesis") from e
        return record.to_dict()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
