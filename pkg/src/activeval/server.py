"""HTTP annotation server: one live vetting session per process.

A human annotator (through the browser UI or any HTTP client) plays the
annotator role: GET the current batch, POST complete label maps with the
batch token, watch the expected metrics update.  Submissions are applied
atomically and persisted before they are acknowledged, so a restarted
server resumes exactly at the last acknowledged batch.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from . import io as avio
from .io import SessionHandle


class LabelSubmission(BaseModel):
    batch_id: str
    labels: dict[str, dict[str, int]]


def create_app(handle: SessionHandle, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the FastAPI app around one session handle.

    State mutation is serialized through a single lock; batch tokens give
    optimistic concurrency, so a stale or duplicated submission is rejected
    with 409 and no state change.
    """
    app = FastAPI(title="activeval annotation server")
    lock = threading.Lock()
    app.state.handle = handle

    @app.get("/api/session")
    def get_state() -> dict:
        with lock:
            return avio.session_view(handle)

    @app.post("/api/session/labels")
    def submit_labels(submission: LabelSubmission) -> dict:
        with lock:
            session = handle.session
            if session.done:
                raise HTTPException(status_code=409, detail="session is complete")
            expected_token = session.batch_token()
            if submission.batch_id != expected_token:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale batch_id {submission.batch_id!r};"
                    f" current batch is {expected_token!r}",
                )
            try:
                session.apply_batch(submission.labels)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            handle.save()
            return avio.session_view(handle)

    @app.get("/api/session/report")
    def get_report(format: str = Query("json", pattern="^(json|csv)$")) -> Response:
        with lock:
            report = handle.session.report()
        # live mode: annotators never see oracle-derived numbers
        data = avio.emit_report(report, format, include_oracle=False)
        media = "application/json" if format == "json" else "text/csv"
        return Response(content=data, media_type=media)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
