"""HTTP layer over the annotation store.

Endpoints (paths are part of the contract; the UI consumes them as-is):

    GET  /health
    GET  /videos
    GET  /videos/{id}/frames/{n}            -> image/png
    GET  /annotations/{video}/{annotator}   -> JSON-lines + X-Version header
    PUT  /annotations/{video}/{annotator}   (X-Expected-Version) -> 200/409
    POST /videos/{id}/consolidate           -> consolidated CSV

The storage root comes from the AFFMT_STORE environment variable when not
given explicitly.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

import affmt
from affmt.backend.store import AnnotationStore
from affmt.data import parse_annotations, write_consolidated_csv
from affmt.errors import (
    NotFoundError,
    ParseError,
    StorageError,
    ValidationError,
    VersionConflictError,
)

STORE_ENV_VAR = "AFFMT_STORE"


def store_from_env(required_annotators: int = 3) -> AnnotationStore:
    root = os.environ.get(STORE_ENV_VAR)
    if not root:
        raise StorageError(f"{STORE_ENV_VAR} is not set")
    return AnnotationStore(root, required_annotators=required_annotators)


def create_app(store: AnnotationStore, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="affmt annotation service", version=affmt.__version__)

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ParseError)
    async def _parse(request: Request, exc: ParseError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(VersionConflictError)
    async def _conflict(request: Request, exc: VersionConflictError):
        return JSONResponse(
            status_code=409,
            content={"error": str(exc), "current_version": exc.actual},
        )

    @app.exception_handler(StorageError)
    async def _storage(request: Request, exc: StorageError):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": affmt.__version__}

    @app.get("/videos")
    def list_videos():
        return [
            {**entry.meta.to_dict(), "valid": entry.valid, "problems": entry.problems}
            for entry in store.list_videos()
        ]

    @app.get("/videos/{video_id}/frames/{frame_index}")
    def get_frame(video_id: str, frame_index: int):
        return Response(
            content=store.get_frame(video_id, frame_index),
            media_type="image/png",
        )

    @app.get("/annotations/{video_id}/{annotator_id}")
    def get_annotations(video_id: str, annotator_id: str):
        body, version = store.get_annotations(video_id, annotator_id)
        return PlainTextResponse(
            content=body,
            media_type="application/x-ndjson",
            headers={"X-Version": str(version)},
        )

    @app.put("/annotations/{video_id}/{annotator_id}")
    async def put_annotations(
        video_id: str,
        annotator_id: str,
        request: Request,
        x_expected_version: Optional[int] = Header(default=None),
    ):
        if x_expected_version is None:
            raise ValidationError("X-Expected-Version header is required")
        records = parse_annotations(await request.body())
        version = store.put_annotations(
            video_id, annotator_id, records, expected_version=x_expected_version
        )
        return {"version": version}

    @app.post("/videos/{video_id}/consolidate")
    def consolidate_video(video_id: str):
        frames = store.run_consolidation(video_id)
        return PlainTextResponse(
            content=write_consolidated_csv(frames), media_type="text/csv"
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
