"""A small MedPix-style REST service backed by fixture files.

Serves the same layout DiskSource reads, over HTTP, so crawls can be
exercised end to end without the real service.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse

from .importers.medpix import DiskSource, _media_type_for


def create_app(fixture_root: Path) -> FastAPI:
    source = DiskSource(Path(fixture_root))
    app = FastAPI(title="mock-medpix", docs_url=None, redoc_url=None)

    @app.get("/cases/{case_id}/url")
    def case_url(case_id: str):
        record = source.get_case(case_id)
        if record is None:
            return JSONResponse({"detail": "no such case"}, status_code=404)
        return {"url": record.get("url")}

    @app.get("/cases/{case_id}")
    def case(case_id: str):
        record = source.get_case(case_id)
        if record is None:
            return JSONResponse({"detail": "no such case"}, status_code=404)
        return record

    @app.get("/topics/{topic_id}")
    def topic(topic_id: str):
        record = source.get_topic(topic_id)
        if record is None:
            return JSONResponse({"detail": "no such topic"}, status_code=404)
        return record

    @app.get("/images/{name}")
    def image(name: str):
        if "/" in name or name.startswith("."):
            return JSONResponse({"detail": "bad name"}, status_code=404)
        data = source.get_image(name)
        if data is None:
            return JSONResponse({"detail": "no such image"}, status_code=404)
        return Response(content=data, media_type=_media_type_for(name))

    return app
