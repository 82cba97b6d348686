"""HTTP gateway: the engine's operations behind a small JSON API.

Every response body uses the store's canonical encoding (sorted keys,
two-space indent, trailing newline), so a body diffed against a store
file or a saved plan never disagrees on formatting.

Reads return the revision they saw. Writes accept an optional
``expected_revision`` and fail with 409 when someone else committed in
between; clients retry by re-reading. Exports run on a small worker pool
and are polled by id, then downloaded as a zip once finished.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import RedirectResponse
from fastapi.exceptions import RequestValidationError
from fastapi.encoders import jsonable_encoder
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import (
    ConflictError,
    CorruptStore,
    EmptyExport,
    EndpointUnreachable,
    EngineError,
    PackagingError,
    PlanFailed,
    StorageError,
    UnknownCollection,
    UnknownDocument,
    ValidationRejected,
)
from .imscp import ExportConfig, export_package
from .importers import get_plugin, list_plugins
from .model import Collection, ExternalUrl, LocalBlob, validate_collection
from .paths import parse_path
from .reconfigure import (
    ImageAnnotation,
    Region,
    annotate_image,
    apply_plan,
    diff_schemas,
    plan_from_dict,
    read_annotations,
)
from .serialization import (
    canonical_bytes,
    document_from_dict,
    document_to_dict,
    resource_to_dict,
    schema_to_dict,
)
from .store import CollectionStore, collection_info

# --- canonical wire format ------------------------------------------------------

class CanonicalJSONResponse(Response):
    media_type = "application/json"

    def render(self, content) -> bytes:
        return canonical_bytes(content)


# --- request / response models ---------------------------------------------------

class CreateCollectionRequest(BaseModel):
    name: str = Field(min_length=1)


class CollectionSummary(BaseModel):
    id: str
    name: str
    schema_version: int
    revision: int
    document_count: int
    resource_count: int


class PluginInfo(BaseModel):
    name: str
    version: str
    description: str


class ImportRequest(BaseModel):
    plugin: str
    config: dict = Field(default_factory=dict)


class DocumentPutRequest(BaseModel):
    document: dict
    expected_revision: Optional[int] = None


class OpsRequest(BaseModel):
    """Either a list of ops (applied as an unnamed plan) or a full plan dict."""

    ops: Optional[list[dict]] = None
    plan: Optional[dict] = None
    description: str = ""
    expected_revision: Optional[int] = None
    dry_run: bool = False


class RegionModel(BaseModel):
    x: float
    y: float
    w: float
    h: float


class AnnotationRequest(BaseModel):
    document_id: str
    path: str
    region: RegionModel
    explanation: str = ""
    expected_revision: Optional[int] = None


class ExportRequest(BaseModel):
    roots: list[str]
    title: str = Field(min_length=1)
    language: str = "en-US"
    seed: Optional[int] = None
    depth_limit: Optional[int] = None


class ExportStatus(BaseModel):
    id: str
    collection_id: str
    status: str  # queued | running | done | failed
    revision: int
    title: str
    error: Optional[dict] = None
    manifest_identifier: Optional[str] = None
    byte_size: Optional[int] = None


# --- error mapping ----------------------------------------------------------------

_STATUS_BY_TYPE: tuple[tuple[type, int], ...] = (
    (UnknownCollection, 404),
    (UnknownDocument, 404),
    (ConflictError, 409),
    (EndpointUnreachable, 502),
    (StorageError, 500),
    (CorruptStore, 500),
    (PackagingError, 500),
    (EngineError, 422),
)


def _status_for(exc: EngineError) -> int:
    for etype, status in _STATUS_BY_TYPE:
        if isinstance(exc, etype):
            return status
    return 500


def _error_body(code: str, message: str, **extra) -> dict:
    body = {"code": code, "message": message}
    body.update(extra)
    return {"error": body}


def _engine_error_response(exc: EngineError) -> CanonicalJSONResponse:
    extra: dict = {}
    if isinstance(exc, PlanFailed):
        extra["op_index"] = exc.op_index
        cause = exc.cause
        extra["cause"] = getattr(cause, "code", type(cause).__name__)
    if isinstance(exc, ValidationRejected):
        extra["violations"] = [asdict(v) for v in exc.report.violations]
    return CanonicalJSONResponse(
        _error_body(exc.code, str(exc), **extra), status_code=_status_for(exc)
    )


# --- export jobs ---------------------------------------------------------------

class _ExportJob:
    def __init__(self, job_id: str, collection: Collection, config: ExportConfig):
        self.id = job_id
        self.collection = collection
        self.config = config
        self.status = "queued"
        self.error: Optional[dict] = None
        self.data: Optional[bytes] = None
        self.manifest_identifier: Optional[str] = None

    def as_status(self) -> ExportStatus:
        return ExportStatus(
            id=self.id,
            collection_id=self.collection.id,
            status=self.status,
            revision=self.collection.revision,
            title=self.config.title,
            error=self.error,
            manifest_identifier=self.manifest_identifier,
            byte_size=len(self.data) if self.data is not None else None,
        )


class _ExportRunner:
    """Runs export jobs off the request thread; jobs are kept in memory."""

    def __init__(self, store: CollectionStore):
        self.store = store
        self.executor = ThreadPoolExecutor(max_workers=2, thread_name_prefix="export")
        self.jobs: dict[str, _ExportJob] = {}
        self.lock = threading.Lock()
        self._counter = 0

    def submit(self, collection: Collection, config: ExportConfig) -> _ExportJob:
        with self.lock:
            self._counter += 1
            job = _ExportJob(f"exp-{self._counter:04d}", collection, config)
            self.jobs[job.id] = job
        self.executor.submit(self._run, job)
        return job

    def get(self, job_id: str) -> Optional[_ExportJob]:
        with self.lock:
            return self.jobs.get(job_id)

    def _run(self, job: _ExportJob) -> None:
        job.status = "running"
        cid = job.collection.id
        try:
            data, manifest = export_package(
                job.collection, job.config,
                read_blob=lambda sha: self.store.read_blob(cid, sha),
            )
        except Exception as exc:  # failure lands in the status body, not a log
            code = getattr(exc, "code", type(exc).__name__)
            job.error = {"code": code, "message": str(exc)}
            job.status = "failed"
            return
        job.data = data
        job.manifest_identifier = manifest.identifier
        job.status = "done"

    def shutdown(self) -> None:
        self.executor.shutdown(wait=False, cancel_futures=True)


# --- the application ----------------------------------------------------------------

def create_app(store_root: Path | str, ui_dist: Optional[Path] = None) -> FastAPI:
    store = CollectionStore(Path(store_root))
    runner = _ExportRunner(store)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        runner.shutdown()

    app = FastAPI(
        title="recollect",
        default_response_class=CanonicalJSONResponse,
        lifespan=lifespan,
    )
    app.state.store = store
    app.state.export_runner = runner

    @app.exception_handler(EngineError)
    async def engine_error_handler(request: Request, exc: EngineError):
        return _engine_error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return CanonicalJSONResponse(
            _error_body(
                "invalid_request", "request body failed validation",
                detail=jsonable_encoder(exc.errors(), exclude={"input", "ctx"}),
            ),
            status_code=422,
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return CanonicalJSONResponse(
            _error_body("invalid_request", str(exc)), status_code=422
        )

    def summary_dict(info) -> dict:
        return CollectionSummary(**asdict(info)).model_dump()

    # --- plugins and collections ---------------------------------------------------

    @app.get("/plugins")
    def plugins() -> dict:
        return {
            "plugins": [
                PluginInfo(
                    name=d.name, version=d.version, description=d.description
                ).model_dump()
                for d in list_plugins()
            ]
        }

    @app.get("/collections")
    def collections() -> dict:
        return {"collections": [summary_dict(i) for i in store.list_collections()]}

    @app.post("/collections", status_code=201)
    def create_collection(req: CreateCollectionRequest) -> dict:
        return summary_dict(store.create_collection(req.name))

    @app.get("/collections/{cid}")
    def collection(cid: str) -> dict:
        return summary_dict(collection_info(store.load(cid)))

    @app.get("/collections/{cid}/schema")
    def schema(cid: str) -> dict:
        c = store.load(cid)
        return {"revision": c.revision, "schema": schema_to_dict(c.schema)}

    @app.get("/collections/{cid}/validation")
    def validation(cid: str) -> dict:
        c = store.load(cid)
        report = validate_collection(
            c, blob_exists=lambda sha: store.blob_exists(cid, sha)
        )
        return {
            "revision": c.revision,
            "ok": report.ok,
            "violations": [asdict(v) for v in report.violations],
        }

    # --- documents -----------------------------------------------------------------

    @app.get("/collections/{cid}/documents")
    def documents(cid: str) -> dict:
        c = store.load(cid)
        return {
            "revision": c.revision,
            "documents": [
                {"id": d.id, "title": d.title, "value_count": len(d.values)}
                for _, d in sorted(c.documents.items())
            ],
        }

    @app.get("/collections/{cid}/documents/{doc_id}")
    def document(cid: str, doc_id: str) -> dict:
        c = store.load(cid)
        doc = c.document(doc_id)
        if doc is None:
            raise UnknownDocument(f"no document {doc_id!r} in collection {cid}")
        return {"revision": c.revision, "document": document_to_dict(doc)}

    @app.put("/collections/{cid}/documents/{doc_id}")
    def put_document(cid: str, doc_id: str, req: DocumentPutRequest) -> dict:
        try:
            doc = document_from_dict(req.document)
        except (KeyError, TypeError, ValueError) as exc:
            return CanonicalJSONResponse(
                _error_body("invalid_request", f"malformed document: {exc}"),
                status_code=422,
            )
        if doc.id != doc_id:
            return CanonicalJSONResponse(
                _error_body(
                    "invalid_request",
                    f"document id {doc.id!r} does not match the URL ({doc_id!r})",
                ),
                status_code=422,
            )

        def swap(c: Collection) -> Collection:
            if doc_id not in c.documents:
                raise UnknownDocument(f"no document {doc_id!r} in collection {cid}")
            docs = dict(c.documents)
            docs[doc_id] = doc
            return replace(c, documents=docs)

        after = store.transact(
            cid, swap, label="edit_document",
            summary={"document": doc_id},
            expected_revision=req.expected_revision,
        )
        return {"revision": after.revision, "document": document_to_dict(doc)}

    @app.get("/collections/{cid}/documents/{doc_id}/annotations")
    def annotations(cid: str, doc_id: str, path: str) -> dict:
        c = store.load(cid)
        parsed = parse_path(path)
        found = read_annotations(c, doc_id, parsed)
        return {
            "revision": c.revision,
            "annotations": [
                {"region": asdict(a.region), "explanation": a.explanation}
                for a in found
            ],
        }

    @app.post("/collections/{cid}/annotations", status_code=201)
    def annotate(cid: str, req: AnnotationRequest) -> dict:
        annotation = ImageAnnotation(
            document_id=req.document_id,
            path=parse_path(req.path),
            region=Region(**req.region.model_dump()),
            explanation=req.explanation,
        )
        after = store.transact(
            cid, lambda c: annotate_image(c, annotation),
            label="annotate", summary={"document": req.document_id},
            expected_revision=req.expected_revision,
        )
        return {"revision": after.revision}

    # --- resources -----------------------------------------------------------------

    @app.get("/collections/{cid}/resources")
    def resources(cid: str) -> dict:
        c = store.load(cid)
        return {
            "revision": c.revision,
            "resources": {
                rid: resource_to_dict(r) for rid, r in sorted(c.resources.items())
            },
        }

    @app.get("/collections/{cid}/resources/{rid}/blob")
    def resource_blob(cid: str, rid: str):
        c = store.load(cid)
        resource = c.resources.get(rid)
        if resource is None:
            return CanonicalJSONResponse(
                _error_body("unknown_resource", f"no resource {rid!r} in {cid}"),
                status_code=404,
            )
        if isinstance(resource.origin, ExternalUrl):
            return RedirectResponse(resource.origin.url, status_code=307)
        assert isinstance(resource.origin, LocalBlob)
        return Response(
            store.read_blob(cid, resource.origin.sha256),
            media_type=resource.media_type,
        )

    # --- imports -------------------------------------------------------------------

    @app.post("/collections/{cid}/imports", status_code=201)
    def run_import(cid: str, req: ImportRequest) -> dict:
        store.load(cid)  # 404 before plugin errors
        descriptor = get_plugin(req.plugin)
        report = descriptor.build(store, cid, req.config)
        return {"revision": store.load(cid).revision, "report": asdict(report)}

    # --- reconfiguration -------------------------------------------------------------

    @app.post("/collections/{cid}/ops")
    def run_ops(cid: str, req: OpsRequest) -> dict:
        if (req.ops is None) == (req.plan is None):
            return CanonicalJSONResponse(
                _error_body("invalid_request", "pass exactly one of 'ops' or 'plan'"),
                status_code=422,
            )
        before = store.load(cid)
        if req.plan is not None:
            plan = plan_from_dict(req.plan)
        else:
            plan = plan_from_dict({
                "plan_id": "adhoc",
                "description": req.description,
                "authored_schema_version": before.schema.version,
                "ops": req.ops,
            })

        if req.dry_run:
            if (
                req.expected_revision is not None
                and before.revision != req.expected_revision
            ):
                raise ConflictError(
                    f"collection {cid} is at revision {before.revision}, "
                    f"expected {req.expected_revision}"
                )
            migrated, report = apply_plan(before, plan)
            return _ops_body(before, migrated, report, dry_run=True,
                             revision=before.revision)

        captured: dict = {}

        def mutate(c: Collection) -> Collection:
            migrated, report = apply_plan(c, plan)
            captured["before"] = c
            captured["report"] = report
            return migrated

        after = store.transact(
            cid, mutate, label="reconfigure",
            summary={"plan": plan.id, "ops": len(plan.ops)},
            expected_revision=req.expected_revision,
        )
        return _ops_body(captured["before"], after, captured["report"],
                         dry_run=False, revision=after.revision)

    def _ops_body(before: Collection, after: Collection, report, *,
                  dry_run: bool, revision: int) -> dict:
        diff = diff_schemas(before.schema, after.schema)
        return {
            "revision": revision,
            "dry_run": dry_run,
            "schema_version": after.schema.version,
            "schema": schema_to_dict(after.schema),
            "report": {
                "ops": [asdict(r) for r in report.ops],
                "final_element_count": report.final_element_count,
                "final_schema_version": report.final_schema_version,
                "documents_touched": report.documents_touched,
                "warnings": list(report.warnings),
            },
            "diff": asdict(diff),
        }

    # --- exports --------------------------------------------------------------------

    @app.post("/collections/{cid}/exports", status_code=202)
    def submit_export(cid: str, req: ExportRequest) -> dict:
        collection = store.load(cid)
        if not req.roots:
            raise EmptyExport("no export roots given")
        missing = [r for r in req.roots if r not in collection.documents]
        if missing:
            raise UnknownDocument(f"unknown export roots: {', '.join(missing)}")
        config = ExportConfig(
            roots=tuple(req.roots), title=req.title, language=req.language,
            seed=req.seed, depth_limit=req.depth_limit,
        )
        job = runner.submit(collection, config)
        return {"export": job.as_status().model_dump()}

    @app.get("/exports/{export_id}")
    def export_status(export_id: str) -> dict:
        job = runner.get(export_id)
        if job is None:
            return CanonicalJSONResponse(
                _error_body("unknown_export", f"no export {export_id!r}"),
                status_code=404,
            )
        return {"export": job.as_status().model_dump()}

    @app.get("/exports/{export_id}/package")
    def export_package_download(export_id: str):
        job = runner.get(export_id)
        if job is None:
            return CanonicalJSONResponse(
                _error_body("unknown_export", f"no export {export_id!r}"),
                status_code=404,
            )
        if job.status == "failed":
            assert job.error is not None
            return CanonicalJSONResponse(
                _error_body(job.error["code"], job.error["message"]), status_code=422
            )
        if job.status != "done":
            return CanonicalJSONResponse(
                _error_body(
                    "export_not_ready",
                    f"export {export_id} is {job.status}; poll until done",
                    status=job.status,
                ),
                status_code=409,
            )
        assert job.data is not None
        filename = f"{job.collection.id}-{job.id}.zip"
        return Response(
            job.data,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    if ui_dist is not None and Path(ui_dist).is_dir():
        app.mount("/ui", StaticFiles(directory=Path(ui_dist), html=True), name="ui")

    return app
