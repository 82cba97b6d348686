"""MedPix importer: crawls the case/topic web of a MedPix-style service.

Cases reference teaching-file topics and topics reference further cases;
the crawl chases both directions breadth-first from the seed ids until the
cross-reference closure (or the document cap) is reached. Records map onto
a fixed 72-element schema mirroring the source's field inventory; curation
down to a teaching subset is a reconfiguration concern, not an import one.
"""

from __future__ import annotations

import json
import mimetypes
import time
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional, Protocol

import httpx

from ..errors import (
    EndpointUnreachable,
    MappingError,
    RecordParseError,
    SeedNotFound,
)
from ..model import (
    Collection,
    DescriptiveText,
    ElementKind,
    ElementType,
    FieldValue,
    LinkRef,
    MetadataDocument,
    MetadataSchema,
    ResourceRef,
    StructuralGroup,
)
from ..store import CollectionStore
from . import ImportPluginDescriptor, ImportReport, CapExceededWarning, register_plugin

# --- the fixed MedPix schema -------------------------------------------------

D = ElementKind.DESCRIPTIVE
R = ElementKind.RESOURCE
L = ElementKind.LINK
S = ElementKind.STRUCTURAL

# (id, name, kind, parent); sibling order is declaration order
_ELEMENTS = [
    ("case", "Case", S, None),
    ("case.title", "Case Title", D, "case"),
    ("case.uid", "Case UID", D, "case"),
    ("case.acr_code", "Case ACR Code", D, "case"),
    ("case.url", "Case URL", D, "case"),
    ("case.contributor", "Contributor", D, "case"),
    ("case.contributor_affiliation", "Contributor Affiliation", D, "case"),
    ("case.editor", "Editor", D, "case"),
    ("case.reviewer", "Reviewer", D, "case"),
    ("case.review_date", "Review Date", D, "case"),
    ("case.created", "Created Date", D, "case"),
    ("case.modified", "Modified Date", D, "case"),
    ("case.status", "Publication Status", D, "case"),
    ("case.copyright", "Copyright", D, "case"),
    ("case.sex", "Sex", D, "case"),
    ("case.age", "Age", D, "case"),
    ("case.ethnic_group", "Ethnic Group", D, "case"),
    ("case.species", "Species", D, "case"),
    ("case.clinical_history", "Clinical History", D, "case"),
    ("case.history", "History", D, "case"),
    ("case.exam", "Exam", D, "case"),
    ("case.findings", "Findings", D, "case"),
    ("case.ddx", "Differential Diagnosis", D, "case"),
    ("case.diagnosis", "Diagnosis", D, "case"),
    ("case.diagnosis_confirmation", "Diagnosis Confirmation", D, "case"),
    ("case.discussion", "Case Discussion", D, "case"),
    ("case.treatment", "Treatment", D, "case"),
    ("case.followup", "Follow-up", D, "case"),
    ("case.prognosis", "Prognosis", D, "case"),
    ("case.pathology", "Pathology", D, "case"),
    ("case.encounter", "Encounter", S, "case"),
    ("case.encounter.type", "Encounter Type", D, "case.encounter"),
    ("case.encounter.note", "Encounter Note", D, "case.encounter"),
    ("case.encounter.facility", "Facility", D, "case.encounter"),
    ("case.encounter.date", "Encounter Date", D, "case.encounter"),
    ("case.image", "Image", S, "case"),
    ("case.image.caption", "Image Caption", D, "case.image"),
    ("case.image.file", "Image File", R, "case.image"),
    ("case.image.modality", "Modality", D, "case.image"),
    ("case.image.plane", "Plane", D, "case.image"),
    ("case.image.width", "Image Width", D, "case.image"),
    ("case.image.height", "Image Height", D, "case.image"),
    ("case.image.format", "Image Format", D, "case.image"),
    ("case.related_topic", "Related Topic", L, "case"),
    ("topic", "Topic", S, None),
    ("topic.title", "Topic Title", D, "topic"),
    ("topic.uid", "Topic UID", D, "topic"),
    ("topic.acr_code", "ACR Code", D, "topic"),
    ("topic.category", "Category", D, "topic"),
    ("topic.subcategory", "Subcategory", D, "topic"),
    ("topic.keyword", "Keyword", D, "topic"),
    ("topic.discussion", "Topic Discussion", D, "topic"),
    ("topic.anatomy", "Anatomy", D, "topic"),
    ("topic.pathophysiology", "Pathophysiology", D, "topic"),
    ("topic.epidemiology", "Epidemiology", D, "topic"),
    ("topic.url", "Topic URL", D, "topic"),
    ("topic.contributor", "Topic Contributor", D, "topic"),
    ("topic.contributor_affiliation", "Topic Contributor Affiliation", D, "topic"),
    ("topic.created", "Topic Created Date", D, "topic"),
    ("topic.modified", "Topic Modified Date", D, "topic"),
    ("topic.status", "Topic Status", D, "topic"),
    ("topic.copyright", "Topic Copyright", D, "topic"),
    ("topic.synonym", "Synonym", D, "topic"),
    ("topic.etiology", "Etiology", D, "topic"),
    ("topic.imaging_findings", "Imaging Findings", D, "topic"),
    ("topic.treatment_overview", "Treatment Overview", D, "topic"),
    ("topic.prognosis_overview", "Prognosis Overview", D, "topic"),
    ("topic.references", "References", D, "topic"),
    ("topic.section", "Section", D, "topic"),
    ("topic.subsection", "Subsection", D, "topic"),
    ("topic.organ_system", "Organ System", D, "topic"),
    ("topic.related_case", "Related Case", L, "topic"),
]


def medpix_schema() -> MetadataSchema:
    elements: dict[str, ElementType] = {}
    positions: dict[Optional[str], int] = {}
    for eid, name, kind, parent in _ELEMENTS:
        pos = positions.get(parent, 0)
        positions[parent] = pos + 1
        elements[eid] = ElementType(id=eid, name=name, kind=kind, parent=parent, position=pos)
    return MetadataSchema(elements=elements, version=0)


# --- sources -----------------------------------------------------------------


class MedPixSource(Protocol):
    """Where records come from; implementations must return None for misses."""

    def get_case(self, case_id: str) -> Optional[dict]: ...

    def get_topic(self, topic_id: str) -> Optional[dict]: ...

    def get_case_url(self, case_id: str) -> Optional[str]: ...

    def get_image(self, name: str) -> Optional[bytes]: ...


class DiskSource:
    """Reads the crawl fixture layout straight from a directory.

    Layout: cases/<id>.json, topics/<id>.json, images/<name>.
    """

    def __init__(self, root: Path):
        self.root = Path(root)

    def _read_json(self, rel: str) -> Optional[dict]:
        path = self.root / rel
        if not path.is_file():
            return None
        try:
            return json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RecordParseError(str(path), str(exc)) from exc

    def get_case(self, case_id: str) -> Optional[dict]:
        return self._read_json(f"cases/{case_id}.json")

    def get_topic(self, topic_id: str) -> Optional[dict]:
        return self._read_json(f"topics/{topic_id}.json")

    def get_case_url(self, case_id: str) -> Optional[str]:
        record = self.get_case(case_id)
        return record.get("url") if record else None

    def get_image(self, name: str) -> Optional[bytes]:
        path = self.root / "images" / name
        return path.read_bytes() if path.is_file() else None


class HttpSource:
    """Talks to a MedPix-style REST service."""

    def __init__(self, base_url: str, client: Optional[httpx.Client] = None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=30.0)

    def _get(self, path: str) -> Optional[httpx.Response]:
        try:
            response = self.client.get(f"{self.base_url}{path}")
        except httpx.HTTPError as exc:
            raise EndpointUnreachable(f"GET {self.base_url}{path}: {exc}") from exc
        if response.status_code == 404:
            return None
        if response.status_code != 200:
            raise EndpointUnreachable(
                f"GET {self.base_url}{path} returned {response.status_code}"
            )
        return response

    def _get_json(self, path: str) -> Optional[dict]:
        response = self._get(path)
        if response is None:
            return None
        try:
            return response.json()
        except ValueError as exc:
            raise RecordParseError(path, f"invalid JSON: {exc}") from exc

    def get_case(self, case_id: str) -> Optional[dict]:
        return self._get_json(f"/cases/{case_id}")

    def get_topic(self, topic_id: str) -> Optional[dict]:
        return self._get_json(f"/topics/{topic_id}")

    def get_case_url(self, case_id: str) -> Optional[str]:
        payload = self._get_json(f"/cases/{case_id}/url")
        return payload.get("url") if payload else None

    def get_image(self, name: str) -> Optional[bytes]:
        response = self._get(f"/images/{name}")
        return response.content if response is not None else None


# --- crawl -------------------------------------------------------------------


@dataclass
class CrawlConfig:
    case_seeds: list[str] = dc_field(default_factory=list)
    topic_seeds: list[str] = dc_field(default_factory=list)
    max_documents: Optional[int] = None
    politeness_delay: float = 0.0


@dataclass
class _Fetched:
    kind: str  # "case" | "topic"
    record: dict
    url: Optional[str] = None


def _string(value) -> str:
    return value if isinstance(value, str) else json.dumps(value, ensure_ascii=False)


def _require_id(record: dict, location: str) -> str:
    uid = record.get("uid")
    if not isinstance(uid, (str, int)) or str(uid) == "":
        raise RecordParseError(location, "record has no usable 'uid' field")
    return str(uid)


def _refs(record: dict, key: str) -> list[str]:
    out = []
    for ref in record.get(key) or []:
        out.append(str(ref))
    return out


def crawl(
    source: MedPixSource, config: CrawlConfig
) -> tuple[dict[str, _Fetched], bool, list[str]]:
    """Breadth-first closure over case<->topic references.

    Returns the fetched records keyed by document id, whether the document
    cap cut the crawl short, and warnings for advertised references that
    turned out not to exist (their links are simply dropped). Seeds that do
    not exist raise SeedNotFound.
    """
    fetched: dict[str, _Fetched] = {}
    missing: list[str] = []
    queue: list[tuple[str, str, bool]] = []  # (kind, id, is_seed)
    enqueued: set[tuple[str, str]] = set()

    for case_id in config.case_seeds:
        queue.append(("case", str(case_id), True))
        enqueued.add(("case", str(case_id)))
    for topic_id in config.topic_seeds:
        queue.append(("topic", str(topic_id), True))
        enqueued.add(("topic", str(topic_id)))

    capped = False
    while queue:
        if config.max_documents is not None and len(fetched) >= config.max_documents:
            capped = True
            break
        kind, rid, is_seed = queue.pop(0)
        if config.politeness_delay > 0:
            time.sleep(config.politeness_delay)
        record = source.get_case(rid) if kind == "case" else source.get_topic(rid)
        if record is None:
            if is_seed:
                raise SeedNotFound(f"{kind}:{rid}")
            missing.append(f"referenced {kind} {rid} does not exist; links to it dropped")
            continue
        doc_id = _require_id(record, f"{kind}/{rid}")
        if doc_id != rid:
            raise RecordParseError(f"{kind}/{rid}", f"record declares uid {doc_id!r}")
        if doc_id in fetched:
            raise MappingError(
                f"{kind} {rid} collides with an already fetched document id"
            )
        url = source.get_case_url(rid) if kind == "case" else None
        fetched[doc_id] = _Fetched(kind=kind, record=record, url=url)

        next_kind = "topic" if kind == "case" else "case"
        for ref in _refs(record, "topics" if kind == "case" else "cases"):
            key = (next_kind, ref)
            if key not in enqueued:
                enqueued.add(key)
                queue.append((next_kind, ref, False))
    return fetched, capped, missing


# --- record -> document mapping ------------------------------------------------

_CASE_SCALARS = [
    # (element id, path into the raw record)
    ("case.uid", ("uid",)),
    ("case.acr_code", ("acr_code",)),
    ("case.url", ("_case_url",)),  # injected from the /url endpoint
    ("case.contributor", ("meta", "contributor")),
    ("case.contributor_affiliation", ("meta", "contributor_affiliation")),
    ("case.editor", ("meta", "editor")),
    ("case.reviewer", ("meta", "reviewer")),
    ("case.review_date", ("meta", "review_date")),
    ("case.created", ("meta", "created")),
    ("case.modified", ("meta", "modified")),
    ("case.status", ("meta", "status")),
    ("case.copyright", ("meta", "copyright")),
    ("case.sex", ("patient", "sex")),
    ("case.age", ("patient", "age")),
    ("case.ethnic_group", ("patient", "ethnic_group")),
    ("case.species", ("patient", "species")),
    ("case.clinical_history", ("history", "clinical")),
    ("case.history", ("history", "general")),
    ("case.exam", ("exam",)),
    ("case.findings", ("findings",)),
    ("case.ddx", ("differential",)),
    ("case.diagnosis", ("diagnosis",)),
    ("case.diagnosis_confirmation", ("diagnosis_confirmation",)),
    ("case.discussion", ("discussion",)),
    ("case.treatment", ("treatment",)),
    ("case.followup", ("followup",)),
    ("case.prognosis", ("prognosis",)),
    ("case.pathology", ("pathology",)),
]

_ENCOUNTER_SCALARS = [
    ("case.encounter.type", "type"),
    ("case.encounter.note", "note"),
    ("case.encounter.facility", "facility"),
    ("case.encounter.date", "date"),
]

_IMAGE_SCALARS = [
    ("case.image.caption", "caption"),
    ("case.image.modality", "modality"),
    ("case.image.plane", "plane"),
    ("case.image.width", "width"),
    ("case.image.height", "height"),
    ("case.image.format", "format"),
]

_TOPIC_SCALARS = [
    ("topic.uid", ("uid",)),
    ("topic.acr_code", ("acr", "code")),
    ("topic.category", ("acr", "category")),
    ("topic.subcategory", ("acr", "subcategory")),
    ("topic.discussion", ("discussion",)),
    ("topic.anatomy", ("anatomy",)),
    ("topic.pathophysiology", ("pathophysiology",)),
    ("topic.epidemiology", ("epidemiology",)),
    ("topic.url", ("url",)),
    ("topic.contributor", ("meta", "contributor")),
    ("topic.contributor_affiliation", ("meta", "contributor_affiliation")),
    ("topic.created", ("meta", "created")),
    ("topic.modified", ("meta", "modified")),
    ("topic.status", ("meta", "status")),
    ("topic.copyright", ("meta", "copyright")),
    ("topic.etiology", ("etiology",)),
    ("topic.imaging_findings", ("imaging_findings",)),
    ("topic.treatment_overview", ("treatment_overview",)),
    ("topic.prognosis_overview", ("prognosis_overview",)),
    ("topic.references", ("references",)),
    ("topic.section", ("section",)),
    ("topic.subsection", ("subsection",)),
    ("topic.organ_system", ("organ_system",)),
]


def _dig(record: dict, path: tuple[str, ...]):
    current = record
    for key in path:
        if not isinstance(current, dict) or key not in current:
            return None
        current = current[key]
    return current


def _scalar_values(record: dict, mapping) -> list[tuple[str, FieldValue]]:
    out = []
    for eid, path in mapping:
        raw = _dig(record, path)
        if raw is not None and raw != "":
            out.append((eid, DescriptiveText(_string(raw))))
    return out


@dataclass
class _ImagePlan:
    """A resource to create for an image entry, resolved during mapping."""
    resource_id: str
    file_name: Optional[str]
    external_url: Optional[str]
    media_type: str
    caption: Optional[str]


def _media_type_for(name: str) -> str:
    guessed, _ = mimetypes.guess_type(name)
    return guessed or "application/octet-stream"


def map_case(
    doc_id: str,
    fetched: _Fetched,
    imported_ids: set[str],
) -> tuple[MetadataDocument, list[_ImagePlan], int, int]:
    """Build the case document plus the image resources it needs."""
    record = dict(fetched.record)
    if fetched.url:
        record["_case_url"] = fetched.url
    title = _string(record.get("title") or f"Case {doc_id}")
    values: list[tuple[str, FieldValue]] = [("case.title", DescriptiveText(title))]
    values.extend(_scalar_values(record, _CASE_SCALARS))

    images: list[_ImagePlan] = []
    for n, entry in enumerate(record.get("images") or [], start=1):
        if not isinstance(entry, dict):
            raise RecordParseError(f"case/{doc_id}", f"image entry {n} is not an object")
        file_name = entry.get("file")
        external = entry.get("external_url")
        if not file_name and not external:
            raise RecordParseError(
                f"case/{doc_id}", f"image entry {n} names neither a file nor a URL"
            )
        plan = _ImagePlan(
            resource_id=f"img-{doc_id}-{n}",
            file_name=file_name,
            external_url=external,
            media_type=_media_type_for(file_name or external),
            caption=entry.get("caption"),
        )
        images.append(plan)
        children: list[tuple[str, FieldValue]] = []
        caption = entry.get("caption")
        if caption not in (None, ""):
            children.append(("case.image.caption", DescriptiveText(_string(caption))))
        children.append(("case.image.file", ResourceRef(plan.resource_id)))
        for eid, key in _IMAGE_SCALARS:
            raw = entry.get(key)
            if eid != "case.image.caption" and raw is not None and raw != "":
                children.append((eid, DescriptiveText(_string(raw))))
        values.append(("case.image", StructuralGroup(tuple(children))))

    for entry in record.get("encounters") or []:
        if not isinstance(entry, dict):
            raise RecordParseError(f"case/{doc_id}", "encounter entry is not an object")
        children = [
            (eid, DescriptiveText(_string(entry[key])))
            for eid, key in _ENCOUNTER_SCALARS
            if entry.get(key) is not None and entry.get(key) != ""
        ]
        values.append(("case.encounter", StructuralGroup(tuple(children))))

    resolved = dropped = 0
    for ref in _refs(record, "topics"):
        if ref in imported_ids:
            values.append(("case.related_topic", LinkRef(ref)))
            resolved += 1
        else:
            dropped += 1

    doc = MetadataDocument(
        id=doc_id, title=title, values=(("case", StructuralGroup(tuple(values))),)
    )
    return doc, images, resolved, dropped


def map_topic(
    doc_id: str, fetched: _Fetched, imported_ids: set[str]
) -> tuple[MetadataDocument, int, int]:
    record = fetched.record
    title = _string(record.get("title") or f"Topic {doc_id}")
    values: list[tuple[str, FieldValue]] = [("topic.title", DescriptiveText(title))]
    values.extend(_scalar_values(record, _TOPIC_SCALARS))
    for keyword in record.get("keywords") or []:
        values.append(("topic.keyword", DescriptiveText(_string(keyword))))
    for synonym in record.get("synonyms") or []:
        values.append(("topic.synonym", DescriptiveText(_string(synonym))))

    resolved = dropped = 0
    for ref in _refs(record, "cases"):
        if ref in imported_ids:
            values.append(("topic.related_case", LinkRef(ref)))
            resolved += 1
        else:
            dropped += 1

    doc = MetadataDocument(
        id=doc_id, title=title, values=(("topic", StructuralGroup(tuple(values))),)
    )
    return doc, resolved, dropped


# --- the import build --------------------------------------------------------


def run_import(
    store: CollectionStore,
    collection_id: str,
    source: MedPixSource,
    config: CrawlConfig,
) -> ImportReport:
    """Crawl, map, fetch images, and commit everything in one transaction."""
    fetched, capped, missing = crawl(source, config)
    report = ImportReport(plugin="medpix", capped=capped)
    report.warnings.extend(missing)
    if capped:
        message = (
            f"document cap {config.max_documents} reached; "
            f"{len(fetched)} records imported, frontier abandoned"
        )
        warnings.warn(message, CapExceededWarning, stacklevel=2)
        report.warnings.append(message)

    imported_ids = set(fetched)
    documents: list[MetadataDocument] = []
    image_plans: list[_ImagePlan] = []
    for doc_id in fetched:
        item = fetched[doc_id]
        if item.kind == "case":
            doc, images, resolved, dropped = map_case(doc_id, item, imported_ids)
            image_plans.extend(images)
        else:
            doc, resolved, dropped = map_topic(doc_id, item, imported_ids)
        documents.append(doc)
        report.links_resolved += resolved
        report.links_dropped += dropped

    # blobs are content-addressed and orphan-safe, so fetch outside the txn
    from ..model import ExternalUrl, LocalBlob, Resource

    new_resources: dict[str, Resource] = {}
    for plan in image_plans:
        if plan.file_name is not None:
            data = source.get_image(plan.file_name)
            if data is None:
                raise RecordParseError(
                    f"images/{plan.file_name}", "image advertised by a record is missing"
                )
            sha = store.put_blob(collection_id, data)
            origin = LocalBlob(sha)
            size = len(data)
        else:
            origin = ExternalUrl(plan.external_url)
            size = 0
        new_resources[plan.resource_id] = Resource(
            id=plan.resource_id, media_type=plan.media_type,
            origin=origin, caption=plan.caption, byte_size=size,
        )

    schema = medpix_schema()

    def mutation(collection: Collection) -> Collection:
        if collection.schema.element_count == 0:
            base = schema
        elif set(collection.schema.elements) == set(schema.elements):
            base = collection.schema
        else:
            raise MappingError(
                "collection already has a different schema; import into a fresh "
                "collection or one previously imported from the same source"
            )
        from dataclasses import replace as dc_replace

        resources = dict(collection.resources)
        resources.update(new_resources)
        merged = dict(collection.documents)
        for doc in documents:
            merged[doc.id] = doc
        return dc_replace(collection, schema=base, documents=merged, resources=resources)

    store.transact(
        collection_id, mutation, label="import",
        summary={
            "plugin": "medpix",
            "documents": len(documents),
            "resources": len(new_resources),
        },
    )
    report.documents_imported = len(documents)
    report.resources_imported = len(new_resources)
    return report


def run_from_config(
    store: CollectionStore, collection_id: str, config: dict
) -> ImportReport:
    """Uniform entry point: build source and crawl settings from a plain dict.

    Expected shape::

        {"source": {"kind": "disk", "root": "..."}        # or
                   {"kind": "http", "base_url": "..."},
         "case_seeds": [...], "topic_seeds": [...],
         "max_documents": 100, "politeness_delay": 0.25}
    """
    src = config.get("source") or {}
    kind = src.get("kind", "disk")
    if kind == "disk":
        root = src.get("root")
        if not root:
            raise MappingError("disk source needs a 'root' directory")
        source: MedPixSource = DiskSource(Path(root))
    elif kind == "http":
        base_url = src.get("base_url")
        if not base_url:
            raise MappingError("http source needs a 'base_url'")
        source = HttpSource(base_url)
    else:
        raise MappingError(f"unknown source kind {kind!r}; use 'disk' or 'http'")

    crawl_config = CrawlConfig(
        case_seeds=[str(s) for s in config.get("case_seeds") or []],
        topic_seeds=[str(s) for s in config.get("topic_seeds") or []],
        max_documents=config.get("max_documents"),
        politeness_delay=float(config.get("politeness_delay") or 0.0),
    )
    if not crawl_config.case_seeds and not crawl_config.topic_seeds:
        raise MappingError("at least one case or topic seed is required")
    return run_import(store, collection_id, source, crawl_config)


register_plugin(ImportPluginDescriptor(
    name="medpix",
    version="1.0",
    description="Crawl a MedPix-style case/topic service into a collection",
    build=run_from_config,
))
