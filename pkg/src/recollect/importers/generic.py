"""Generic JSON importer: infer a schema from records, then map them.

For sources without a dedicated plugin. The schema is the union of key
paths over all records: objects become structural elements, lists repeat
their element, scalars become descriptive text. A mapping config names the
id/title keys and may declare link keys.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from ..errors import MappingError, RecordParseError
from ..model import (
    Collection,
    DescriptiveText,
    ElementKind,
    ElementType,
    FieldValue,
    LinkRef,
    MetadataDocument,
    MetadataSchema,
    StructuralGroup,
)
from ..store import CollectionStore
from . import ImportPluginDescriptor, ImportReport, register_plugin


@dataclass(frozen=True)
class GenericMapping:
    id_key: str = "id"
    title_key: Optional[str] = None
    # dotted key paths whose scalar values reference other records by id
    link_keys: frozenset = field(default_factory=frozenset)


def _slug(key: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", key.lower()).strip("-") or "key"


def _is_scalar(value) -> bool:
    return isinstance(value, (str, int, float, bool))


def infer_schema(records: list[dict], mapping: GenericMapping) -> MetadataSchema:
    """Union the key paths of every record into one schema."""
    elements: dict[str, ElementType] = {}
    positions: dict[Optional[str], int] = {}

    def ensure(path: tuple[str, ...], kind: ElementKind, key: str) -> str:
        eid = ".".join(_slug(p) for p in path)
        parent = ".".join(_slug(p) for p in path[:-1]) or None
        existing = elements.get(eid)
        if existing is not None:
            if existing.kind is not kind:
                raise MappingError(
                    f"key path {'/'.join(path)} is sometimes {existing.kind.value}, "
                    f"sometimes {kind.value}"
                )
            return eid
        pos = positions.get(parent, 0)
        positions[parent] = pos + 1
        elements[eid] = ElementType(id=eid, name=key, kind=kind, parent=parent, position=pos)
        return eid

    def walk(obj: dict, prefix: tuple[str, ...]) -> None:
        for key, value in obj.items():
            if key == mapping.id_key and not prefix:
                continue
            path = prefix + (key,)
            dotted = ".".join(path)
            if value is None:
                continue
            if isinstance(value, dict):
                ensure(path, ElementKind.STRUCTURAL, key)
                walk(value, path)
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, dict):
                        ensure(path, ElementKind.STRUCTURAL, key)
                        walk(item, path)
                    elif _is_scalar(item):
                        kind = (
                            ElementKind.LINK
                            if dotted in mapping.link_keys else ElementKind.DESCRIPTIVE
                        )
                        ensure(path, kind, key)
            elif _is_scalar(value):
                kind = (
                    ElementKind.LINK
                    if dotted in mapping.link_keys else ElementKind.DESCRIPTIVE
                )
                ensure(path, kind, key)
            else:
                raise MappingError(f"unsupported value type at {dotted}: {type(value)}")

    for record in records:
        if not isinstance(record, dict):
            raise MappingError("generic import expects a list of JSON objects")
        walk(record, ())
    return MetadataSchema(elements=elements, version=0)


def record_to_document(
    record: dict, schema: MetadataSchema, mapping: GenericMapping, known_ids: set[str]
) -> MetadataDocument:
    raw_id = record.get(mapping.id_key)
    if raw_id is None or str(raw_id) == "":
        raise RecordParseError(mapping.id_key, "record has no id value")
    doc_id = str(raw_id)

    def build(obj: dict, prefix: tuple[str, ...]) -> tuple[tuple[str, FieldValue], ...]:
        out: list[tuple[str, FieldValue]] = []
        for key, value in obj.items():
            if key == mapping.id_key and not prefix:
                continue
            if value is None:
                continue
            path = prefix + (key,)
            eid = ".".join(_slug(p) for p in path)
            dotted = ".".join(path)
            items = value if isinstance(value, list) else [value]
            for item in items:
                if isinstance(item, dict):
                    out.append((eid, StructuralGroup(build(item, path))))
                elif _is_scalar(item):
                    if dotted in mapping.link_keys:
                        target = str(item)
                        if target in known_ids:
                            out.append((eid, LinkRef(target)))
                    else:
                        text = item if isinstance(item, str) else json.dumps(item)
                        out.append((eid, DescriptiveText(text)))
        return tuple(out)

    title = record.get(mapping.title_key) if mapping.title_key else None
    return MetadataDocument(
        id=doc_id,
        title=str(title) if title else doc_id,
        values=build(record, ()),
    )


def _link_counts(
    records: list[dict], mapping: GenericMapping, known_ids: set[str]
) -> tuple[int, int]:
    """(resolved, dropped) link values, using the same skip rules as build."""
    resolved = dropped = 0

    def walk(obj: dict, prefix: tuple[str, ...]) -> None:
        nonlocal resolved, dropped
        for key, value in obj.items():
            if key == mapping.id_key and not prefix:
                continue
            if value is None:
                continue
            path = prefix + (key,)
            dotted = ".".join(path)
            items = value if isinstance(value, list) else [value]
            for item in items:
                if isinstance(item, dict):
                    walk(item, path)
                elif _is_scalar(item) and dotted in mapping.link_keys:
                    if str(item) in known_ids:
                        resolved += 1
                    else:
                        dropped += 1

    for record in records:
        walk(record, ())
    return resolved, dropped


def run_generic_import(
    store: CollectionStore,
    collection_id: str,
    records: list[dict],
    mapping: Optional[GenericMapping] = None,
) -> ImportReport:
    mapping = mapping or GenericMapping()
    schema = infer_schema(records, mapping)
    known_ids = {
        str(r[mapping.id_key]) for r in records if r.get(mapping.id_key) is not None
    }
    documents = [record_to_document(r, schema, mapping, known_ids) for r in records]
    seen: set[str] = set()
    for doc in documents:
        if doc.id in seen:
            raise MappingError(f"duplicate record id {doc.id!r}")
        seen.add(doc.id)

    def mutation(collection: Collection) -> Collection:
        if collection.schema.element_count not in (0, schema.element_count):
            raise MappingError("collection already holds a different schema")
        merged = dict(collection.documents)
        for doc in documents:
            merged[doc.id] = doc
        return replace(collection, schema=schema, documents=merged)

    store.transact(
        collection_id, mutation, label="import",
        summary={"plugin": "generic-json", "documents": len(documents)},
    )
    resolved, dropped = _link_counts(records, mapping, known_ids)
    return ImportReport(
        plugin="generic-json",
        documents_imported=len(documents),
        links_resolved=resolved,
        links_dropped=dropped,
    )


def load_records(path: Path) -> list[dict]:
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise RecordParseError(str(path), str(exc)) from exc
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list):
        raise RecordParseError(str(path), "expected a JSON array of records")
    return payload


def run_from_config(
    store: CollectionStore, collection_id: str, config: dict
) -> ImportReport:
    """Uniform entry point: records inline or from a file, mapping as a dict."""
    if "records" in config:
        records = config["records"]
        if not isinstance(records, list):
            raise RecordParseError("<inline>", "'records' must be a list")
    elif "records_path" in config:
        records = load_records(Path(config["records_path"]))
    else:
        raise MappingError("config needs 'records' or 'records_path'")
    m = config.get("mapping") or {}
    mapping = GenericMapping(
        id_key=m.get("id_key", "id"),
        title_key=m.get("title_key"),
        link_keys=frozenset(m.get("link_keys") or ()),
    )
    return run_generic_import(store, collection_id, records, mapping)


register_plugin(ImportPluginDescriptor(
    name="generic-json",
    version="1.0",
    description="Infer a schema from JSON records and import them",
    build=run_from_config,
))
