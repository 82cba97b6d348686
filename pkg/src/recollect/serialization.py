"""Canonical JSON encoding for schemas, documents, resources and plans.

One encoding is used everywhere (store files, HTTP bodies, plan files):
UTF-8, two-space indent, sorted object keys, trailing newline. Saving a
loaded collection therefore reproduces the exact bytes.
"""

from __future__ import annotations

import json
from typing import Any

from .model import (
    Collection,
    DescriptiveText,
    ElementKind,
    ElementType,
    ExternalUrl,
    FieldValue,
    LinkRef,
    LocalBlob,
    MetadataDocument,
    MetadataSchema,
    Resource,
    ResourceRef,
    StructuralGroup,
)


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


# --- field values ---------------------------------------------------------

def value_to_dict(value: FieldValue) -> dict:
    if isinstance(value, DescriptiveText):
        return {"kind": "descriptive", "text": value.text}
    if isinstance(value, ResourceRef):
        return {"kind": "resource", "resource_id": value.resource_id}
    if isinstance(value, LinkRef):
        return {"kind": "link", "document_id": value.document_id}
    if isinstance(value, StructuralGroup):
        return {
            "kind": "structural",
            "children": [[eid, value_to_dict(v)] for eid, v in value.children],
        }
    raise TypeError(f"not a field value: {value!r}")


def value_from_dict(data: dict) -> FieldValue:
    kind = data["kind"]
    if kind == "descriptive":
        return DescriptiveText(data["text"])
    if kind == "resource":
        return ResourceRef(data["resource_id"])
    if kind == "link":
        return LinkRef(data["document_id"])
    if kind == "structural":
        return StructuralGroup(tuple(
            (eid, value_from_dict(v)) for eid, v in data["children"]
        ))
    raise ValueError(f"unknown value kind: {kind!r}")


# --- documents --------------------------------------------------------------

def document_to_dict(doc: MetadataDocument) -> dict:
    return {
        "id": doc.id,
        "title": doc.title,
        "values": [[eid, value_to_dict(v)] for eid, v in doc.values],
    }


def document_from_dict(data: dict) -> MetadataDocument:
    return MetadataDocument(
        id=data["id"],
        title=data["title"],
        values=tuple((eid, value_from_dict(v)) for eid, v in data["values"]),
    )


# --- schema --------------------------------------------------------------------

def element_to_dict(element: ElementType) -> dict:
    return {
        "id": element.id,
        "name": element.name,
        "kind": element.kind.value,
        "parent": element.parent,
        "position": element.position,
        "attributes": dict(sorted(element.attributes.items())),
    }


def element_from_dict(data: dict) -> ElementType:
    return ElementType(
        id=data["id"],
        name=data["name"],
        kind=ElementKind(data["kind"]),
        parent=data.get("parent"),
        position=data.get("position", 0),
        attributes=dict(data.get("attributes", {})),
    )


def schema_to_dict(schema: MetadataSchema) -> dict:
    # preorder keeps the file readable; order semantics live in parent/position
    return {
        "version": schema.version,
        "elements": [element_to_dict(e) for e in schema.walk()],
    }


def schema_from_dict(data: dict) -> MetadataSchema:
    elements = {e["id"]: element_from_dict(e) for e in data["elements"]}
    return MetadataSchema(elements=elements, version=data.get("version", 0))


# --- resources --------------------------------------------------------------------

def resource_to_dict(resource: Resource) -> dict:
    if isinstance(resource.origin, LocalBlob):
        origin = {"type": "local", "sha256": resource.origin.sha256}
    else:
        origin = {"type": "external", "url": resource.origin.url}
    return {
        "id": resource.id,
        "media_type": resource.media_type,
        "origin": origin,
        "caption": resource.caption,
        "byte_size": resource.byte_size,
    }


def resource_from_dict(data: dict) -> Resource:
    raw = data["origin"]
    if raw["type"] == "local":
        origin = LocalBlob(raw["sha256"])
    elif raw["type"] == "external":
        origin = ExternalUrl(raw["url"])
    else:
        raise ValueError(f"unknown resource origin: {raw!r}")
    return Resource(
        id=data["id"],
        media_type=data["media_type"],
        origin=origin,
        caption=data.get("caption"),
        byte_size=data.get("byte_size", 0),
    )


def resources_to_dict(collection: Collection) -> dict:
    return {"resources": [resource_to_dict(r) for r in collection.resources.values()]}


def collection_meta_to_dict(collection: Collection) -> dict:
    return {
        "id": collection.id,
        "name": collection.name,
        "schema_version": collection.schema.version,
        "revision": collection.revision,
    }
