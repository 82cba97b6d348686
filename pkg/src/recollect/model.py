"""Canonical representation of a collection: schema, documents, resources.

A collection is modelled as a hierarchical metadata schema (a forest of
element types), a set of metadata documents holding element/value pairs,
and a set of resources (local blobs or external URLs). All types are
treated as immutable values; edits produce new instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional, Union
from urllib.parse import urlparse

from .errors import UnknownDocument


class ElementKind(str, Enum):
    DESCRIPTIVE = "descriptive"
    RESOURCE = "resource"
    LINK = "link"
    STRUCTURAL = "structural"


@dataclass(frozen=True)
class ElementType:
    """A node of the metadata schema.

    ``id`` is an opaque stable identifier: renames and moves never change it.
    ``parent`` must reference a structural element (or None for roots),
    ``position`` is the ordinal among siblings. ``attributes`` carries
    free-form hints such as the export role (see the IMS CP exporter).
    """

    id: str
    name: str
    kind: ElementKind
    parent: Optional[str] = None
    position: int = 0
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class MetadataSchema:
    """Ordered forest of element types, versioned per reconfiguration."""

    elements: dict[str, ElementType] = field(default_factory=dict)
    version: int = 0

    def element(self, element_id: str) -> Optional[ElementType]:
        return self.elements.get(element_id)

    @property
    def element_count(self) -> int:
        return len(self.elements)

    def children(self, parent: Optional[str]) -> list[ElementType]:
        kids = [e for e in self.elements.values() if e.parent == parent]
        kids.sort(key=lambda e: (e.position, e.id))
        return kids

    def roots(self) -> list[ElementType]:
        return self.children(None)

    def walk(self) -> Iterator[ElementType]:
        """Preorder traversal of the whole forest."""
        stack = list(reversed(self.roots()))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(self.children(node.id)))

    def ancestors(self, element_id: str) -> list[str]:
        """Ids of strict ancestors, nearest first. Guards against cycles."""
        out: list[str] = []
        seen = set()
        cur = self.elements.get(element_id)
        while cur is not None and cur.parent is not None:
            if cur.parent in seen:
                break
            seen.add(cur.parent)
            out.append(cur.parent)
            cur = self.elements.get(cur.parent)
        return out

    def path_to_root(self, element_id: str) -> list[str]:
        """Structural ancestor chain from the root down to (excluding) the element."""
        return list(reversed(self.ancestors(element_id)))

    def preorder_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.walk())}


# --- field values --------------------------------------------------------------

@dataclass(frozen=True)
class DescriptiveText:
    text: str


@dataclass(frozen=True)
class ResourceRef:
    resource_id: str


@dataclass(frozen=True)
class LinkRef:
    document_id: str


@dataclass(frozen=True)
class StructuralGroup:
    children: tuple[tuple[str, "FieldValue"], ...] = ()


FieldValue = Union[DescriptiveText, ResourceRef, LinkRef, StructuralGroup]

_VALUE_KIND = {
    DescriptiveText: ElementKind.DESCRIPTIVE,
    ResourceRef: ElementKind.RESOURCE,
    LinkRef: ElementKind.LINK,
    StructuralGroup: ElementKind.STRUCTURAL,
}


def value_kind(value: FieldValue) -> ElementKind:
    return _VALUE_KIND[type(value)]


# --- resources -------------------------------------------------------------------

@dataclass(frozen=True)
class LocalBlob:
    sha256: str


@dataclass(frozen=True)
class ExternalUrl:
    url: str


@dataclass(frozen=True)
class Resource:
    id: str
    media_type: str
    origin: Union[LocalBlob, ExternalUrl]
    caption: Optional[str] = None
    byte_size: int = 0


def is_absolute_url(url: str) -> bool:
    parsed = urlparse(url)
    return bool(parsed.scheme) and bool(parsed.netloc)


# --- documents --------------------------------------------------------------------

@dataclass(frozen=True)
class MetadataDocument:
    id: str
    title: str
    values: tuple[tuple[str, FieldValue], ...] = ()


@dataclass(frozen=True)
class Collection:
    id: str
    name: str
    schema: MetadataSchema = field(default_factory=MetadataSchema)
    documents: dict[str, MetadataDocument] = field(default_factory=dict)
    resources: dict[str, Resource] = field(default_factory=dict)
    revision: int = 0

    def document(self, document_id: str) -> Optional[MetadataDocument]:
        return self.documents.get(document_id)

    def with_documents(self, docs: Iterable[MetadataDocument]) -> "Collection":
        merged = dict(self.documents)
        for d in docs:
            merged[d.id] = d
        return replace(self, documents=merged)


# --- validation ---------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    document_id: Optional[str] = None


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def per_document(self) -> dict[str, list[Violation]]:
        out: dict[str, list[Violation]] = {}
        for v in self.violations:
            if v.document_id is not None:
                out.setdefault(v.document_id, []).append(v)
        return out

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def _as_values(source) -> Iterable[tuple[str, FieldValue]]:
    return source.values if isinstance(source, MetadataDocument) else source


def iter_link_targets(source) -> Iterator[str]:
    """Document ids referenced by LinkRef values, in document order, groups included.

    Accepts a document or a raw values sequence.
    """
    for _, value in _as_values(source):
        if isinstance(value, LinkRef):
            yield value.document_id
        elif isinstance(value, StructuralGroup):
            yield from iter_link_targets(value.children)


def iter_resource_ids(source) -> Iterator[str]:
    for _, value in _as_values(source):
        if isinstance(value, ResourceRef):
            yield value.resource_id
        elif isinstance(value, StructuralGroup):
            yield from iter_resource_ids(value.children)


def validate_document(
    doc: MetadataDocument,
    schema: MetadataSchema,
    collection: Collection,
) -> list[Violation]:
    """Check one document against the schema and the collection's reference sets.

    Violations are data, not errors: an empty list means the document conforms.
    """
    violations: list[Violation] = []

    def check(values: Iterable[tuple[str, FieldValue]], group_element: Optional[str]) -> None:
        for element_id, value in values:
            element = schema.element(element_id)
            if element is None:
                violations.append(Violation(
                    "UnknownElement",
                    f"document {doc.id} references unknown element {element_id!r}",
                    doc.id,
                ))
                continue
            if value_kind(value) is not element.kind:
                violations.append(Violation(
                    "KindMismatch",
                    f"value for {element_id!r} is {value_kind(value).value}, "
                    f"element kind is {element.kind.value}",
                    doc.id,
                ))
                continue
            if element.parent != group_element:
                where = f"group {group_element!r}" if group_element else "the top level"
                violations.append(Violation(
                    "MisplacedValue",
                    f"element {element_id!r} (parent {element.parent!r}) placed at {where}",
                    doc.id,
                ))
            if isinstance(value, LinkRef):
                if value.document_id not in collection.documents:
                    violations.append(Violation(
                        "DanglingLink",
                        f"link to missing document {value.document_id!r}",
                        doc.id,
                    ))
            elif isinstance(value, ResourceRef):
                if value.resource_id not in collection.resources:
                    violations.append(Violation(
                        "DanglingResource",
                        f"reference to missing resource {value.resource_id!r}",
                        doc.id,
                    ))
            elif isinstance(value, StructuralGroup):
                check(value.children, element_id)

    check(doc.values, None)
    return violations


def validate_schema(schema: MetadataSchema) -> list[Violation]:
    violations: list[Violation] = []
    for element in schema.elements.values():
        if element.parent is not None:
            parent = schema.element(element.parent)
            if parent is None:
                violations.append(Violation(
                    "BadParent",
                    f"element {element.id!r} has missing parent {element.parent!r}",
                ))
            elif parent.kind is not ElementKind.STRUCTURAL:
                violations.append(Violation(
                    "BadParent",
                    f"element {element.id!r} has non-structural parent {element.parent!r}",
                ))
        # cycle detection: parent chain must terminate within element_count steps
        steps = 0
        cur = element
        while cur is not None and cur.parent is not None:
            steps += 1
            if steps > schema.element_count:
                violations.append(Violation(
                    "ParentCycle",
                    f"parent chain from {element.id!r} does not reach a root",
                ))
                break
            cur = schema.element(cur.parent)
    # sibling names must be unique under a common parent
    seen: dict[tuple[Optional[str], str], str] = {}
    for element in schema.elements.values():
        key = (element.parent, element.name)
        if key in seen:
            violations.append(Violation(
                "DuplicateSiblingName",
                f"elements {seen[key]!r} and {element.id!r} share name "
                f"{element.name!r} under parent {element.parent!r}",
            ))
        else:
            seen[key] = element.id
    return violations


def validate_collection(
    collection: Collection,
    blob_exists: Optional[Callable[[str], bool]] = None,
) -> ValidationReport:
    """Aggregate schema checks, per-document checks and resource checks.

    ``blob_exists`` is supplied by the store so local blob hashes can be
    verified against stored bytes; in-memory collections may omit it.
    """
    report = ValidationReport()
    report.violations.extend(validate_schema(collection.schema))
    for resource in collection.resources.values():
        if isinstance(resource.origin, ExternalUrl):
            if not is_absolute_url(resource.origin.url):
                report.violations.append(Violation(
                    "InvalidUrl",
                    f"resource {resource.id!r} has non-absolute URL {resource.origin.url!r}",
                ))
        elif blob_exists is not None and not blob_exists(resource.origin.sha256):
            report.violations.append(Violation(
                "MissingBlob",
                f"resource {resource.id!r} references missing blob {resource.origin.sha256}",
            ))
    for doc in collection.documents.values():
        report.violations.extend(validate_document(doc, collection.schema, collection))
    return report


def reachable_documents(collection: Collection, roots: Iterable[str]) -> list[str]:
    """Depth-first preorder closure over link values.

    Roots are expanded in the given order; each document appears once, at its
    first-visit position. The result is independent of document storage order.
    """
    roots = list(roots)
    for root in roots:
        if root not in collection.documents:
            raise UnknownDocument(f"unknown document: {root}")
    out: list[str] = []
    seen: set[str] = set()

    def visit(doc_id: str) -> None:
        if doc_id in seen or doc_id not in collection.documents:
            return
        seen.add(doc_id)
        out.append(doc_id)
        for target in iter_link_targets(collection.documents[doc_id].values):
            visit(target)

    for root in roots:
        visit(root)
    return out
