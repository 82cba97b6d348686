"""IMS CP exporter: item tree, HTML rendering, manifest, zip packaging.

The exporter turns a snapshot of a collection into a standard content
package: a depth-first item tree over the link graph (cycles break into
childless repeat items), one rendered HTML resource per exported document,
and an imsmanifest.xml tying them together. Everything is deterministic
once the manifest identifier seed is fixed.
"""

from __future__ import annotations

import mimetypes
import random
import re
import zipfile
from dataclasses import dataclass, field
from io import BytesIO
from typing import Callable, Iterable, Iterator, Optional
from xml.etree import ElementTree
from xml.sax.saxutils import escape, quoteattr

from .errors import EmptyExport, PackagingError, UnknownDocument
from .model import (
    Collection,
    DescriptiveText,
    ElementKind,
    ElementType,
    ExternalUrl,
    LinkRef,
    LocalBlob,
    MetadataDocument,
    ResourceRef,
    StructuralGroup,
    ValidationReport,
    Violation,
    is_absolute_url,
)
from .reconfigure import ANNOTATION_FIELDS, ANNOTATION_NAME

EXPORT_ROLE_ATTR = "export-role"
ROLE_ORGANIZATION_ITEM = "OrganizationItem"
ROLE_RESOURCE_CONTENT = "ResourceContent"

# the source figure garbles these; emitted corrected on purpose
CP_NAMESPACE = "http://www.imsglobal.org/xsd/imscp_v1p1"
MD_NAMESPACE = "http://www.imsglobal.org/xsd/imsmd_v1p2"
XSI_NAMESPACE = "http://www.w3.org/2001/XMLSchema-instance"
SCHEMA_LOCATION = f"{CP_NAMESPACE} imscp_v1p1.xsd {MD_NAMESPACE} imsmd_v1p2p4.xsd"

MANIFEST_PREFIX = "CLAVY_MANIFEST"
ORGANIZATION_PREFIX = "MAIN_TOC"
RESOURCE_PREFIX = "MAIN_RESOURCE"
TOP_ITEM_TITLE = "Total List"
TITLE_LIMIT = 60
MANIFEST_NAME = "imsmanifest.xml"


@dataclass(frozen=True)
class ExportConfig:
    """What to export and how to label it."""

    roots: tuple[str, ...]
    title: str
    language: str = "en-US"
    seed: Optional[int] = None
    depth_limit: Optional[int] = None


@dataclass
class ImsItem:
    identifier: str
    identifier_ref: str
    title: str
    children: list["ImsItem"] = field(default_factory=list)

    def walk(self) -> Iterator["ImsItem"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class ImsResource:
    identifier: str
    href: str
    files: tuple[str, ...]
    type: str = "webcontent"


@dataclass(frozen=True)
class ImsManifest:
    identifier: str
    title: str
    language: str
    organization_id: str
    top: ImsItem
    resources: tuple[ImsResource, ...]
    schema_name: str = "IMS Content"
    schema_version: str = "1.2"


def _truncate(text: str, limit: int = TITLE_LIMIT) -> str:
    if len(text) <= limit:
        return text
    cut = text[:limit]
    if " " in cut:
        cut = cut[: cut.rfind(" ")]
    return cut.rstrip() + " ..."


def _iter_values(values) -> Iterator[tuple[str, object]]:
    """Preorder walk over a value forest, document order preserved."""
    for eid, value in values:
        yield eid, value
        if isinstance(value, StructuralGroup):
            yield from _iter_values(value.children)


def _role(element: Optional[ElementType], default: str) -> str:
    if element is None:
        return default
    return (element.attributes or {}).get(EXPORT_ROLE_ATTR, default)


def _doc_prefix(collection: Collection, doc: MetadataDocument) -> str:
    """Item label prefix: the root group's element name when there is one."""
    if len(doc.values) == 1:
        eid, value = doc.values[0]
        if isinstance(value, StructuralGroup):
            element = collection.schema.element(eid)
            if element is not None:
                return element.name
    return "Item"


def build_item_tree(
    collection: Collection,
    roots: Iterable[str],
    title: str = TOP_ITEM_TITLE,
    depth_limit: Optional[int] = None,
) -> tuple[ImsItem, list[str]]:
    """Depth-first item tree over the link graph, plus the export order.

    The first visit of a document expands its outgoing links into child
    items; every later encounter (cycle or diamond) becomes a childless
    item that shares the already-assigned resource reference, so the tree
    stays finite on any graph. Export order is first-visit order; the
    first root always lands at ordinal 0.
    """
    root_list = [str(r) for r in roots]
    if not root_list:
        raise EmptyExport("export needs at least one root document")
    for doc_id in root_list:
        if collection.document(doc_id) is None:
            raise UnknownDocument(f"unknown document: {doc_id}")

    ordinals: dict[str, int] = {}
    counter = 0

    def resource_ref(doc_id: str) -> str:
        if doc_id not in ordinals:
            ordinals[doc_id] = len(ordinals)
        return f"{RESOURCE_PREFIX}{ordinals[doc_id]}"

    def next_identifier(prefix: str, doc_id: str) -> str:
        nonlocal counter
        identifier = f"{prefix}: {doc_id} {counter}"
        counter += 1
        return identifier

    def expand(doc_id: str, depth: int) -> ImsItem:
        doc = collection.document(doc_id)
        prefix = _doc_prefix(collection, doc)
        first = doc_id not in ordinals
        item = ImsItem(
            identifier=next_identifier(prefix, doc_id),
            identifier_ref=resource_ref(doc_id),
            title=_truncate(f"{prefix}: {doc.title}"),
        )
        if not first or (depth_limit is not None and depth >= depth_limit):
            return item
        for eid, value in _iter_values(doc.values):
            element = collection.schema.element(eid)
            if isinstance(value, LinkRef):
                if _role(element, ROLE_ORGANIZATION_ITEM) != ROLE_ORGANIZATION_ITEM:
                    continue
                if collection.document(value.document_id) is None:
                    continue  # dangling links degrade to text in the HTML
                item.children.append(expand(value.document_id, depth + 1))
            elif (
                isinstance(value, DescriptiveText)
                and element is not None
                and element.kind is ElementKind.DESCRIPTIVE
                and _role(element, ROLE_RESOURCE_CONTENT) == ROLE_ORGANIZATION_ITEM
            ):
                item.children.append(ImsItem(
                    identifier=next_identifier(element.name, doc_id),
                    identifier_ref=item.identifier_ref,
                    title=_truncate(f"{element.name}: {value.text}"),
                ))
        return item

    children = [expand(doc_id, 1) for doc_id in root_list]
    top = ImsItem(
        identifier=TOP_ITEM_TITLE,
        identifier_ref=f"{RESOURCE_PREFIX}{ordinals[root_list[0]]}",
        title=title,
        children=children,
    )
    export_order = sorted(ordinals, key=ordinals.get)
    return top, export_order


# --- file naming -----------------------------------------------------------------


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name) or "doc"


def assign_html_names(export_order: Iterable[str]) -> dict[str, str]:
    """Stable per-document HTML file names, collision-proofed by ordinal."""
    names: dict[str, str] = {}
    taken: set[str] = set()
    for n, doc_id in enumerate(export_order):
        base = _sanitize(doc_id)
        candidate = f"{base}.html"
        if candidate in taken:
            candidate = f"{base}-{n}.html"
        names[doc_id] = candidate
        taken.add(candidate)
    return names


def collect_media(
    collection: Collection, export_order: Iterable[str]
) -> dict[str, str]:
    """Archive paths for every local resource the exported documents use."""
    paths: dict[str, str] = {}
    taken: set[str] = set()
    for doc_id in export_order:
        doc = collection.document(doc_id)
        for eid, value in _iter_values(doc.values):
            if not isinstance(value, ResourceRef) or value.resource_id in paths:
                continue
            resource = collection.resources.get(value.resource_id)
            if resource is None or not isinstance(resource.origin, LocalBlob):
                continue
            ext = mimetypes.guess_extension(resource.media_type) or ""
            candidate = f"media/{_sanitize(resource.id)}{ext}"
            if candidate in taken:
                candidate = f"media/{_sanitize(resource.id)}-{len(paths)}{ext}"
            paths[resource.id] = candidate
            taken.add(candidate)
    return paths


# --- HTML rendering ----------------------------------------------------------------


@dataclass(frozen=True)
class RenderContext:
    """Cross-document knowledge the renderer needs for hrefs."""

    language: str = "en-US"
    html_names: dict = field(default_factory=dict)   # document id -> file name
    media_hrefs: dict = field(default_factory=dict)  # resource id -> archive path


def _is_annotation(element: Optional[ElementType]) -> bool:
    return (
        element is not None
        and element.kind is ElementKind.STRUCTURAL
        and element.name == ANNOTATION_NAME
    )


def _element_name(collection: Collection, eid: str) -> str:
    element = collection.schema.element(eid)
    return element.name if element is not None else eid


def _render_annotations(collection: Collection, groups: list[StructuralGroup]) -> list[str]:
    out = ["<ul class=\"annotations\">"]
    for group in groups:
        fields = {
            _element_name(collection, ceid): value.text
            for ceid, value in group.children
            if isinstance(value, DescriptiveText)
        }
        coords = ", ".join(fields.get(name, "?") for name in ANNOTATION_FIELDS)
        note = fields.get("explanation", "")
        out.append(f"<li>region ({escape(coords)}): {escape(note)}</li>")
    out.append("</ul>")
    return out


def _render_resource(
    collection: Collection,
    rid: str,
    annotations: list[StructuralGroup],
    ctx: RenderContext,
) -> list[str]:
    resource = collection.resources.get(rid)
    if resource is None:
        return [f"<p class=\"missing\">missing resource {escape(rid)}</p>"]
    if isinstance(resource.origin, LocalBlob):
        href = ctx.media_hrefs.get(rid, f"media/{_sanitize(rid)}")
    else:
        href = resource.origin.url
    caption = resource.caption or ""
    if resource.media_type.startswith("image/"):
        out = ["<figure>"]
        alt = caption or resource.id
        out.append(f"<img src={quoteattr(href)} alt={quoteattr(alt)}/>")
        if caption:
            out.append(f"<figcaption>{escape(caption)}</figcaption>")
        if annotations:
            out.extend(_render_annotations(collection, annotations))
        out.append("</figure>")
        return out
    label = caption or resource.id
    return [f"<p class=\"resource\"><a href={quoteattr(href)}>{escape(label)}</a></p>"]


def _render_container(
    collection: Collection,
    values,
    ctx: RenderContext,
    level: int,
) -> list[str]:
    """Render one container's values, grouped per element in schema order.

    Annotation groups are not rendered in the normal flow; they attach to
    the nearest preceding resource value, mirroring how they are stored.
    """
    schema = collection.schema
    attached: dict[int, list[StructuralGroup]] = {}
    order: dict[str, list[int]] = {}
    last_resource: Optional[int] = None
    for i, (eid, value) in enumerate(values):
        element = schema.element(eid)
        if _is_annotation(element) and isinstance(value, StructuralGroup):
            if last_resource is not None:
                attached.setdefault(last_resource, []).append(value)
            continue
        if isinstance(value, ResourceRef):
            last_resource = i
        order.setdefault(eid, []).append(i)

    def sort_key(eid: str):
        element = schema.element(eid)
        return (0, element.position, eid) if element else (1, 0, eid)

    out: list[str] = []
    heading = min(level, 6)
    for eid in sorted(order, key=sort_key):
        name = _element_name(collection, eid)
        for i in order[eid]:
            value = values[i][1]
            if isinstance(value, DescriptiveText):
                out.append(f"<p><strong>{escape(name)}:</strong> {escape(value.text)}</p>")
            elif isinstance(value, LinkRef):
                target = collection.document(value.document_id)
                text = target.title if target is not None else value.document_id
                if value.document_id in ctx.html_names:
                    href = quoteattr(ctx.html_names[value.document_id])
                    out.append(
                        f"<p class=\"link\"><strong>{escape(name)}:</strong> "
                        f"<a href={href}>{escape(text)}</a></p>"
                    )
                else:
                    # not part of this export: plain text, never a broken link
                    out.append(
                        f"<p class=\"link\"><strong>{escape(name)}:</strong> "
                        f"{escape(text)}</p>"
                    )
            elif isinstance(value, ResourceRef):
                out.extend(_render_resource(
                    collection, value.resource_id, attached.get(i, []), ctx,
                ))
            elif isinstance(value, StructuralGroup):
                out.append("<section>")
                out.append(f"<h{heading}>{escape(name)}</h{heading}>")
                out.extend(_render_container(collection, value.children, ctx, level + 1))
                out.append("</section>")
    return out


_STYLE = (
    "body{font-family:Georgia,serif;margin:2em auto;max-width:50em;padding:0 1em}"
    "section{margin:0 0 1em;padding-left:1em;border-left:2px solid #ddd}"
    "figure{margin:1em 0;padding:.5em;border:1px solid #ccc}"
    "img{max-width:100%}ul.annotations{font-size:.9em;color:#444}"
)


def render_document_html(
    collection: Collection,
    document_id: str,
    ctx: Optional[RenderContext] = None,
) -> str:
    """Deterministic standalone HTML for one document."""
    doc = collection.document(document_id)
    if doc is None:
        raise UnknownDocument(f"unknown document: {document_id}")
    ctx = ctx or RenderContext()
    lines = [
        "<!DOCTYPE html>",
        f"<html lang={quoteattr(ctx.language)}>",
        "<head>",
        "<meta charset=\"utf-8\"/>",
        f"<title>{escape(doc.title)}</title>",
        f"<style>{_STYLE}</style>",
        "</head>",
        "<body>",
        f"<h1>{escape(doc.title)}</h1>",
    ]
    lines.extend(_render_container(collection, doc.values, ctx, level=2))
    lines.extend(["</body>", "</html>", ""])
    return "\n".join(lines)


# --- manifest ---------------------------------------------------------------------


def generate_manifest(
    collection: Collection,
    top: ImsItem,
    export_order: list[str],
    title: str,
    language: str = "en-US",
    seed: Optional[int] = None,
    html_names: Optional[dict[str, str]] = None,
    media_paths: Optional[dict[str, str]] = None,
) -> ImsManifest:
    """Assemble the manifest model for an already-built item tree."""
    if not export_order:
        raise EmptyExport("nothing to export")
    html_names = html_names or assign_html_names(export_order)
    media_paths = media_paths if media_paths is not None else collect_media(collection, export_order)

    rng = random.Random(seed)
    identifier = f"{MANIFEST_PREFIX}{rng.randrange(10 ** 16):016d}"

    resources = []
    for n, doc_id in enumerate(export_order):
        doc = collection.document(doc_id)
        files = [html_names[doc_id]]
        for eid, value in _iter_values(doc.values):
            if isinstance(value, ResourceRef) and value.resource_id in media_paths:
                path = media_paths[value.resource_id]
                if path not in files:
                    files.append(path)
        resources.append(ImsResource(
            identifier=f"{RESOURCE_PREFIX}{n}",
            href=html_names[doc_id],
            files=tuple(files),
        ))

    return ImsManifest(
        identifier=identifier,
        title=title,
        language=language,
        organization_id=f"{ORGANIZATION_PREFIX}{export_order[0]}",
        top=top,
        resources=tuple(resources),
    )


def manifest_to_xml(manifest: ImsManifest) -> str:
    """Serialize with fixed namespaces, prefixes and two-space indentation."""
    lines: list[str] = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>']
    lines.append(
        f'<manifest xmlns="{CP_NAMESPACE}" xmlns:imsmd="{MD_NAMESPACE}" '
        f'xmlns:xsi="{XSI_NAMESPACE}" identifier={quoteattr(manifest.identifier)} '
        f'version="IMS CP 1.2" xsi:schemaLocation={quoteattr(SCHEMA_LOCATION)}>'
    )
    lines.extend([
        "  <metadata>",
        f"    <schema>{escape(manifest.schema_name)}</schema>",
        f"    <schemaVersion>{escape(manifest.schema_version)}</schemaVersion>",
        "    <imsmd:lom>",
        "      <imsmd:general>",
        "        <imsmd:title>",
        f'          <imsmd:langstring xml:lang={quoteattr(manifest.language)}>'
        f"{escape(manifest.title)}</imsmd:langstring>",
        "        </imsmd:title>",
        "      </imsmd:general>",
        "    </imsmd:lom>",
        "  </metadata>",
        f"  <organizations default={quoteattr(manifest.organization_id)}>",
        f"    <organization identifier={quoteattr(manifest.organization_id)} "
        f'structure="hierarchical">',
        f"      <title>{escape(manifest.title)}</title>",
    ])

    def emit_item(item: ImsItem, indent: str) -> None:
        lines.append(
            f"{indent}<item identifier={quoteattr(item.identifier)} "
            f"identifierRef={quoteattr(item.identifier_ref)}>"
        )
        lines.append(f"{indent}  <title>{escape(item.title)}</title>")
        for child in item.children:
            emit_item(child, indent + "  ")
        lines.append(f"{indent}</item>")

    emit_item(manifest.top, "      ")
    lines.extend(["    </organization>", "  </organizations>", "  <resources>"])
    for resource in manifest.resources:
        lines.append(
            f"    <resource identifier={quoteattr(resource.identifier)} "
            f"type={quoteattr(resource.type)} href={quoteattr(resource.href)}>"
        )
        for file_href in resource.files:
            lines.append(f"      <file href={quoteattr(file_href)}/>")
        lines.append("    </resource>")
    lines.extend(["  </resources>", "</manifest>", ""])
    return "\n".join(lines)


# --- packaging --------------------------------------------------------------------


def package_archive(manifest_xml: str, files: dict[str, bytes]) -> bytes:
    """Deterministic zip: manifest first, then files in lexicographic order."""
    if MANIFEST_NAME in files:
        raise PackagingError(f"{MANIFEST_NAME} is reserved for the manifest")
    buffer = BytesIO()
    stamp = (1980, 1, 1, 0, 0, 0)
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        def add(name: str, data: bytes) -> None:
            info = zipfile.ZipInfo(name, date_time=stamp)
            info.external_attr = 0o644 << 16
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, data)

        add(MANIFEST_NAME, manifest_xml.encode("utf-8"))
        for name in sorted(files):
            add(name, files[name])
    return buffer.getvalue()


def export_package(
    collection: Collection,
    config: ExportConfig,
    read_blob: Callable[[str], bytes],
) -> tuple[bytes, ImsManifest]:
    """Full pipeline: item tree, HTML per document, media blobs, zip."""
    top, export_order = build_item_tree(
        collection, config.roots, depth_limit=config.depth_limit
    )
    html_names = assign_html_names(export_order)
    media_paths = collect_media(collection, export_order)
    manifest = generate_manifest(
        collection, top, export_order, config.title,
        language=config.language, seed=config.seed,
        html_names=html_names, media_paths=media_paths,
    )
    ctx = RenderContext(
        language=config.language, html_names=html_names, media_hrefs=media_paths,
    )
    files: dict[str, bytes] = {}
    for doc_id in export_order:
        files[html_names[doc_id]] = render_document_html(
            collection, doc_id, ctx
        ).encode("utf-8")
    for rid, path in media_paths.items():
        origin = collection.resources[rid].origin
        try:
            files[path] = read_blob(origin.sha256)
        except (KeyError, OSError) as exc:
            raise PackagingError(f"blob for resource {rid!r} unavailable: {exc}") from exc
    return package_archive(manifest_to_xml(manifest), files), manifest


# --- package validation -------------------------------------------------------------

_CP = f"{{{CP_NAMESPACE}}}"
_MD = f"{{{MD_NAMESPACE}}}"


def validate_package(data: bytes) -> ValidationReport:
    """Structural checks over a finished package, usable on foreign ones too."""
    report = ValidationReport()

    def flag(code: str, message: str) -> None:
        report.violations.append(Violation(code, message))

    try:
        archive = zipfile.ZipFile(BytesIO(data))
    except zipfile.BadZipFile as exc:
        flag("BadArchive", f"not a zip archive: {exc}")
        return report
    names = set(archive.namelist())
    if MANIFEST_NAME not in names:
        flag("MissingManifest", f"{MANIFEST_NAME} not found at the archive root")
        return report
    try:
        root = ElementTree.fromstring(archive.read(MANIFEST_NAME))
    except ElementTree.ParseError as exc:
        flag("ManifestParse", f"manifest is not well-formed XML: {exc}")
        return report

    if root.tag != f"{_CP}manifest":
        flag("ManifestParse", f"unexpected root element {root.tag!r}")
        return report

    metadata = root.find(f"{_CP}metadata")
    schema_text = metadata.findtext(f"{_CP}schema") if metadata is not None else None
    version_text = metadata.findtext(f"{_CP}schemaVersion") if metadata is not None else None
    if schema_text != "IMS Content" or version_text != "1.2":
        flag("MissingMetadata", "metadata must declare schema 'IMS Content' version '1.2'")
    if metadata is None or metadata.find(
        f"{_MD}lom/{_MD}general/{_MD}title/{_MD}langstring"
    ) is None:
        flag("MissingMetadata", "metadata lacks a titled lom/general block")

    resources_el = root.find(f"{_CP}resources")
    declared: dict[str, ElementTree.Element] = {}
    for resource in resources_el.findall(f"{_CP}resource") if resources_el is not None else []:
        rid = resource.get("identifier") or ""
        if rid in declared:
            flag("DuplicateIdentifier", f"resource identifier {rid!r} repeats")
        declared[rid] = resource
        hrefs = [resource.get("href")] + [
            f.get("href") for f in resource.findall(f"{_CP}file")
        ]
        for href in hrefs:
            if href is None:
                continue
            if is_absolute_url(href):
                continue
            if href not in names:
                flag("MissingFile", f"resource {rid!r} references missing file {href!r}")

    organizations = root.find(f"{_CP}organizations")
    if organizations is None:
        flag("BrokenDefault", "no organizations block")
        return report
    default = organizations.get("default")
    org_ids = [o.get("identifier") for o in organizations.findall(f"{_CP}organization")]
    if default not in org_ids:
        flag("BrokenDefault", f"default {default!r} does not name an organization")

    seen_items: set[str] = set()
    for item in organizations.iter(f"{_CP}item"):
        identifier = item.get("identifier") or ""
        if identifier in seen_items:
            flag("DuplicateIdentifier", f"item identifier {identifier!r} repeats")
        seen_items.add(identifier)
        ref = item.get("identifierRef")
        if ref is not None and ref not in declared:
            flag("UnresolvedRef", f"item {identifier!r} references unknown resource {ref!r}")
    return report
