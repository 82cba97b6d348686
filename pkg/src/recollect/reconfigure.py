"""Schema reconfiguration with automatic document migration.

The five operations (rename / remove / merge / move / add-structural) edit
the schema; the engine adjusts every document so the collection stays
conformant: removed elements lose their values, merged elements retag
values, moved elements relocate values into or out of structural groups.
All functions are pure; persistence goes through store transactions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from .errors import (
    CycleMove,
    DanglingTarget,
    KindMismatch,
    NameClash,
    InvalidParent,
    PathNotFound,
    PlanFailed,
    RegionOutOfBounds,
    StructuralMerge,
    TargetNotImage,
    UnknownDocument,
    UnknownElement,
)
from .model import (
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
    validate_document,
    value_kind,
)
from .paths import ValuePath, replace_at, resolve, transform_container

# --- operations -----------------------------------------------------------

@dataclass(frozen=True)
class Rename:
    element_id: str
    new_name: str


@dataclass(frozen=True)
class Remove:
    element_id: str


@dataclass(frozen=True)
class Merge:
    source_id: str
    target_id: str


@dataclass(frozen=True)
class Move:
    element_id: str
    new_parent: Optional[str]
    position: int = 0


@dataclass(frozen=True)
class AddStructural:
    name: str
    parent: Optional[str] = None
    position: int = 0


ReconfigOp = Union[Rename, Remove, Merge, Move, AddStructural]


def op_to_dict(op: ReconfigOp) -> dict:
    if isinstance(op, Rename):
        return {"op": "rename", "element_id": op.element_id, "new_name": op.new_name}
    if isinstance(op, Remove):
        return {"op": "remove", "element_id": op.element_id}
    if isinstance(op, Merge):
        return {"op": "merge", "source_id": op.source_id, "target_id": op.target_id}
    if isinstance(op, Move):
        return {"op": "move", "element_id": op.element_id,
                "new_parent": op.new_parent, "position": op.position}
    if isinstance(op, AddStructural):
        return {"op": "add_structural", "name": op.name,
                "parent": op.parent, "position": op.position}
    raise TypeError(f"not a reconfiguration op: {op!r}")


def op_from_dict(data: dict) -> ReconfigOp:
    tag = data.get("op")
    try:
        if tag == "rename":
            return Rename(data["element_id"], data["new_name"])
        if tag == "remove":
            return Remove(data["element_id"])
        if tag == "merge":
            return Merge(data["source_id"], data["target_id"])
        if tag == "move":
            return Move(data["element_id"], data.get("new_parent"), data.get("position", 0))
        if tag == "add_structural":
            return AddStructural(data["name"], data.get("parent"), data.get("position", 0))
    except KeyError as exc:
        raise ValueError(f"op {tag!r} is missing key {exc.args[0]!r}") from None
    raise ValueError(f"unknown op variant: {tag!r}")


@dataclass(frozen=True)
class TransformationPlan:
    id: str
    description: str
    ops: tuple[ReconfigOp, ...]
    authored_schema_version: int = 0


def plan_to_dict(plan: TransformationPlan) -> dict:
    return {
        "plan_id": plan.id,
        "description": plan.description,
        "authored_schema_version": plan.authored_schema_version,
        "ops": [op_to_dict(op) for op in plan.ops],
    }


def plan_from_dict(data: dict) -> TransformationPlan:
    try:
        plan_id = data["plan_id"]
        raw_ops = data["ops"]
    except KeyError as exc:
        raise ValueError(f"plan is missing key {exc.args[0]!r}") from None
    return TransformationPlan(
        id=plan_id,
        description=data.get("description", ""),
        ops=tuple(op_from_dict(o) for o in raw_ops),
        authored_schema_version=data.get("authored_schema_version", 0),
    )


# --- reports -----------------------------------------------------------------

@dataclass
class OpReport:
    op: dict
    documents_touched: int = 0
    values_removed: int = 0
    values_moved: int = 0
    values_retagged: int = 0


@dataclass
class MigrationReport:
    ops: list[OpReport] = field(default_factory=list)
    final_element_count: int = 0
    final_schema_version: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def documents_touched(self) -> int:
        return sum(r.documents_touched for r in self.ops)


# --- schema helpers --------------------------------------------------------------

def _renumber(elements: dict[str, ElementType]) -> dict[str, ElementType]:
    """Normalize sibling positions to 0..n-1 keeping relative order."""
    out = dict(elements)
    parents = {e.parent for e in elements.values()}
    for parent in parents:
        siblings = sorted(
            (e for e in elements.values() if e.parent == parent),
            key=lambda e: (e.position, e.id),
        )
        for i, e in enumerate(siblings):
            if e.position != i:
                out[e.id] = replace(e, position=i)
    return out


def _require_element(schema: MetadataSchema, element_id: str) -> ElementType:
    element = schema.element(element_id)
    if element is None:
        raise UnknownElement(f"unknown element: {element_id}")
    return element


def _check_name_free(
    schema: MetadataSchema, parent: Optional[str], name: str, ignore: Optional[str] = None
) -> None:
    for sibling in schema.children(parent):
        if sibling.id != ignore and sibling.name == name:
            raise NameClash(
                f"name {name!r} already used by sibling {sibling.id!r} under {parent!r}"
            )


def _subtree_ids(schema: MetadataSchema, element_id: str) -> set[str]:
    ids = {element_id}
    frontier = [element_id]
    while frontier:
        cur = frontier.pop()
        for child in schema.children(cur):
            if child.id not in ids:
                ids.add(child.id)
                frontier.append(child.id)
    return ids


def _slug_id(schema: MetadataSchema, name: str) -> str:
    base = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "group"
    candidate = base
    n = 1
    while candidate in schema.elements:
        n += 1
        candidate = f"{base}-{n}"
    return candidate


def _insert_position(siblings: list[ElementType], position: int) -> int:
    return max(0, min(position, len(siblings)))


def group_chain(schema: MetadataSchema, element_id: str) -> list[str]:
    """Structural ancestors of an element, outermost first."""
    return schema.path_to_root(element_id)


# --- document value machinery ------------------------------------------------------

Values = tuple[tuple[str, FieldValue], ...]


def _strip(
    values: Values,
    match: set[str],
    collected: list[tuple[str, FieldValue]],
    prune_emptied: bool,
) -> Values:
    """Remove every value tagged with an id in ``match`` (subtrees included).

    Matches are appended to ``collected`` in document order. When
    ``prune_emptied`` is set, groups that lose all their children to the
    extraction are dropped as well (transitively); groups that were already
    empty are kept.
    """
    out: list[tuple[str, FieldValue]] = []
    for eid, value in values:
        if eid in match:
            collected.append((eid, value))
            continue
        if isinstance(value, StructuralGroup):
            children = _strip(value.children, match, collected, prune_emptied)
            if prune_emptied and value.children and not children:
                continue
            out.append((eid, StructuralGroup(children)))
        else:
            out.append((eid, value))
    return tuple(out)


def _insert_into_chain(values: Values, chain: list[str], items: list[tuple[str, FieldValue]],
                       after_element: Optional[str] = None) -> Values:
    """Place ``items`` inside the nested group chain, creating groups on demand.

    The first existing group instance at each level is reused; a freshly
    created group is appended at the end of its container. Within the final
    container, items land after the last value tagged ``after_element`` when
    present, otherwise at the end.
    """
    if not chain:
        if after_element is not None:
            last = -1
            for i, (eid, _) in enumerate(values):
                if eid == after_element:
                    last = i
            if last >= 0:
                return values[:last + 1] + tuple(items) + values[last + 1:]
        return values + tuple(items)
    head, rest = chain[0], chain[1:]
    out = list(values)
    for i, (eid, value) in enumerate(out):
        if eid == head and isinstance(value, StructuralGroup):
            out[i] = (eid, StructuralGroup(
                _insert_into_chain(value.children, rest, items, after_element)))
            return tuple(out)
    out.append((head, StructuralGroup(_insert_into_chain((), rest, items, after_element))))
    return tuple(out)


def _count_values(values: Values, match: set[str]) -> int:
    n = 0
    for eid, value in values:
        if eid in match:
            n += 1
        if isinstance(value, StructuralGroup):
            n += _count_values(value.children, match)
    return n


def _retag_in_containers(values: Values, source_id: str, target_id: str) -> Values:
    """Per-container merge migration when source and target share a parent.

    In each container holding target values, source values are re-inserted
    right after the last target value; in containers without target values
    they are retagged in place.
    """
    recursed = tuple(
        (eid, StructuralGroup(_retag_in_containers(v.children, source_id, target_id))
         if isinstance(v, StructuralGroup) else v)
        for eid, v in values
    )
    if not any(eid == source_id for eid, _ in recursed):
        return recursed
    if not any(eid == target_id for eid, _ in recursed):
        return tuple(
            (target_id if eid == source_id else eid, v) for eid, v in recursed
        )
    kept = [(eid, v) for eid, v in recursed if eid != source_id]
    moved = [(target_id, v) for eid, v in recursed if eid == source_id]
    last = max(i for i, (eid, _) in enumerate(kept) if eid == target_id)
    return tuple(kept[:last + 1] + moved + kept[last + 1:])


# --- the operations ------------------------------------------------------------------


def _bump(schema: MetadataSchema, elements: dict[str, ElementType]) -> MetadataSchema:
    return MetadataSchema(elements=_renumber(elements), version=schema.version + 1)


def _apply_rename(collection: Collection, op: Rename) -> tuple[Collection, OpReport]:
    element = _require_element(collection.schema, op.element_id)
    _check_name_free(collection.schema, element.parent, op.new_name, ignore=element.id)
    elements = dict(collection.schema.elements)
    elements[element.id] = replace(element, name=op.new_name)
    schema = _bump(collection.schema, elements)
    return replace(collection, schema=schema), OpReport(op=op_to_dict(op))


def _apply_remove(collection: Collection, op: Remove) -> tuple[Collection, OpReport]:
    _require_element(collection.schema, op.element_id)
    doomed = _subtree_ids(collection.schema, op.element_id)
    elements = {k: v for k, v in collection.schema.elements.items() if k not in doomed}
    schema = _bump(collection.schema, elements)

    report = OpReport(op=op_to_dict(op))
    documents = {}
    for doc in collection.documents.values():
        removed: list[tuple[str, FieldValue]] = []
        new_values = _strip(doc.values, doomed, removed, prune_emptied=False)
        if removed:
            report.documents_touched += 1
            report.values_removed += len(removed)
            documents[doc.id] = MetadataDocument(doc.id, doc.title, new_values)
        else:
            documents[doc.id] = doc
    return replace(collection, schema=schema, documents=documents), report


def _apply_merge(collection: Collection, op: Merge) -> tuple[Collection, OpReport]:
    source = _require_element(collection.schema, op.source_id)
    target = _require_element(collection.schema, op.target_id)
    if source.id == target.id:
        raise KindMismatch("merge source and target must differ")
    if source.kind is ElementKind.STRUCTURAL or target.kind is ElementKind.STRUCTURAL:
        raise StructuralMerge("structural elements cannot be merged")
    if source.kind is not target.kind:
        raise KindMismatch(
            f"cannot merge {source.kind.value} element into {target.kind.value} element"
        )

    elements = {k: v for k, v in collection.schema.elements.items() if k != source.id}
    schema = _bump(collection.schema, elements)

    same_parent = source.parent == target.parent
    target_chain = group_chain(collection.schema, target.id)
    report = OpReport(op=op_to_dict(op))
    documents = {}
    for doc in collection.documents.values():
        count = _count_values(doc.values, {source.id})
        if not count:
            documents[doc.id] = doc
            continue
        report.documents_touched += 1
        report.values_retagged += count
        if same_parent:
            new_values = _retag_in_containers(doc.values, source.id, target.id)
        else:
            collected: list[tuple[str, FieldValue]] = []
            stripped = _strip(doc.values, {source.id}, collected, prune_emptied=True)
            retagged = [(target.id, v) for _, v in collected]
            new_values = _insert_into_chain(
                stripped, target_chain, retagged, after_element=target.id)
        documents[doc.id] = MetadataDocument(doc.id, doc.title, new_values)
    return replace(collection, schema=schema, documents=documents), report


def _apply_move(collection: Collection, op: Move) -> tuple[Collection, OpReport]:
    element = _require_element(collection.schema, op.element_id)
    if op.new_parent is not None:
        new_parent = _require_element(collection.schema, op.new_parent)
        if new_parent.kind is not ElementKind.STRUCTURAL:
            raise InvalidParent(f"{op.new_parent!r} is not a structural element")
        if op.new_parent in _subtree_ids(collection.schema, element.id):
            raise CycleMove(
                f"cannot move {element.id!r} under its own subtree ({op.new_parent!r})"
            )
    _check_name_free(collection.schema, op.new_parent, element.name, ignore=element.id)

    siblings = [e for e in collection.schema.children(op.new_parent) if e.id != element.id]
    pos = _insert_position(siblings, op.position)
    elements = dict(collection.schema.elements)
    elements[element.id] = replace(element, parent=op.new_parent)
    order = siblings[:pos] + [elements[element.id]] + siblings[pos:]
    for i, e in enumerate(order):
        elements[e.id] = replace(elements[e.id], position=i)
    schema = _bump(collection.schema, elements)

    report = OpReport(op=op_to_dict(op))
    if element.parent == op.new_parent:
        return replace(collection, schema=schema), report

    new_chain = group_chain(schema, element.id)
    documents = {}
    for doc in collection.documents.values():
        collected: list[tuple[str, FieldValue]] = []
        stripped = _strip(doc.values, {element.id}, collected, prune_emptied=True)
        if not collected:
            documents[doc.id] = doc
            continue
        report.documents_touched += 1
        report.values_moved += len(collected)
        documents[doc.id] = MetadataDocument(
            doc.id, doc.title, _insert_into_chain(stripped, new_chain, collected))
    return replace(collection, schema=schema, documents=documents), report


def _apply_add_structural(collection: Collection, op: AddStructural) -> tuple[Collection, OpReport]:
    if op.parent is not None:
        parent = _require_element(collection.schema, op.parent)
        if parent.kind is not ElementKind.STRUCTURAL:
            raise InvalidParent(f"{op.parent!r} is not a structural element")
    _check_name_free(collection.schema, op.parent, op.name)
    siblings = collection.schema.children(op.parent)
    pos = _insert_position(siblings, op.position)
    new_id = _slug_id(collection.schema, op.name)
    added = ElementType(
        id=new_id, name=op.name, kind=ElementKind.STRUCTURAL,
        parent=op.parent, position=pos,
    )
    elements = dict(collection.schema.elements)
    elements[new_id] = added
    for i, e in enumerate(siblings[:pos] + [added] + siblings[pos:]):
        elements[e.id] = replace(elements[e.id], position=i)
    schema = _bump(collection.schema, elements)
    report = OpReport(op=op_to_dict(op))
    report.op["element_id"] = new_id  # echo the generated id back to the caller
    return replace(collection, schema=schema), report


def apply_op(collection: Collection, op: ReconfigOp) -> tuple[Collection, MigrationReport]:
    """Apply one reconfiguration op, migrating every document automatically."""
    if isinstance(op, Rename):
        result, op_report = _apply_rename(collection, op)
    elif isinstance(op, Remove):
        result, op_report = _apply_remove(collection, op)
    elif isinstance(op, Merge):
        result, op_report = _apply_merge(collection, op)
    elif isinstance(op, Move):
        result, op_report = _apply_move(collection, op)
    elif isinstance(op, AddStructural):
        result, op_report = _apply_add_structural(collection, op)
    else:
        raise TypeError(f"not a reconfiguration op: {op!r}")
    report = MigrationReport(
        ops=[op_report],
        final_element_count=result.schema.element_count,
        final_schema_version=result.schema.version,
    )
    return result, report


def apply_plan(
    collection: Collection, plan: TransformationPlan
) -> tuple[Collection, MigrationReport]:
    """Apply a plan's ops in order; all-or-nothing.

    Equivalent to left-folding apply_op over the ops (an empty plan still
    bumps the schema version so the reconfiguration is journaled).
    """
    report = MigrationReport()
    if plan.authored_schema_version != collection.schema.version:
        report.warnings.append(
            f"plan {plan.id!r} was authored against schema version "
            f"{plan.authored_schema_version}, collection is at {collection.schema.version}"
        )
    current = collection
    for index, op in enumerate(plan.ops):
        try:
            current, op_migration = apply_op(current, op)
        except Exception as exc:
            raise PlanFailed(index, exc) from exc
        report.ops.extend(op_migration.ops)
    if not plan.ops:
        current = replace(
            current,
            schema=MetadataSchema(
                elements=dict(current.schema.elements),
                version=current.schema.version + 1,
            ),
        )
    report.final_element_count = current.schema.element_count
    report.final_schema_version = current.schema.version
    return current, report


# --- document-level curation ------------------------------------------------------------


def edit_value(
    collection: Collection,
    document_id: str,
    path: ValuePath,
    new_value: FieldValue,
) -> Collection:
    """Replace the value at ``path``; the new value must keep the document conformant."""
    doc = collection.document(document_id)
    if doc is None:
        raise UnknownDocument(f"unknown document: {document_id}")
    resolve(doc, path)  # raises PathNotFound
    element_id = path[-1][0]
    element = _require_element(collection.schema, element_id)
    if value_kind(new_value) is not element.kind:
        raise KindMismatch(
            f"element {element_id!r} holds {element.kind.value} values, "
            f"got {value_kind(new_value).value}"
        )
    if isinstance(new_value, LinkRef) and new_value.document_id not in collection.documents:
        raise DanglingTarget(f"no document {new_value.document_id!r}")
    if isinstance(new_value, ResourceRef) and new_value.resource_id not in collection.resources:
        raise DanglingTarget(f"no resource {new_value.resource_id!r}")
    new_doc = replace_at(doc, path, new_value)
    violations = validate_document(new_doc, collection.schema, collection)
    if violations:
        first = violations[0]
        if first.code in ("DanglingLink", "DanglingResource"):
            raise DanglingTarget(first.message)
        if first.code == "KindMismatch":
            raise KindMismatch(first.message)
        raise PathNotFound(first.message)
    documents = dict(collection.documents)
    documents[document_id] = new_doc
    return replace(collection, documents=documents)


# --- image annotation ---------------------------------------------------------------------

ANNOTATION_NAME = "Annotation"
ANNOTATION_FIELDS = ("x", "y", "w", "h")
COORD_PRECISION = 6


@dataclass(frozen=True)
class Region:
    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True)
class ImageAnnotation:
    document_id: str
    path: ValuePath
    region: Region
    explanation: str


def _check_region(region: Region) -> None:
    if region.w <= 0 or region.h <= 0:
        raise RegionOutOfBounds("region width and height must be positive")
    if region.x < 0 or region.y < 0:
        raise RegionOutOfBounds("region origin must be non-negative")
    # tolerate float dust on the far edge, e.g. x=0.1 w=0.9
    if region.x + region.w > 1 + 1e-9 or region.y + region.h > 1 + 1e-9:
        raise RegionOutOfBounds("region must fit inside the unit square")


def annotation_element_id(schema: MetadataSchema, image_element_id: str) -> str:
    element = schema.element(image_element_id)
    if element is None:
        raise UnknownElement(f"unknown element: {image_element_id}")
    return f"{element.parent}.annotation" if element.parent else "annotation"


def ensure_annotation_element(
    schema: MetadataSchema, image_element_id: str
) -> tuple[MetadataSchema, str]:
    """Make sure the reserved annotation group exists next to the image element."""
    ann_id = annotation_element_id(schema, image_element_id)
    if ann_id in schema.elements:
        return schema, ann_id
    parent = schema.element(image_element_id).parent
    _check_name_free(schema, parent, ANNOTATION_NAME)
    elements = dict(schema.elements)
    elements[ann_id] = ElementType(
        id=ann_id, name=ANNOTATION_NAME, kind=ElementKind.STRUCTURAL,
        parent=parent, position=len(schema.children(parent)),
    )
    for i, coord in enumerate(ANNOTATION_FIELDS):
        elements[f"{ann_id}.{coord}"] = ElementType(
            id=f"{ann_id}.{coord}", name=coord, kind=ElementKind.DESCRIPTIVE,
            parent=ann_id, position=i,
        )
    elements[f"{ann_id}.explanation"] = ElementType(
        id=f"{ann_id}.explanation", name="explanation", kind=ElementKind.DESCRIPTIVE,
        parent=ann_id, position=len(ANNOTATION_FIELDS),
    )
    return _bump(schema, elements), ann_id


def annotation_group_value(ann_id: str, region: Region, explanation: str) -> StructuralGroup:
    coords = [
        (f"{ann_id}.{name}", DescriptiveText(f"{getattr(region, name):.{COORD_PRECISION}f}"))
        for name in ANNOTATION_FIELDS
    ]
    return StructuralGroup(tuple(coords) + ((f"{ann_id}.explanation", DescriptiveText(explanation)),))


def annotate_image(collection: Collection, annotation: ImageAnnotation) -> Collection:
    """Store an annotation as an ordinary structural value next to its image."""
    _check_region(annotation.region)
    doc = collection.document(annotation.document_id)
    if doc is None:
        raise UnknownDocument(f"unknown document: {annotation.document_id}")
    value = resolve(doc, annotation.path)
    if not isinstance(value, ResourceRef):
        raise TargetNotImage("annotation target is not a resource value")
    resource = collection.resources.get(value.resource_id)
    if resource is None:
        raise DanglingTarget(f"no resource {value.resource_id!r}")
    if not resource.media_type.startswith("image/"):
        raise TargetNotImage(f"resource {resource.id!r} is {resource.media_type}, not an image")

    schema, ann_id = ensure_annotation_element(collection.schema, annotation.path[-1][0])
    group = annotation_group_value(ann_id, annotation.region, annotation.explanation)
    image_eid, image_idx = annotation.path[-1]

    def attach(container: Values) -> Values:
        seen = 0
        for i, (eid, _) in enumerate(container):
            if eid != image_eid:
                continue
            if seen == image_idx:
                # keep insertion order: land after annotations already attached
                end = i + 1
                while end < len(container) and container[end][0] == ann_id:
                    end += 1
                return container[:end] + ((ann_id, group),) + container[end:]
            seen += 1
        raise PathNotFound(f"image value vanished at {annotation.path}")

    new_doc = transform_container(doc, annotation.path[:-1], attach)
    documents = dict(collection.documents)
    documents[new_doc.id] = new_doc
    return replace(collection, schema=schema, documents=documents)


def read_annotations(
    collection: Collection, document_id: str, path: ValuePath
) -> list[ImageAnnotation]:
    """Annotations attached to the image value at ``path``, in storage order.

    An annotation belongs to the nearest preceding resource value in its
    container, which is where annotate_image inserts it.
    """
    doc = collection.document(document_id)
    if doc is None:
        raise UnknownDocument(f"unknown document: {document_id}")
    resolve(doc, path)
    image_eid, image_idx = path[-1]
    ann_id = annotation_element_id(collection.schema, image_eid)

    def container_of(values: Values, steps: ValuePath) -> Values:
        if len(steps) == 1:
            return values
        eid, idx = steps[0]
        seen = 0
        for element_id, value in values:
            if element_id == eid:
                if seen == idx:
                    assert isinstance(value, StructuralGroup)
                    return container_of(value.children, steps[1:])
                seen += 1
        raise PathNotFound(f"container for {path} not found")

    container = container_of(doc.values, path)
    out: list[ImageAnnotation] = []
    current_image = -1
    for element_id, value in container:
        if element_id == image_eid:
            current_image += 1
        elif element_id == ann_id and isinstance(value, StructuralGroup) and current_image == image_idx:
            fields = {collection.schema.element(ceid).name if collection.schema.element(ceid) else ceid:
                      v.text for ceid, v in value.children if isinstance(v, DescriptiveText)}
            try:
                region = Region(*(float(fields[name]) for name in ANNOTATION_FIELDS))
            except (KeyError, ValueError):
                continue
            out.append(ImageAnnotation(
                document_id=document_id,
                path=path,
                region=region,
                explanation=fields.get("explanation", ""),
            ))
    return out


# --- schema diff -----------------------------------------------------------------------------


@dataclass
class SchemaDiff:
    added: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    renamed: list[tuple[str, str, str]] = field(default_factory=list)  # id, old, new
    moved: list[str] = field(default_factory=list)
    before_count: int = 0
    after_count: int = 0

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.renamed or self.moved)


def diff_schemas(before: MetadataSchema, after: MetadataSchema) -> SchemaDiff:
    """Compare two schemas by stable element id.

    ``moved`` records parent changes; pure sibling reordering is not
    reported.
    """
    diff = SchemaDiff(before_count=before.element_count, after_count=after.element_count)
    for eid in sorted(before.elements):
        if eid not in after.elements:
            diff.removed.append(eid)
    for eid in sorted(after.elements):
        old = before.element(eid)
        new = after.element(eid)
        if old is None:
            diff.added.append(eid)
            continue
        if old.name != new.name:
            diff.renamed.append((eid, old.name, new.name))
        if old.parent != new.parent:
            diff.moved.append(eid)
    return diff
