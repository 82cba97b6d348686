"""Value paths: addressing individual values inside a document.

A path is a sequence of (element id, occurrence) steps. Each step selects
the n-th value tagged with that element id inside the current container
(the document's top-level list, then nested structural groups). The text
form is ``elem-id[2]/child-id`` with ``[0]`` implied when omitted.
"""

from __future__ import annotations

import re
from typing import Callable, Optional

from .errors import PathNotFound
from .model import FieldValue, MetadataDocument, StructuralGroup

ValuePath = tuple[tuple[str, int], ...]

_STEP_RE = re.compile(r"^(?P<eid>[^/\[\]]+)(\[(?P<idx>\d+)\])?$")


def parse_path(text: str) -> ValuePath:
    steps: list[tuple[str, int]] = []
    for raw in text.split("/"):
        m = _STEP_RE.match(raw.strip())
        if not m:
            raise ValueError(f"malformed path step: {raw!r}")
        steps.append((m.group("eid"), int(m.group("idx") or 0)))
    if not steps:
        raise ValueError("empty path")
    return tuple(steps)


def format_path(path: ValuePath) -> str:
    return "/".join(f"{eid}[{idx}]" for eid, idx in path)


def _select(container: tuple[tuple[str, FieldValue], ...], eid: str, idx: int) -> int:
    """Index into the container of the idx-th value tagged eid, or -1."""
    seen = 0
    for i, (element_id, _) in enumerate(container):
        if element_id == eid:
            if seen == idx:
                return i
            seen += 1
    return -1


def resolve(doc: MetadataDocument, path: ValuePath) -> FieldValue:
    container = doc.values
    value: Optional[FieldValue] = None
    for depth, (eid, idx) in enumerate(path):
        pos = _select(container, eid, idx)
        if pos < 0:
            raise PathNotFound(
                f"{format_path(path)} not found in document {doc.id} "
                f"(step {depth}: {eid}[{idx}])"
            )
        value = container[pos][1]
        if depth < len(path) - 1:
            if not isinstance(value, StructuralGroup):
                raise PathNotFound(
                    f"{format_path(path[:depth + 1])} is not a group in document {doc.id}"
                )
            container = value.children
    assert value is not None
    return value


def transform_container(
    doc: MetadataDocument,
    container_path: ValuePath,
    fn: Callable[[tuple[tuple[str, FieldValue], ...]], tuple[tuple[str, FieldValue], ...]],
) -> MetadataDocument:
    """Apply ``fn`` to the children of the group at ``container_path``.

    An empty path transforms the document's top-level value list.
    """

    def rewrite(
        container: tuple[tuple[str, FieldValue], ...], remaining: ValuePath
    ) -> tuple[tuple[str, FieldValue], ...]:
        if not remaining:
            return fn(container)
        eid, idx = remaining[0]
        pos = _select(container, eid, idx)
        if pos < 0:
            raise PathNotFound(f"container step {eid}[{idx}] not found in document {doc.id}")
        _, value = container[pos]
        if not isinstance(value, StructuralGroup):
            raise PathNotFound(f"container step {eid}[{idx}] is not a group in document {doc.id}")
        new_value = StructuralGroup(rewrite(value.children, remaining[1:]))
        out = list(container)
        out[pos] = (eid, new_value)
        return tuple(out)

    return MetadataDocument(doc.id, doc.title, rewrite(doc.values, container_path))


def replace_at(doc: MetadataDocument, path: ValuePath, new_value: FieldValue) -> MetadataDocument:
    eid, idx = path[-1]

    def swap(container: tuple[tuple[str, FieldValue], ...]):
        pos = _select(container, eid, idx)
        if pos < 0:
            raise PathNotFound(f"{format_path(path)} not found in document {doc.id}")
        out = list(container)
        out[pos] = (eid, new_value)
        return tuple(out)

    return transform_container(doc, path[:-1], swap)


def insert_after(
    doc: MetadataDocument, path: ValuePath, element_id: str, value: FieldValue
) -> MetadataDocument:
    """Insert (element_id, value) immediately after the value at ``path``."""
    eid, idx = path[-1]

    def ins(container: tuple[tuple[str, FieldValue], ...]):
        pos = _select(container, eid, idx)
        if pos < 0:
            raise PathNotFound(f"{format_path(path)} not found in document {doc.id}")
        out = list(container)
        out.insert(pos + 1, (element_id, value))
        return tuple(out)

    return transform_container(doc, path[:-1], ins)
