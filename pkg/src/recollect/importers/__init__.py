"""Import plugins: named adapters that turn external sources into collections.

A plugin contributes a schema and a way to pull records; the engine owns
persistence. Plugins register under a unique name at import time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..errors import DuplicatePlugin, UnknownPlugin


class CapExceededWarning(UserWarning):
    """Raised as a warning when a crawl stops early at max_documents."""


@dataclass
class ImportReport:
    plugin: str
    documents_imported: int = 0
    resources_imported: int = 0
    links_resolved: int = 0
    links_dropped: int = 0
    capped: bool = False
    warnings: list[str] = field(default_factory=list)

    def as_text(self) -> str:
        lines = [
            f"plugin: {self.plugin}",
            f"documents: {self.documents_imported}",
            f"resources: {self.resources_imported}",
            f"links resolved: {self.links_resolved}",
            f"links dropped: {self.links_dropped}",
        ]
        if self.capped:
            lines.append("crawl stopped early: document cap reached")
        lines.extend(self.warnings)
        return "\n".join(lines)


@dataclass(frozen=True)
class ImportPluginDescriptor:
    name: str
    version: str
    description: str
    # build(store, collection_id, config) -> ImportReport
    build: Callable


_REGISTRY: dict[str, ImportPluginDescriptor] = {}


def register_plugin(descriptor: ImportPluginDescriptor) -> ImportPluginDescriptor:
    if descriptor.name in _REGISTRY:
        raise DuplicatePlugin(f"plugin {descriptor.name!r} is already registered")
    _REGISTRY[descriptor.name] = descriptor
    return descriptor


def get_plugin(name: str) -> ImportPluginDescriptor:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownPlugin(
            f"no import plugin named {name!r}; available: {sorted(_REGISTRY)}"
        ) from None


def list_plugins() -> list[ImportPluginDescriptor]:
    return [_REGISTRY[name] for name in sorted(_REGISTRY)]


def _load_builtin_plugins() -> None:
    from . import generic, medpix  # noqa: F401  (they register themselves)


_load_builtin_plugins()
