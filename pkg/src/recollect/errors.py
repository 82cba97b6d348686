"""Exception taxonomy shared by the engine, the CLI and the HTTP service.

Every error carries a machine-readable ``code`` so the service can emit
structured error bodies and the CLI can map failures to exit codes.
"""

from __future__ import annotations


class EngineError(Exception):
    code = "engine_error"


# --- model / reconfiguration ------------------------------------------------

class UnknownCollection(EngineError):
    code = "unknown_collection"


class UnknownDocument(EngineError):
    code = "unknown_document"


class UnknownElement(EngineError):
    code = "unknown_element"


class KindMismatch(EngineError):
    code = "kind_mismatch"


class StructuralMerge(EngineError):
    code = "structural_merge"


class CycleMove(EngineError):
    code = "cycle_move"


class NameClash(EngineError):
    code = "name_clash"


class InvalidParent(EngineError):
    """Reparenting or adding under a non-structural element."""

    code = "invalid_parent"


class PathNotFound(EngineError):
    code = "path_not_found"


class DanglingTarget(EngineError):
    code = "dangling_target"


class TargetNotImage(EngineError):
    code = "target_not_image"


class RegionOutOfBounds(EngineError):
    code = "region_out_of_bounds"


class PlanFailed(EngineError):
    code = "plan_failed"

    def __init__(self, op_index: int, cause: Exception):
        super().__init__(f"plan failed at op {op_index}: {cause}")
        self.op_index = op_index
        self.cause = cause


# --- store -------------------------------------------------------------------

class StorageError(EngineError):
    code = "storage_error"


class CorruptStore(EngineError):
    code = "corrupt_store"

    def __init__(self, path, message: str = ""):
        super().__init__(f"corrupt store at {path}" + (f": {message}" if message else ""))
        self.path = path


class ValidationRejected(EngineError):
    code = "validation_rejected"

    def __init__(self, report):
        super().__init__(f"mutation rejected: {report.total} violation(s)")
        self.report = report


class ConflictError(EngineError):
    code = "conflict"


class InvalidUrl(EngineError):
    code = "invalid_url"


# --- importers ----------------------------------------------------------------

class DuplicatePlugin(EngineError):
    code = "duplicate_plugin"


class UnknownPlugin(EngineError):
    code = "unknown_plugin"


class SeedNotFound(EngineError):
    code = "seed_not_found"

    def __init__(self, seed_id: str):
        super().__init__(f"seed not found: {seed_id}")
        self.seed_id = seed_id


class EndpointUnreachable(EngineError):
    code = "endpoint_unreachable"


class RecordParseError(EngineError):
    code = "parse_error"

    def __init__(self, path, location: str = ""):
        super().__init__(f"cannot parse record file {path}" + (f" ({location})" if location else ""))
        self.path = path
        self.location = location


class MappingError(EngineError):
    code = "mapping_error"


# --- exporter -----------------------------------------------------------------

class EmptyExport(EngineError):
    code = "empty_export"


class PackagingError(EngineError):
    code = "packaging_error"
