"""Durable on-disk persistence with content-addressed blobs and transactions.

Layout, one directory per collection under the store root:

    <root>/<collection-id>/
        collection.meta     id, name, schema version, revision
        schema.json         canonical schema serialization
        resources.json      resource index (metadata, not bytes)
        documents/          one canonical JSON file per document
        blobs/              content-addressed blob files (sha256 hex names)
        plans/              saved transformation plans
        journal.log         append-only op log, one JSON record per line
        .lock               advisory writer lock

Transactions stage an undo copy of every file they will touch plus a
commit marker before mutating anything, so a crash at any point leaves a
store that loads as either the pre- or the post-state. A journal record
whose revision exceeds collection.meta belongs to an aborted transaction
and is ignored.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import re
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    ConflictError,
    CorruptStore,
    InvalidUrl,
    StorageError,
    UnknownCollection,
    ValidationRejected,
)
from .model import Collection, ExternalUrl, LocalBlob, Resource, is_absolute_url, validate_collection
from .serialization import (
    canonical_bytes,
    collection_meta_to_dict,
    document_from_dict,
    document_to_dict,
    resource_from_dict,
    resources_to_dict,
    schema_from_dict,
    schema_to_dict,
)

META_FILE = "collection.meta"
SCHEMA_FILE = "schema.json"
RESOURCES_FILE = "resources.json"
DOCUMENTS_DIR = "documents"
BLOBS_DIR = "blobs"
PLANS_DIR = "plans"
JOURNAL_FILE = "journal.log"
LOCK_FILE = ".lock"
TXN_MARKER = "txn-marker.json"
UNDO_DIR = "txn-undo"


def _slug(text: str) -> str:
    out = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return out or "collection"


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


@dataclass(frozen=True)
class CollectionInfo:
    id: str
    name: str
    schema_version: int
    revision: int
    document_count: int
    resource_count: int


def collection_info(collection: Collection) -> CollectionInfo:
    return CollectionInfo(
        id=collection.id,
        name=collection.name,
        schema_version=collection.schema.version,
        revision=collection.revision,
        document_count=len(collection.documents),
        resource_count=len(collection.resources),
    )


class CollectionStore:
    """Store managing any number of collections under one root directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # --- paths ---------------------------------------------------------

    def collection_dir(self, collection_id: str) -> Path:
        return self.root / collection_id

    def _require_dir(self, collection_id: str) -> Path:
        cdir = self.collection_dir(collection_id)
        if not (cdir / META_FILE).exists():
            raise UnknownCollection(f"no collection {collection_id!r} under {self.root}")
        return cdir

    def blob_path(self, collection_id: str, sha256: str) -> Path:
        return self.collection_dir(collection_id) / BLOBS_DIR / sha256

    def blob_exists(self, collection_id: str, sha256: str) -> bool:
        return self.blob_path(collection_id, sha256).is_file()

    def read_blob(self, collection_id: str, sha256: str) -> bytes:
        path = self.blob_path(collection_id, sha256)
        if not path.is_file():
            raise StorageError(f"missing blob {sha256} in collection {collection_id}")
        return path.read_bytes()

    # --- lifecycle ---------------------------------------------------------

    def list_collections(self) -> list[CollectionInfo]:
        return [
            collection_info(load_collection(meta_path.parent))
            for meta_path in sorted(self.root.glob(f"*/{META_FILE}"))
        ]

    def create_collection(self, name: str) -> CollectionInfo:
        if not name:
            raise ValueError("collection name must be non-empty")
        base = _slug(name)
        collection_id = base
        n = 1
        while self.collection_dir(collection_id).exists():
            n += 1
            collection_id = f"{base}-{n}"
        cdir = self.collection_dir(collection_id)
        try:
            (cdir / DOCUMENTS_DIR).mkdir(parents=True)
            (cdir / BLOBS_DIR).mkdir()
            (cdir / PLANS_DIR).mkdir()
            empty = Collection(id=collection_id, name=name)
            _atomic_write(cdir / SCHEMA_FILE, canonical_bytes(schema_to_dict(empty.schema)))
            _atomic_write(cdir / RESOURCES_FILE, canonical_bytes(resources_to_dict(empty)))
            (cdir / JOURNAL_FILE).touch()
            _atomic_write(cdir / META_FILE, canonical_bytes(collection_meta_to_dict(empty)))
        except OSError as exc:
            raise StorageError(f"cannot create collection at {cdir}: {exc}") from exc
        return collection_info(empty)

    def load(self, collection_id: str) -> Collection:
        return load_collection(self._require_dir(collection_id))

    # --- blobs / resources ----------------------------------------------------

    def put_blob(self, collection_id: str, data: bytes) -> str:
        """Store bytes content-addressed; writing the same bytes twice is a no-op."""
        self._require_dir(collection_id)
        sha256 = hashlib.sha256(data).hexdigest()
        path = self.blob_path(collection_id, sha256)
        if not path.exists():
            try:
                path.parent.mkdir(exist_ok=True)
                _atomic_write(path, data)
            except OSError as exc:
                raise StorageError(f"cannot write blob {sha256}: {exc}") from exc
        return sha256

    def put_resource(
        self,
        collection_id: str,
        *,
        data: Optional[bytes] = None,
        external_url: Optional[str] = None,
        media_type: str,
        caption: Optional[str] = None,
        resource_id: Optional[str] = None,
    ) -> Resource:
        """Register a resource: either local bytes or an external URL."""
        if (data is None) == (external_url is None):
            raise ValueError("pass exactly one of data or external_url")
        if external_url is not None and not is_absolute_url(external_url):
            raise InvalidUrl(f"not an absolute URL: {external_url!r}")
        if data is not None:
            origin = LocalBlob(self.put_blob(collection_id, data))
            byte_size = len(data)
        else:
            origin = ExternalUrl(external_url)
            byte_size = 0

        chosen: dict[str, str] = {}

        def add(collection: Collection) -> Collection:
            rid = resource_id
            if rid is None:
                n = len(collection.resources) + 1
                while f"res-{n:06d}" in collection.resources:
                    n += 1
                rid = f"res-{n:06d}"
            elif rid in collection.resources:
                raise StorageError(f"resource id already taken: {rid}")
            chosen["id"] = rid
            resources = dict(collection.resources)
            resources[rid] = Resource(
                id=rid, media_type=media_type, origin=origin,
                caption=caption, byte_size=byte_size,
            )
            return replace(collection, resources=resources)

        after = self.transact(collection_id, add, label="put_resource")
        return after.resources[chosen["id"]]

    # --- plans --------------------------------------------------------------------

    def save_plan(self, collection_id: str, plan_id: str, plan_dict: dict) -> None:
        cdir = self._require_dir(collection_id)
        (cdir / PLANS_DIR).mkdir(exist_ok=True)
        _atomic_write(cdir / PLANS_DIR / f"{plan_id}.json", canonical_bytes(plan_dict))

    def load_plan(self, collection_id: str, plan_id: str) -> dict:
        path = self._require_dir(collection_id) / PLANS_DIR / f"{plan_id}.json"
        if not path.is_file():
            raise StorageError(f"no plan {plan_id!r} in collection {collection_id}")
        return json.loads(path.read_text("utf-8"))

    def list_plans(self, collection_id: str) -> list[str]:
        pdir = self._require_dir(collection_id) / PLANS_DIR
        return sorted(p.stem for p in pdir.glob("*.json"))

    # --- transactions ----------------------------------------------------------------

    @contextmanager
    def _writer_lock(self, cdir: Path):
        lock_path = cdir / LOCK_FILE
        fd = os.open(lock_path, os.O_CREAT | os.O_RDWR)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX)
            yield
        finally:
            fcntl.flock(fd, fcntl.LOCK_UN)
            os.close(fd)

    def _serialize_state(self, collection: Collection) -> dict[str, bytes]:
        files = {
            META_FILE: canonical_bytes(collection_meta_to_dict(collection)),
            SCHEMA_FILE: canonical_bytes(schema_to_dict(collection.schema)),
            RESOURCES_FILE: canonical_bytes(resources_to_dict(collection)),
        }
        for doc in collection.documents.values():
            files[f"{DOCUMENTS_DIR}/{doc.id}.json"] = canonical_bytes(document_to_dict(doc))
        return files

    def _current_files(self, cdir: Path) -> dict[str, bytes]:
        files = {}
        for name in (META_FILE, SCHEMA_FILE, RESOURCES_FILE):
            path = cdir / name
            if path.is_file():
                files[name] = path.read_bytes()
        for doc_path in sorted((cdir / DOCUMENTS_DIR).glob("*.json")):
            files[f"{DOCUMENTS_DIR}/{doc_path.name}"] = doc_path.read_bytes()
        return files

    def _append_journal(self, cdir: Path, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with open(cdir / JOURNAL_FILE, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _recover(self, cdir: Path) -> None:
        """Roll back an interrupted transaction (writer-side, under lock)."""
        marker_path = cdir / TXN_MARKER
        if not marker_path.exists():
            return
        try:
            marker = json.loads(marker_path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError):
            # marker itself unreadable: it was written atomically, so this
            # store was tampered with rather than crashed
            raise CorruptStore(marker_path, "unreadable transaction marker")
        undo = cdir / UNDO_DIR
        for rel in marker.get("changed", []) + marker.get("deleted", []):
            src = undo / rel
            if src.is_file():
                dst = cdir / rel
                dst.parent.mkdir(parents=True, exist_ok=True)
                _atomic_write(dst, src.read_bytes())
        for rel in marker.get("added", []):
            target = cdir / rel
            if target.exists():
                target.unlink()
        # the aborted transaction's journal record carries a revision that a
        # later commit will reuse; drop the uncommitted tail
        aborted = marker.get("revision")
        journal_path = cdir / JOURNAL_FILE
        if aborted is not None and journal_path.exists():
            kept = []
            for line in journal_path.read_text("utf-8").splitlines():
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if record.get("revision", 0) < aborted:
                    kept.append(line)
            _atomic_write(journal_path, ("\n".join(kept) + "\n" if kept else "").encode("utf-8"))
        marker_path.unlink()
        if undo.exists():
            shutil.rmtree(undo)

    def transact(
        self,
        collection_id: str,
        mutation: Callable[[Collection], Collection],
        *,
        label: str = "mutation",
        summary: Optional[dict] = None,
        expected_revision: Optional[int] = None,
    ) -> Collection:
        """Apply ``mutation`` atomically.

        Either every file is updated and a journal record appended, or (on
        error, validation failure or crash) no visible change remains. A
        no-op mutation commits nothing and consumes no revision.
        """
        cdir = self._require_dir(collection_id)
        with self._writer_lock(cdir):
            self._recover(cdir)
            before = load_collection(cdir)
            if expected_revision is not None and before.revision != expected_revision:
                raise ConflictError(
                    f"collection {collection_id} is at revision {before.revision}, "
                    f"expected {expected_revision}"
                )
            after = mutation(before)
            if after.id != before.id:
                raise StorageError("mutations must not change the collection id")
            if after.schema.version < before.schema.version:
                raise StorageError("schema version must not decrease")
            after = replace(after, revision=before.revision + 1)

            report = validate_collection(
                after, blob_exists=lambda sha: self.blob_exists(collection_id, sha)
            )
            if not report.ok:
                raise ValidationRejected(report)

            old_files = self._current_files(cdir)
            new_files = self._serialize_state(after)
            # ignore the revision-only meta difference when deciding no-op
            unbumped = self._serialize_state(replace(after, revision=before.revision))
            if unbumped == old_files:
                return before

            changed = sorted(
                rel for rel in new_files
                if rel in old_files and old_files[rel] != new_files[rel]
            )
            added = sorted(rel for rel in new_files if rel not in old_files)
            deleted = sorted(rel for rel in old_files if rel not in new_files)

            undo = cdir / UNDO_DIR
            if undo.exists():
                shutil.rmtree(undo)
            for rel in changed + deleted:
                src = cdir / rel
                dst = undo / rel
                dst.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(src, dst)
            marker = {
                "revision": after.revision,
                "changed": changed,
                "added": added,
                "deleted": deleted,
            }
            _atomic_write(cdir / TXN_MARKER, canonical_bytes(marker))

            self._append_journal(cdir, {
                "revision": after.revision,
                "ts": datetime.now(timezone.utc).isoformat(),
                "op": label,
                "summary": summary or {},
            })

            self._apply_files(cdir, new_files, changed + added, deleted)

            (cdir / TXN_MARKER).unlink()
            if undo.exists():
                shutil.rmtree(undo)
            return after

    def _apply_files(
        self, cdir: Path, new_files: dict[str, bytes], writes: list[str], deletes: list[str]
    ) -> None:
        # split out so crash tests can interrupt the transaction mid-write
        for rel in writes:
            path = cdir / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(path, new_files[rel])
        for rel in deletes:
            path = cdir / rel
            if path.exists():
                path.unlink()

    def read_journal(self, collection_id: str) -> list[dict]:
        cdir = self._require_dir(collection_id)
        current = self.load(collection_id).revision
        records = []
        with open(cdir / JOURNAL_FILE, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record.get("revision", 0) <= current:  # skip aborted trailing entries
                    records.append(record)
        return records


# --- loading -------------------------------------------------------------------------


def _read_consistent(cdir: Path, rel: str, marker: Optional[dict]) -> Optional[bytes]:
    """Read a store file, overlaying the undo copy if a transaction was interrupted."""
    if marker is not None:
        if rel in marker.get("added", []):
            return None
        if rel in marker.get("changed", []) or rel in marker.get("deleted", []):
            undo_path = cdir / UNDO_DIR / rel
            if undo_path.is_file():
                return undo_path.read_bytes()
            return None
    path = cdir / rel
    if not path.is_file():
        return None
    return path.read_bytes()


def load_collection(directory: Path | str) -> Collection:
    """Reconstruct a collection from its on-disk layout; fails closed on corrupt files."""
    cdir = Path(directory)
    marker = None
    marker_path = cdir / TXN_MARKER
    if marker_path.is_file():
        try:
            marker = json.loads(marker_path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError):
            raise CorruptStore(marker_path, "unreadable transaction marker")

    def load_json(rel: str) -> dict:
        raw = _read_consistent(cdir, rel, marker)
        if raw is None:
            raise CorruptStore(cdir / rel, "missing file")
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptStore(cdir / rel, str(exc)) from exc

    meta = load_json(META_FILE)
    schema = schema_from_dict(load_json(SCHEMA_FILE))
    resources_raw = load_json(RESOURCES_FILE)

    doc_files = {f"{DOCUMENTS_DIR}/{p.name}" for p in (cdir / DOCUMENTS_DIR).glob("*.json")}
    if marker is not None:
        doc_files -= set(marker.get("added", []))
        doc_files |= {rel for rel in marker.get("deleted", []) if rel.startswith(DOCUMENTS_DIR)}
    documents = {}
    for rel in sorted(doc_files):
        doc = document_from_dict(load_json(rel))
        expected = rel[len(DOCUMENTS_DIR) + 1:-len(".json")]
        if doc.id != expected:
            raise CorruptStore(cdir / rel, f"document id {doc.id!r} does not match filename")
        documents[doc.id] = doc

    try:
        resources = {
            r["id"]: resource_from_dict(r) for r in resources_raw["resources"]
        }
        collection = Collection(
            id=meta["id"],
            name=meta["name"],
            schema=schema,
            documents=documents,
            resources=resources,
            revision=meta["revision"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptStore(cdir, str(exc)) from exc
    if collection.schema.version != meta.get("schema_version", collection.schema.version):
        raise CorruptStore(cdir / META_FILE, "schema version disagrees with schema file")
    return collection
