"""Command line front end.

Drives the same engine calls the HTTP service exposes, against a store
directory picked with --store-root (or the RECOLLECT_STORE_ROOT
environment variable). Exit codes: 0 success, 2 bad usage or
configuration, 3 the operation was rejected; rejected operations leave
the store untouched.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .errors import EngineError, UnknownPlugin
from .imscp import ExportConfig, export_package, validate_package
from .importers import get_plugin, list_plugins
from .model import Collection, validate_collection
from .reconfigure import apply_plan, diff_schemas, plan_from_dict
from .store import CollectionStore

DEFAULT_STORE_ROOT = "./recollect-store"


def _store(args) -> CollectionStore:
    return CollectionStore(Path(args.store_root))


def _read_json(path: str, what: str) -> dict:
    """Parse a JSON file; any problem is a usage error, signalled as ValueError."""
    try:
        return json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise ValueError(f"cannot read {what} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{what} {path!r} is not valid JSON: {exc}") from exc


# --- subcommands ------------------------------------------------------------------


def cmd_collections(args) -> int:
    infos = _store(args).list_collections()
    if not infos:
        print("no collections")
        return 0
    for info in infos:
        print(
            f"{info.id}  rev {info.revision}  schema v{info.schema_version}  "
            f"{info.document_count} documents, {info.resource_count} resources  "
            f"({info.name})"
        )
    return 0


def cmd_import(args) -> int:
    try:
        descriptor = get_plugin(args.plugin)
    except UnknownPlugin as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = _read_json(args.config, "config file") if args.config else {}

    store = _store(args)
    if args.collection:
        collection_id = args.collection
    else:
        info = store.create_collection(args.name or args.plugin)
        collection_id = info.id
        print(f"created collection {collection_id}")

    report = descriptor.build(store, collection_id, config)
    print(report.as_text())
    print(f"collection: {collection_id}")
    return 0


def cmd_reconfigure(args) -> int:
    if (args.plan is None) == (not args.op):
        print("error: pass exactly one of --plan or --op", file=sys.stderr)
        return 2
    if args.plan is not None:
        plan_dict = _read_json(args.plan, "plan file")
    else:
        try:
            ops = [json.loads(text) for text in args.op]
        except json.JSONDecodeError as exc:
            raise ValueError(f"--op is not valid JSON: {exc}") from exc
        plan_dict = {
            "plan_id": "adhoc",
            "description": "ops given on the command line",
            "authored_schema_version": 0,
            "ops": ops,
        }

    store = _store(args)
    before = store.load(args.collection)
    if args.plan is None:
        # authored against whatever the collection is at right now
        plan_dict["authored_schema_version"] = before.schema.version
    plan = plan_from_dict(plan_dict)

    if args.dry_run:
        migrated, report = apply_plan(before, plan)
        after = migrated
    else:
        captured = {}

        def mutate(collection: Collection) -> Collection:
            migrated, report = apply_plan(collection, plan)
            captured["report"] = report
            return migrated

        after = store.transact(
            args.collection, mutate, label="reconfigure",
            summary={"plan": plan.id, "ops": len(plan.ops)},
            expected_revision=args.expected_revision,
        )
        report = captured["report"]

    if args.dry_run:
        print("dry run: nothing saved")
    print(f"plan: {plan.id} ({len(plan.ops)} ops)")
    print(f"final elements: {report.final_element_count}")
    print(f"schema version: {report.final_schema_version}")
    print(f"documents touched: {report.documents_touched}")
    diff = diff_schemas(before.schema, after.schema)
    if diff.added:
        print(f"added: {', '.join(diff.added)}")
    if diff.removed:
        print(f"removed: {len(diff.removed)} elements")
    for eid, old, new in diff.renamed:
        print(f"renamed: {eid}: {old!r} -> {new!r}")
    if diff.moved:
        print(f"moved: {', '.join(diff.moved)}")
    for line in report.warnings:
        print(f"warning: {line}")
    if not args.dry_run:
        print(f"revision: {after.revision}")
    return 0


def cmd_export(args) -> int:
    roots = [r for r in args.root if r]
    if not roots:
        print("error: no export roots given", file=sys.stderr)
        return 2
    store = _store(args)
    collection = store.load(args.collection)
    config = ExportConfig(
        roots=tuple(roots), title=args.title, language=args.language,
        seed=args.seed, depth_limit=args.depth_limit,
    )
    data, manifest = export_package(
        collection, config,
        read_blob=lambda sha: store.read_blob(args.collection, sha),
    )
    out = Path(args.output)
    out.write_bytes(data)
    print(f"wrote {out} ({len(data)} bytes, manifest {manifest.identifier})")

    if args.no_validate:
        return 0
    report = validate_package(data)
    if report.ok:
        print("package ok")
        return 0
    for violation in report.violations:
        print(f"package violation: {violation.code}: {violation.message}")
    return 3


def cmd_validate(args) -> int:
    target = Path(args.target)
    if target.is_file():
        report = validate_package(target.read_bytes())
        label = f"package {target}"
    else:
        store = _store(args)
        collection = store.load(args.target)
        report = validate_collection(
            collection,
            blob_exists=lambda sha: store.blob_exists(args.target, sha),
        )
        label = (
            f"collection {args.target} "
            f"({len(collection.documents)} documents, "
            f"{len(collection.resources)} resources)"
        )
    if report.ok:
        print(f"{label}: ok")
        return 0
    for violation in report.violations:
        where = f" [{violation.document_id}]" if violation.document_id else ""
        print(f"{violation.code}: {violation.message}{where}")
    return 3


def cmd_plugins(args) -> int:
    for descriptor in list_plugins():
        print(f"{descriptor.name} {descriptor.version}  {descriptor.description}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    ui_dist: Optional[Path] = Path(args.ui_dist) if args.ui_dist else None
    if ui_dist is None and Path("frontend/dist").is_dir():
        ui_dist = Path("frontend/dist")
    app = create_app(Path(args.store_root), ui_dist=ui_dist)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_mock_medpix(args) -> int:
    import uvicorn

    from .mock_medpix import create_app

    app = create_app(Path(args.fixtures))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recollect",
        description="Import, reshape and export metadata collections.",
    )
    parser.add_argument(
        "--store-root",
        default=os.environ.get("RECOLLECT_STORE_ROOT", DEFAULT_STORE_ROOT),
        help="store directory (env: RECOLLECT_STORE_ROOT)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collections", help="list collections in the store")
    p.set_defaults(func=cmd_collections)

    p = sub.add_parser("plugins", help="list import plugins")
    p.set_defaults(func=cmd_plugins)

    p = sub.add_parser("import", help="run an import plugin")
    p.add_argument("plugin", help="plugin name, see 'plugins'")
    p.add_argument("--config", help="JSON file with plugin configuration")
    p.add_argument("--collection", help="import into this existing collection")
    p.add_argument("--name", help="create a collection with this name first")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("reconfigure", help="apply a transformation plan")
    p.add_argument("collection")
    p.add_argument("--plan", help="JSON plan file")
    p.add_argument("--op", action="append", default=[],
                   help="single op as inline JSON (repeatable)")
    p.add_argument("--dry-run", action="store_true",
                   help="report what would change without saving")
    p.add_argument("--expected-revision", type=int, default=None)
    p.set_defaults(func=cmd_reconfigure)

    p = sub.add_parser("export", help="write a content package zip")
    p.add_argument("collection")
    p.add_argument("--root", action="append", default=[], required=True,
                   help="root document id (repeatable)")
    p.add_argument("--title", required=True)
    p.add_argument("--output", required=True, help="zip file to write")
    p.add_argument("--language", default="en-US")
    p.add_argument("--seed", type=int, default=None,
                   help="fix identifier generation for reproducible output")
    p.add_argument("--depth-limit", type=int, default=None)
    p.add_argument("--no-validate", action="store_true",
                   help="skip the structural check of the written package")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate", help="check a collection or a package zip")
    p.add_argument("target", help="collection id, or path to a package zip")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dist", help="directory with the built web UI")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("mock-medpix", help="serve fixture files MedPix-style")
    p.add_argument("--fixtures", required=True, help="fixture directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8901)
    p.set_defaults(func=cmd_mock_medpix)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
