"""Acceptance gate: the seven headline guarantees, one test per criterion.

Each test prints a single verdict line (visible with -s or -rA, and in
the captured output on failure) so a transcript shows the scorecard at a
glance. Counts and timing budgets are asserted inside the test bodies:

  1. fixture import parity      72 elements, BFS-closure documents, <10 s
  2. curation parity            28 retained + 2 documented additions, 0 violations
  3. reference package shape    required files, manifest structure, golden match
  4. conformance preservation   >=1000 random op sequences, 0 violations, <60 s
  5. cycle robustness           graphs to 50 docs incl. complete digraphs, <30 s
  6. determinism                byte-identical seeded exports, 100 round trips
  7. CLI/HTTP equivalence       identical stores modulo journal timestamps
"""

import functools
import io
import json
import random
import time
import zipfile
from dataclasses import replace
from pathlib import Path
from xml.etree import ElementTree

import pytest
from fastapi.testclient import TestClient

from recollect.cli import main as cli_main
from recollect.imscp import ExportConfig, build_item_tree, export_package, validate_package
from recollect.importers.medpix import CrawlConfig, DiskSource, HttpSource, run_import
from recollect.mock_medpix import create_app as create_mock_app
from recollect.model import LocalBlob, validate_collection
from recollect.reconfigure import (
    Merge,
    Move,
    Rename,
    apply_op,
    apply_plan,
    diff_schemas,
    plan_from_dict,
)
from recollect.service import create_app
from recollect.store import CollectionStore

from .conftest import record_verdict
from .generators import graph_collection, random_applicable_op, random_collection
from .oracles import reachable_by_bfs, retag, scalar_multiset, spanning_items, store_snapshot
from .test_importers import ALL_IDS, SEEDS, fixture_edges

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "data" / "golden_manifest.xml"
PLAN_FILE = FIXTURES / "plans" / "medpix-curation.json"
MEDPIX_CONFIG = {
    "source": {"kind": "disk", "root": str(FIXTURES / "medpix")},
    "case_seeds": SEEDS,
}
NS = {
    "cp": "http://www.imsglobal.org/xsd/imscp_v1p1",
    "imsmd": "http://www.imsglobal.org/xsd/imsmd_v1p2",
}


def verdict(number: int, label: str):
    """Emit one PASS/FAIL line per criterion, whatever pytest shows around it."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            started = time.monotonic()
            try:
                fn(*args, **kwargs)
            except BaseException:
                line = f"[FAIL] criterion {number}: {label}"
                print(line)
                record_verdict(line)
                raise
            elapsed = time.monotonic() - started
            line = f"[PASS] criterion {number}: {label} ({elapsed:.2f}s)"
            print(line)
            record_verdict(line)

        return wrapper

    return decorate


@pytest.fixture(scope="module")
def curated(tmp_path_factory):
    """Imported + curated fixture collection, with a blob reader."""
    store = CollectionStore(tmp_path_factory.mktemp("acceptance") / "store")
    cid = store.create_collection("chest").id
    run_import(store, cid, DiskSource(FIXTURES / "medpix"),
               CrawlConfig(case_seeds=SEEDS))
    plan = plan_from_dict(json.loads(PLAN_FILE.read_text("utf-8")))
    collection, _ = apply_plan(store.load(cid), plan)
    return collection, (lambda sha: store.read_blob(cid, sha))


# --- 1: fixture import parity ---------------------------------------------------


@verdict(1, "fixture import parity (72 elements, BFS closure, < 10 s)")
def test_criterion_1_fixture_import_parity(tmp_path):
    started = time.monotonic()
    store = CollectionStore(tmp_path / "store")
    cid = store.create_collection("parity").id
    # crawl over HTTP against the bundled mock service, unbounded cap
    with TestClient(create_mock_app(FIXTURES / "medpix")) as http:
        source = HttpSource("http://testserver", client=http)
        report = run_import(store, cid, source, CrawlConfig(case_seeds=SEEDS))
    elapsed = time.monotonic() - started

    collection = store.load(cid)
    assert collection.schema.element_count == 72
    oracle = reachable_by_bfs(
        {k: set(v) for k, v in fixture_edges().items()}, SEEDS
    )
    assert set(collection.documents) == oracle == ALL_IDS
    assert report.documents_imported == 12
    assert not report.capped
    assert elapsed < 10.0, f"crawl took {elapsed:.2f}s"


# --- 2: curation parity ------------------------------------------------------------


@verdict(2, "curation parity (28 retained + documented additions, 0 violations)")
def test_criterion_2_curation_parity(tmp_path):
    store = CollectionStore(tmp_path / "store")
    cid = store.create_collection("curation").id
    run_import(store, cid, DiskSource(FIXTURES / "medpix"),
               CrawlConfig(case_seeds=SEEDS))
    before = store.load(cid)
    assert before.schema.element_count == 72

    plan = plan_from_dict(json.loads(PLAN_FILE.read_text("utf-8")))
    assert plan.id == "medpix-curation"
    after, report = apply_plan(before, plan)

    retained = set(before.schema.elements) & set(after.schema.elements)
    assert len(retained) == 28
    diff = diff_schemas(before.schema, after.schema)
    assert sorted(diff.added) == ["classification", "personal-data"]
    assert after.schema.element_count == 28 + 2

    validation = validate_collection(after)
    assert validation.ok, validation.violations


# --- 3: reference package shape ------------------------------------------------------


@verdict(3, "reference package (files, manifest structure, golden manifest)")
def test_criterion_3_reference_package(curated):
    collection, read_blob = curated
    config = ExportConfig(roots=("9070",), title="Chest Lesson", seed=9070)
    data, _ = export_package(collection, config, read_blob)

    archive = zipfile.ZipFile(io.BytesIO(data))
    names = set(archive.namelist())
    assert {"imsmanifest.xml", "9070.html", "9203.html"} <= names

    xml = archive.read("imsmanifest.xml")
    root = ElementTree.fromstring(xml)
    assert root.findtext("cp:metadata/cp:schema", namespaces=NS) == "IMS Content"
    assert root.findtext("cp:metadata/cp:schemaVersion", namespaces=NS) == "1.2"

    organizations = root.find("cp:organizations", namespaces=NS)
    orgs = organizations.findall("cp:organization", namespaces=NS)
    assert len(orgs) == 1
    assert orgs[0].get("structure") == "hierarchical"
    resource_ids = {
        r.get("identifier"): r
        for r in root.findall("cp:resources/cp:resource", namespaces=NS)
    }
    assert organizations.get("default") == orgs[0].get("identifier")
    wrapper = orgs[0].find("cp:item", namespaces=NS)
    assert wrapper.get("identifierRef") in resource_ids

    # nesting: Case -> Topic -> repeated Case leaf; the cycle is broken there
    case = wrapper.find("cp:item", namespaces=NS)
    topic = case.find("cp:item", namespaces=NS)
    repeat = topic.find("cp:item", namespaces=NS)
    assert case.get("identifier").startswith("Case:")
    assert topic.get("identifier").startswith("Topic:")
    assert repeat.get("identifier").startswith("Case:")
    assert repeat.get("identifierRef") == case.get("identifierRef")
    assert repeat.find("cp:item", namespaces=NS) is None

    assert all(r.get("type") == "webcontent" for r in resource_ids.values())
    for item in (wrapper, case, topic, repeat):
        assert item.get("identifierRef") in resource_ids

    report = validate_package(data)
    assert report.ok, report.violations

    # golden comparison, identifier digits normalized; the fixed seed makes
    # the stronger byte-level equality hold as well
    def normalized(text: bytes) -> bytes:
        return text.replace(b"CLAVY_MANIFEST0869270656613948", b"CLAVY_MANIFEST#")

    golden = GOLDEN.read_bytes()
    assert normalized(xml) == normalized(golden)
    assert xml == golden


# --- 4: conformance preservation -----------------------------------------------------


@verdict(4, "conformance preservation (>= 1000 cases, 0 violations, < 60 s)")
def test_criterion_4_conformance_property():
    started = time.monotonic()
    cases = 1000
    applied = 0
    for case in range(cases):
        rng = random.Random(40_000 + case)
        collection = random_collection(rng, max_elements=12, max_documents=5)
        for _ in range(rng.randint(1, 4)):
            op = random_applicable_op(rng, collection.schema)
            before_bag = scalar_multiset(collection)
            try:
                collection, _ = apply_op(collection, op)
            except Exception as exc:  # applicable ops must not fail
                raise AssertionError(f"case {case}: {op} raised {exc!r}") from exc
            applied += 1

            report = validate_collection(collection)
            assert report.ok, f"case {case}: {op} -> {report.violations[:3]}"
            if isinstance(op, (Rename, Move)):
                assert scalar_multiset(collection) == before_bag, f"case {case}: {op}"
            elif isinstance(op, Merge):
                expected = retag(before_bag, op.source_id, op.target_id)
                assert scalar_multiset(collection) == expected, f"case {case}: {op}"
    elapsed = time.monotonic() - started
    assert cases >= 1000
    assert applied >= cases
    assert elapsed < 60.0, f"{cases} cases took {elapsed:.2f}s"


# --- 5: cycle robustness ---------------------------------------------------------------


@verdict(5, "cycle robustness (graphs to 50 docs incl. complete digraphs, < 30 s)")
def test_criterion_5_cycle_robustness():
    started = time.monotonic()

    def check(edges: dict[str, list[str]], roots: list[str], label: str) -> None:
        collection = graph_collection(edges)
        top, order = build_item_tree(collection, roots)
        assert len(order) == len(set(order)), label
        expected_count, expected_set = spanning_items(edges, roots)
        assert set(order) == expected_set, label
        assert len(list(top.walk())) - 1 == expected_count, label

    # the degenerate shapes first: self-loop, 2-cycle, complete digraphs
    check({"a": ["a"]}, ["a"], "self-loop")
    check({"a": ["b"], "b": ["a"]}, ["a"], "2-cycle")
    for n in (5, 20, 50):
        ids = [f"k{i}" for i in range(n)]
        complete = {i: [j for j in ids if j != i] for i in ids}
        check(complete, [ids[0]], f"complete K{n}")

    for seed in range(60):
        rng = random.Random(50_000 + seed)
        n = rng.randint(1, 50)
        ids = [f"d{i}" for i in range(n)]
        density = rng.choice([0.02, 0.1, 0.3, 0.8])
        edges = {
            i: [j for j in ids if rng.random() < density] for i in ids
        }
        roots = rng.sample(ids, k=rng.randint(1, min(4, n)))
        check(edges, roots, f"seed {seed}")

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"graphs took {elapsed:.2f}s"


# --- 6: determinism ---------------------------------------------------------------------


@verdict(6, "determinism (byte-identical seeded exports, 100 save/load round trips)")
def test_criterion_6_determinism(curated, tmp_path):
    collection, read_blob = curated
    config = ExportConfig(roots=("9070", "7102"), title="Lesson", seed=2024)
    first, _ = export_package(collection, config, read_blob)
    second, _ = export_package(collection, config, read_blob)
    assert first == second

    store = CollectionStore(tmp_path / "roundtrip")
    for i in range(100):
        rng = random.Random(60_000 + i)
        target = random_collection(rng, max_elements=10, max_documents=4)
        cid = store.create_collection(f"roundtrip {i}").id

        resources = {}
        for rid, resource in target.resources.items():
            if isinstance(resource.origin, LocalBlob):
                data = f"blob {i} {rid}".encode()
                sha = store.put_blob(cid, data)
                resource = replace(
                    resource, origin=LocalBlob(sha), byte_size=len(data)
                )
            resources[rid] = resource
        target = replace(target, id=cid, resources=resources)

        store.transact(cid, lambda _, t=target: t, label="seed")
        loaded = store.load(cid)
        assert loaded.schema == target.schema, i
        assert loaded.documents == target.documents, i
        assert loaded.resources == target.resources, i
        assert loaded.name == target.name, i


# --- 7: CLI / HTTP equivalence ------------------------------------------------------------


@verdict(7, "CLI/HTTP equivalence (import, reconfigure, export)")
def test_criterion_7_cli_http_equivalence(tmp_path, capsys):
    cli_root = tmp_path / "store-cli"
    http_root = tmp_path / "store-http"
    config_file = tmp_path / "medpix.json"
    config_file.write_text(json.dumps(MEDPIX_CONFIG))

    def cli(*args: str) -> int:
        code = cli_main(["--store-root", str(cli_root), *args])
        capsys.readouterr()
        return code

    with TestClient(create_app(http_root)) as http:
        # scenario 1: import
        assert cli("import", "medpix", "--name", "MedPix Demo",
                   "--config", str(config_file)) == 0
        assert http.post("/collections", json={"name": "MedPix Demo"}).status_code == 201
        r = http.post("/collections/medpix-demo/imports",
                      json={"plugin": "medpix", "config": MEDPIX_CONFIG})
        assert r.status_code == 201
        assert store_snapshot(cli_root) == store_snapshot(http_root)

        # scenario 2: reconfigure
        assert cli("reconfigure", "medpix-demo", "--plan", str(PLAN_FILE)) == 0
        r = http.post("/collections/medpix-demo/ops",
                      json={"plan": json.loads(PLAN_FILE.read_text())})
        assert r.status_code == 200
        assert store_snapshot(cli_root) == store_snapshot(http_root)

        # scenario 3: export; neither front end may mutate its store
        out_zip = tmp_path / "cli.zip"
        assert cli("export", "medpix-demo", "--root", "9070",
                   "--title", "Chest Lesson", "--seed", "9070",
                   "--output", str(out_zip)) == 0
        job = http.post(
            "/collections/medpix-demo/exports",
            json={"roots": ["9070"], "title": "Chest Lesson", "seed": 9070},
        ).json()["export"]
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            status = http.get(f"/exports/{job['id']}").json()["export"]
            if status["status"] in ("done", "failed"):
                break
            time.sleep(0.02)
        assert status["status"] == "done"
        package = http.get(f"/exports/{job['id']}/package").content

        assert out_zip.read_bytes() == package
        assert store_snapshot(cli_root) == store_snapshot(http_root)
