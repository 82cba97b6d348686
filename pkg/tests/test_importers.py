"""Importer tests: crawl closure, mapping, cap handling, HTTP source."""

from __future__ import annotations

import json
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient

from recollect.errors import (
    DuplicatePlugin,
    EndpointUnreachable,
    MappingError,
    RecordParseError,
    SeedNotFound,
    UnknownPlugin,
)
from recollect.importers import (
    CapExceededWarning,
    ImportPluginDescriptor,
    get_plugin,
    list_plugins,
    register_plugin,
)
from recollect.importers.generic import (
    GenericMapping,
    infer_schema,
    load_records,
    run_generic_import,
)
from recollect.importers.medpix import (
    CrawlConfig,
    DiskSource,
    HttpSource,
    crawl,
    medpix_schema,
    run_import,
)
from recollect.mock_medpix import create_app
from recollect.model import (
    ElementKind,
    ExternalUrl,
    LinkRef,
    LocalBlob,
    iter_link_targets,
    validate_collection,
    validate_schema,
)
from recollect.store import CollectionStore

from .oracles import reachable_by_bfs

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures" / "medpix"
ALL_IDS = {
    "9070", "7102", "7103", "7104", "7105", "7106", "8001",
    "9203", "4501", "4502", "4503", "4504",
}
SEEDS = ["9070", "7102", "8001"]

# sha256 of fixtures/medpix/images/img9070a.png, frozen independently
IMG_9070A_SHA = "cedf8bbe28c4e8b2fcca8b43b2aeff77e620bac362391c7debc39388fb37019d"


def fixture_edges() -> dict[str, list[str]]:
    """Reference graph read straight from the raw fixture JSON."""
    edges: dict[str, list[str]] = {}
    for path in (FIXTURES / "cases").glob("*.json"):
        record = json.loads(path.read_text("utf-8"))
        edges[record["uid"]] = list(record.get("topics") or [])
    for path in (FIXTURES / "topics").glob("*.json"):
        record = json.loads(path.read_text("utf-8"))
        edges[record["uid"]] = list(record.get("cases") or [])
    return edges


def make_store(tmp_path: Path) -> tuple[CollectionStore, str]:
    store = CollectionStore(tmp_path / "store")
    info = store.create_collection("medpix import")
    return store, info.id


# --- plugin registry ---------------------------------------------------------


def test_builtin_plugins_registered():
    names = {p.name for p in list_plugins()}
    assert {"medpix", "generic-json"} <= names
    assert get_plugin("medpix").version == "1.0"


def test_unknown_plugin():
    with pytest.raises(UnknownPlugin):
        get_plugin("no-such-source")


def test_duplicate_plugin_rejected():
    with pytest.raises(DuplicatePlugin):
        register_plugin(ImportPluginDescriptor(
            name="medpix", version="9.9", description="dupe", build=run_import,
        ))


# --- the fixed schema ----------------------------------------------------------


def test_schema_has_exactly_72_elements():
    schema = medpix_schema()
    assert schema.element_count == 72
    assert validate_schema(schema) == []


def test_schema_roots_and_kinds():
    schema = medpix_schema()
    assert [r.id for r in schema.roots()] == ["case", "topic"]
    assert schema.element("case.image.file").kind is ElementKind.RESOURCE
    assert schema.element("case.related_topic").kind is ElementKind.LINK
    assert schema.element("topic.related_case").kind is ElementKind.LINK
    assert schema.element("case.encounter").kind is ElementKind.STRUCTURAL
    # 44 case-side elements, 28 topic-side
    case_count = sum(1 for e in schema.elements.values()
                     if e.id == "case" or e.id.startswith("case."))
    topic_count = sum(1 for e in schema.elements.values()
                      if e.id == "topic" or e.id.startswith("topic."))
    assert (case_count, topic_count) == (44, 28)


# --- crawling ------------------------------------------------------------------


def test_crawl_reaches_reference_closure():
    fetched, capped, missing = crawl(
        DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS)
    )
    assert not capped
    assert missing == []
    assert set(fetched) == ALL_IDS
    expected = reachable_by_bfs(fixture_edges(), SEEDS)
    assert set(fetched) == expected


def test_crawl_visits_each_record_once(monkeypatch):
    source = DiskSource(FIXTURES)
    calls: list[str] = []
    original_case, original_topic = source.get_case, source.get_topic
    monkeypatch.setattr(source, "get_case",
                        lambda cid: calls.append(f"c{cid}") or original_case(cid))
    monkeypatch.setattr(source, "get_topic",
                        lambda tid: calls.append(f"t{tid}") or original_topic(tid))
    crawl(source, CrawlConfig(case_seeds=SEEDS))
    topic_fetches = [c for c in calls if c.startswith("t")]
    case_fetches = [c for c in calls if c.startswith("c")]
    assert len(topic_fetches) == len(set(topic_fetches)) == 5
    # DiskSource's url helper re-reads the case file, so each case id shows
    # up twice; the crawl itself never revisits an id
    assert len(set(case_fetches)) == 7
    assert len(case_fetches) == 14


def test_missing_seed_is_fatal():
    with pytest.raises(SeedNotFound) as err:
        crawl(DiskSource(FIXTURES), CrawlConfig(case_seeds=["31337"]))
    assert "case:31337" in str(err.value)


def test_missing_reference_mid_crawl_warns_and_drops(tmp_path):
    root = tmp_path / "src"
    (root / "cases").mkdir(parents=True)
    (root / "topics").mkdir()
    (root / "cases" / "1.json").write_text(json.dumps(
        {"uid": "1", "title": "lonely case", "topics": ["404"]}
    ), "utf-8")
    fetched, capped, missing = crawl(
        DiskSource(root), CrawlConfig(case_seeds=["1"])
    )
    assert set(fetched) == {"1"}
    assert not capped
    assert len(missing) == 1 and "404" in missing[0]


def test_uid_mismatch_rejected(tmp_path):
    root = tmp_path / "src"
    (root / "cases").mkdir(parents=True)
    (root / "cases" / "5.json").write_text(json.dumps({"uid": "6", "title": "x"}), "utf-8")
    with pytest.raises(RecordParseError):
        crawl(DiskSource(root), CrawlConfig(case_seeds=["5"]))


def test_cap_stops_crawl_and_flags():
    fetched, capped, _ = crawl(
        DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS, max_documents=5)
    )
    assert capped
    assert len(fetched) == 5
    # BFS order from the seeds: the three seed cases, then their topics
    assert set(fetched) == {"9070", "7102", "8001", "9203", "4501"}


def test_politeness_delay_sleeps_between_requests(monkeypatch):
    naps: list[float] = []
    monkeypatch.setattr("recollect.importers.medpix.time.sleep", naps.append)
    crawl(DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS, politeness_delay=0.25))
    assert len(naps) == 12
    assert set(naps) == {0.25}


# --- end-to-end import over the disk fixtures ----------------------------------


def test_import_builds_documents_resources_and_links(tmp_path):
    store, cid = make_store(tmp_path)
    report = run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))

    assert report.documents_imported == 12
    assert report.resources_imported == 8
    assert report.links_resolved == 15
    assert report.links_dropped == 0
    assert not report.capped
    assert "documents: 12" in report.as_text()

    collection = store.load(cid)
    assert set(collection.documents) == ALL_IDS
    assert collection.schema.element_count == 72
    check = validate_collection(
        collection, blob_exists=lambda sha: store.blob_exists(cid, sha)
    )
    assert check.ok, check.violations


def test_import_stores_blobs_content_addressed(tmp_path):
    store, cid = make_store(tmp_path)
    run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))
    collection = store.load(cid)

    first_image = collection.resources["img-9070-1"]
    assert isinstance(first_image.origin, LocalBlob)
    assert first_image.origin.sha256 == IMG_9070A_SHA
    assert first_image.media_type == "image/png"
    assert store.blob_exists(cid, IMG_9070A_SHA)
    assert store.read_blob(cid, IMG_9070A_SHA) == (
        FIXTURES / "images" / "img9070a.png"
    ).read_bytes()

    external = collection.resources["img-7103-1"]
    assert isinstance(external.origin, ExternalUrl)
    assert external.origin.url == "https://pacs.example.edu/series/7103/pa.png"


def test_import_document_shape(tmp_path):
    store, cid = make_store(tmp_path)
    run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))
    doc = store.load(cid).document("9070")

    assert doc.title == '74 yo woman with "tearing" chest pain.'
    # every value sits inside the single root group
    assert len(doc.values) == 1 and doc.values[0][0] == "case"
    root = doc.values[0][1]
    by_element: dict[str, int] = {}
    for eid, _ in root.children:
        by_element[eid] = by_element.get(eid, 0) + 1
    assert by_element["case.title"] == 1
    assert by_element["case.image"] == 2
    assert by_element["case.encounter"] == 2
    assert by_element["case.related_topic"] == 1
    assert by_element["case.clinical_history"] == 1
    assert by_element["case.history"] == 1


def test_no_dangling_links_even_when_capped(tmp_path):
    store, cid = make_store(tmp_path)
    with pytest.warns(CapExceededWarning):
        report = run_import(
            store, cid, DiskSource(FIXTURES),
            CrawlConfig(case_seeds=SEEDS, max_documents=5),
        )
    assert report.capped
    assert report.links_dropped > 0
    collection = store.load(cid)
    assert len(collection.documents) == 5
    for doc in collection.documents.values():
        for target in iter_link_targets(doc):
            assert target in collection.documents


def test_import_twice_is_stable(tmp_path):
    store, cid = make_store(tmp_path)
    run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))
    first = store.load(cid)
    run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))
    second = store.load(cid)
    assert first.documents == second.documents
    assert first.resources == second.resources


def test_import_refuses_foreign_schema(tmp_path):
    store, cid = make_store(tmp_path)
    run_generic_import(store, cid, [{"id": "r1", "note": "hello"}])
    with pytest.raises(MappingError):
        run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))


def test_advertised_image_missing_is_fatal(tmp_path):
    root = tmp_path / "src"
    (root / "cases").mkdir(parents=True)
    (root / "cases" / "2.json").write_text(json.dumps({
        "uid": "2", "title": "ghost image",
        "images": [{"caption": "gone", "file": "ghost.png"}],
    }), "utf-8")
    store, cid = make_store(tmp_path)
    with pytest.raises(RecordParseError):
        run_import(store, cid, DiskSource(root), CrawlConfig(case_seeds=["2"]))


# --- mock service + HTTP source -------------------------------------------------


@pytest.fixture()
def mock_client() -> TestClient:
    return TestClient(create_app(FIXTURES))


def test_mock_service_serves_records(mock_client):
    record = mock_client.get("/cases/9070").json()
    assert record["uid"] == "9070"
    assert mock_client.get("/cases/9070/url").json()["url"].endswith("/case/9070")
    assert mock_client.get("/topics/4501").json()["uid"] == "4501"
    assert mock_client.get("/cases/424242").status_code == 404
    image = mock_client.get("/images/img9070a.png")
    assert image.status_code == 200
    assert image.headers["content-type"] == "image/png"
    assert image.content == (FIXTURES / "images" / "img9070a.png").read_bytes()


def test_mock_service_rejects_dotfiles(mock_client):
    assert mock_client.get("/images/.hidden").status_code in (400, 404)


def test_http_source_matches_disk_source(tmp_path, mock_client):
    http = HttpSource("http://testserver", client=mock_client)
    disk = DiskSource(FIXTURES)
    assert http.get_case("9070") == disk.get_case("9070")
    assert http.get_topic("9203") == disk.get_topic("9203")
    assert http.get_case_url("9070") == disk.get_case_url("9070")
    assert http.get_image("img9070a.png") == disk.get_image("img9070a.png")
    assert http.get_case("424242") is None
    assert http.get_image("nope.png") is None


def test_import_over_http_equals_disk_import(tmp_path, mock_client):
    store = CollectionStore(tmp_path / "store")
    via_disk = store.create_collection("disk").id
    via_http = store.create_collection("http").id
    run_import(store, via_disk, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))
    run_import(
        store, via_http,
        HttpSource("http://testserver", client=mock_client),
        CrawlConfig(case_seeds=SEEDS),
    )
    a, b = store.load(via_disk), store.load(via_http)
    assert a.documents == b.documents
    assert a.resources == b.resources
    assert a.schema == b.schema


def test_http_source_raises_on_server_error():
    def boom(request: httpx.Request) -> httpx.Response:
        return httpx.Response(500, text="internal error")

    client = httpx.Client(transport=httpx.MockTransport(boom))
    with pytest.raises(EndpointUnreachable):
        HttpSource("http://medpix.test", client=client).get_case("1")


def test_http_source_raises_on_transport_failure():
    def unreachable(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("refused", request=request)

    client = httpx.Client(transport=httpx.MockTransport(unreachable))
    with pytest.raises(EndpointUnreachable):
        HttpSource("http://medpix.test", client=client).get_case("1")


# --- generic JSON importer -------------------------------------------------------


RECORDS = [
    {"id": "a1", "name": "First", "tags": ["x", "y"],
     "details": {"size": 3, "notes": "fine"}, "see_also": "a2"},
    {"id": "a2", "name": "Second", "tags": [], "details": {"size": 5},
     "see_also": "missing"},
]


def test_generic_infer_schema_shapes():
    mapping = GenericMapping(title_key="name", link_keys=frozenset({"see_also"}))
    schema = infer_schema(RECORDS, mapping)
    assert schema.element("details").kind is ElementKind.STRUCTURAL
    assert schema.element("details.size").parent == "details"
    assert schema.element("see-also").kind is ElementKind.LINK
    assert schema.element("tags").kind is ElementKind.DESCRIPTIVE
    assert validate_schema(schema) == []


def test_generic_kind_conflict_rejected():
    records = [{"id": "1", "field": "text"}, {"id": "2", "field": {"inner": 1}}]
    with pytest.raises(MappingError):
        infer_schema(records, GenericMapping())


def test_generic_import_round_trip(tmp_path):
    store, cid = make_store(tmp_path)
    mapping = GenericMapping(title_key="name", link_keys=frozenset({"see_also"}))
    report = run_generic_import(store, cid, RECORDS, mapping)
    assert report.documents_imported == 2

    collection = store.load(cid)
    doc = collection.document("a1")
    assert doc.title == "First"
    values = dict(doc.values)
    assert values["see-also"] == LinkRef("a2")
    # a2's dangling link was dropped, non-str scalar serialized
    a2 = dict(collection.document("a2").values)
    assert "see-also" not in a2
    check = validate_collection(collection)
    assert check.ok, check.violations


def test_generic_duplicate_ids_rejected(tmp_path):
    store, cid = make_store(tmp_path)
    with pytest.raises(MappingError):
        run_generic_import(store, cid, [{"id": "x"}, {"id": "x"}])


def test_load_records_accepts_object_or_array(tmp_path):
    path = tmp_path / "one.json"
    path.write_text('{"id": "solo"}', "utf-8")
    assert load_records(path) == [{"id": "solo"}]
    bad = tmp_path / "bad.json"
    bad.write_text("not json", "utf-8")
    with pytest.raises(RecordParseError):
        load_records(bad)


# --- the shipped curation plan against the fixture corpus ------------------------


def test_fixture_curation_plan(tmp_path):
    from recollect.reconfigure import apply_plan, plan_from_dict

    store, cid = make_store(tmp_path)
    run_import(store, cid, DiskSource(FIXTURES), CrawlConfig(case_seeds=SEEDS))

    plan_path = FIXTURES.parent / "plans" / "medpix-curation.json"
    plan = plan_from_dict(json.loads(plan_path.read_text("utf-8")))
    assert len(plan.ops) == 53

    collection = store.load(cid)
    migrated, report = apply_plan(collection, plan)

    assert migrated.schema.element_count == 30
    original = set(medpix_schema().elements)
    retained = set(migrated.schema.elements) & original
    assert len(retained) == 28
    added = set(migrated.schema.elements) - original
    assert added == {"personal-data", "classification"}

    pd_children = [e.id for e in migrated.schema.children("personal-data")]
    assert pd_children == ["case.sex", "case.age", "case.ethnic_group"]
    cl_children = [e.id for e in migrated.schema.children("classification")]
    assert cl_children == ["topic.category", "topic.subcategory", "topic.acr_code"]
    assert migrated.schema.element("case.exam").name == "Physical Examination"
    assert migrated.schema.element("case.clinical_history") is None

    # merged history: the general note keeps its slot, the clinical note follows
    root = migrated.document("9070").values[0][1]
    history = [v.text for eid, v in root.children if eid == "case.history"]
    assert history == [
        "Hypertension for 20 years, poorly controlled.",
        "Sudden onset of severe chest pain radiating to the back.",
    ]

    check = validate_collection(
        migrated, blob_exists=lambda sha: store.blob_exists(cid, sha)
    )
    assert check.ok, check.violations
    assert migrated.schema.version == collection.schema.version + 53
