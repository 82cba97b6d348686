"""Command line tests: exit codes, output text, and store-level equivalence
between the CLI and the HTTP service."""

import json
import zipfile
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from recollect.cli import main
from recollect.service import create_app
from recollect.store import CollectionStore

from .oracles import store_snapshot

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
PLAN_FILE = FIXTURES / "plans" / "medpix-curation.json"
MEDPIX_CONFIG = {
    "source": {"kind": "disk", "root": str(FIXTURES / "medpix")},
    "case_seeds": ["9070", "7102", "8001"],
}


@pytest.fixture
def store_root(tmp_path) -> Path:
    return tmp_path / "store"


@pytest.fixture
def invoke(capsys, store_root):
    def run(*args: str, store: Path = None):
        root = store if store is not None else store_root
        code = main(["--store-root", str(root), *args])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run


@pytest.fixture
def config_file(tmp_path) -> Path:
    path = tmp_path / "medpix.json"
    path.write_text(json.dumps(MEDPIX_CONFIG))
    return path


@pytest.fixture
def imported(invoke, config_file, store_root) -> Path:
    code, out, _ = invoke("import", "medpix", "--name", "MedPix Demo",
                          "--config", str(config_file))
    assert code == 0
    return store_root


# --- listings ----------------------------------------------------------------------


def test_plugins_lists_builtins(invoke):
    code, out, _ = invoke("plugins")
    assert code == 0
    assert "medpix" in out and "generic-json" in out


def test_collections_empty(invoke):
    code, out, _ = invoke("collections")
    assert code == 0
    assert "no collections" in out


def test_collections_after_import(invoke, imported):
    code, out, _ = invoke("collections")
    assert code == 0
    assert "medpix-demo" in out
    assert "12 documents" in out


# --- import -----------------------------------------------------------------------


def test_import_creates_collection_and_reports(invoke, config_file):
    code, out, _ = invoke("import", "medpix", "--name", "MedPix Demo",
                          "--config", str(config_file))
    assert code == 0
    assert "created collection medpix-demo" in out
    assert "documents: 12" in out
    assert "resources: 8" in out
    assert "links resolved: 15" in out


def test_import_into_existing_collection(invoke, imported, config_file):
    code, out, _ = invoke("import", "medpix", "--collection", "medpix-demo",
                          "--config", str(config_file))
    assert code == 0
    assert "created collection" not in out


def test_import_unknown_plugin_exits_2(invoke):
    code, _, err = invoke("import", "telepathy")
    assert code == 2
    assert "telepathy" in err


def test_import_unreadable_config_exits_2(invoke, tmp_path):
    code, _, err = invoke("import", "medpix", "--name", "x",
                          "--config", str(tmp_path / "missing.json"))
    assert code == 2
    assert "cannot read" in err


def test_import_malformed_config_exits_2(invoke, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = invoke("import", "medpix", "--name", "x", "--config", str(bad))
    assert code == 2
    assert "not valid JSON" in err


def test_import_no_seeds_exits_3(invoke, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"source": {"kind": "disk",
                                          "root": str(FIXTURES / "medpix")}}))
    code, _, err = invoke("import", "medpix", "--name", "x", "--config", str(cfg))
    assert code == 3
    assert "seed" in err


def test_import_unreachable_endpoint_exits_3(invoke, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "source": {"kind": "http", "base_url": "http://127.0.0.1:9"},
        "case_seeds": ["9070"],
    }))
    code, _, err = invoke("import", "medpix", "--name", "x", "--config", str(cfg))
    assert code == 3


# --- reconfigure --------------------------------------------------------------------


def test_reconfigure_plan(invoke, imported):
    code, out, _ = invoke("reconfigure", "medpix-demo", "--plan", str(PLAN_FILE))
    assert code == 0
    assert "plan: medpix-curation (53 ops)" in out
    assert "final elements: 30" in out
    assert "added: classification, personal-data" in out
    assert "removed: 44 elements" in out
    assert "renamed: case.exam: 'Exam' -> 'Physical Examination'" in out
    assert "revision: 2" in out


def test_reconfigure_dry_run_saves_nothing(invoke, imported):
    code, out, _ = invoke("reconfigure", "medpix-demo", "--dry-run",
                          "--plan", str(PLAN_FILE))
    assert code == 0
    assert "dry run: nothing saved" in out
    assert "final elements: 30" in out
    assert CollectionStore(imported).load("medpix-demo").revision == 1


def test_reconfigure_inline_op(invoke, imported):
    code, out, _ = invoke(
        "reconfigure", "medpix-demo",
        "--op", '{"op": "rename", "element_id": "case.exam", "new_name": "Findings at Exam"}',
    )
    assert code == 0
    assert "renamed: case.exam" in out
    store = CollectionStore(imported)
    assert store.load("medpix-demo").schema.element("case.exam").name == "Findings at Exam"


def test_reconfigure_unknown_element_exits_3_store_untouched(invoke, imported):
    code, _, err = invoke("reconfigure", "medpix-demo",
                          "--op", '{"op": "remove", "element_id": "ghost"}')
    assert code == 3
    assert "ghost" in err
    after = CollectionStore(imported).load("medpix-demo")
    assert after.revision == 1
    assert after.schema.element_count == 72


def test_reconfigure_missing_plan_file_exits_2(invoke, imported, tmp_path):
    code, _, err = invoke("reconfigure", "medpix-demo",
                          "--plan", str(tmp_path / "nope.json"))
    assert code == 2


def test_reconfigure_malformed_op_json_exits_2(invoke, imported):
    code, _, err = invoke("reconfigure", "medpix-demo", "--op", "{oops")
    assert code == 2
    assert "not valid JSON" in err


def test_reconfigure_requires_exactly_one_source(invoke, imported):
    code, _, err = invoke("reconfigure", "medpix-demo")
    assert code == 2
    code, _, err = invoke("reconfigure", "medpix-demo", "--plan", str(PLAN_FILE),
                          "--op", '{"op": "remove", "element_id": "case.exam"}')
    assert code == 2


def test_reconfigure_stale_revision_exits_3(invoke, imported):
    code, _, err = invoke("reconfigure", "medpix-demo", "--expected-revision", "9",
                          "--op", '{"op": "remove", "element_id": "case.exam"}')
    assert code == 3
    assert "revision" in err


# --- export and validate ---------------------------------------------------------------


def test_export_writes_zip_and_validates(invoke, imported, tmp_path):
    out_zip = tmp_path / "chest.zip"
    code, out, _ = invoke("export", "medpix-demo", "--root", "9070",
                          "--title", "Chest Lesson", "--seed", "9070",
                          "--output", str(out_zip))
    assert code == 0
    assert "package ok" in out
    assert "CLAVY_MANIFEST0869270656613948" in out
    names = zipfile.ZipFile(out_zip).namelist()
    assert names[0] == "imsmanifest.xml"


def test_export_same_seed_reproducible(invoke, imported, tmp_path):
    blobs = []
    for name in ("a.zip", "b.zip"):
        path = tmp_path / name
        code, _, _ = invoke("export", "medpix-demo", "--root", "9070",
                            "--root", "7102", "--title", "Lesson",
                            "--seed", "7", "--output", str(path))
        assert code == 0
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_export_empty_roots_exits_2(invoke, imported, tmp_path):
    code, _, err = invoke("export", "medpix-demo", "--root", "",
                          "--title", "T", "--output", str(tmp_path / "x.zip"))
    assert code == 2
    assert "no export roots" in err


def test_export_unknown_collection_exits_3(invoke, tmp_path):
    code, _, _ = invoke("export", "ghost", "--root", "1", "--title", "T",
                        "--output", str(tmp_path / "x.zip"))
    assert code == 3


def test_validate_collection_ok(invoke, imported):
    code, out, _ = invoke("validate", "medpix-demo")
    assert code == 0
    assert "12 documents" in out
    assert "ok" in out


def test_validate_unknown_collection_exits_3(invoke):
    code, _, _ = invoke("validate", "ghost")
    assert code == 3


def test_validate_package_file(invoke, imported, tmp_path):
    out_zip = tmp_path / "chest.zip"
    invoke("export", "medpix-demo", "--root", "9070", "--title", "T",
           "--output", str(out_zip))
    code, out, _ = invoke("validate", str(out_zip))
    assert code == 0
    assert "ok" in out


def test_validate_broken_package_exits_3(invoke, tmp_path):
    junk = tmp_path / "junk.zip"
    junk.write_bytes(b"this is not a zip")
    code, out, _ = invoke("validate", str(junk))
    assert code == 3
    assert "BadArchive" in out


# --- serve / mock plumbing --------------------------------------------------------------


def test_serve_builds_app(invoke, monkeypatch, tmp_path):
    captured = {}

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", lambda app, **kw: captured.update(app=app, **kw))
    code, _, _ = invoke("serve", "--port", "9911")
    assert code == 0
    assert captured["app"].title == "recollect"
    assert captured["port"] == 9911


def test_mock_medpix_builds_app(invoke, monkeypatch):
    captured = {}

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", lambda app, **kw: captured.update(app=app, **kw))
    code, _, _ = invoke("mock-medpix", "--fixtures", str(FIXTURES / "medpix"))
    assert code == 0
    assert captured["app"].title == "mock-medpix"


def test_store_root_from_environment(capsys, monkeypatch, tmp_path, config_file):
    monkeypatch.setenv("RECOLLECT_STORE_ROOT", str(tmp_path / "env-store"))
    code = main(["import", "medpix", "--name", "demo", "--config", str(config_file)])
    assert code == 0
    capsys.readouterr()
    assert (tmp_path / "env-store" / "demo" / "schema.json").is_file()


# --- CLI / HTTP equivalence -------------------------------------------------------------


def test_cli_and_http_produce_identical_stores(invoke, config_file, tmp_path):
    cli_root = tmp_path / "store-cli"
    http_root = tmp_path / "store-http"

    code, _, _ = invoke("import", "medpix", "--name", "MedPix Demo",
                        "--config", str(config_file), store=cli_root)
    assert code == 0
    code, _, _ = invoke("reconfigure", "medpix-demo", "--plan", str(PLAN_FILE),
                        store=cli_root)
    assert code == 0

    with TestClient(create_app(http_root)) as client:
        r = client.post("/collections", json={"name": "MedPix Demo"})
        assert r.status_code == 201
        r = client.post("/collections/medpix-demo/imports",
                        json={"plugin": "medpix", "config": MEDPIX_CONFIG})
        assert r.status_code == 201
        r = client.post("/collections/medpix-demo/ops",
                        json={"plan": json.loads(PLAN_FILE.read_text())})
        assert r.status_code == 200

    assert store_snapshot(cli_root) == store_snapshot(http_root)


def test_cli_and_http_exports_byte_identical(invoke, config_file, tmp_path):
    cli_root = tmp_path / "store"
    invoke("import", "medpix", "--name", "MedPix Demo",
           "--config", str(config_file), store=cli_root)
    out_zip = tmp_path / "cli.zip"
    code, _, _ = invoke("export", "medpix-demo", "--root", "9070",
                        "--title", "Chest Lesson", "--seed", "9070",
                        "--output", str(out_zip), store=cli_root)
    assert code == 0

    with TestClient(create_app(cli_root)) as client:
        job = client.post(
            "/collections/medpix-demo/exports",
            json={"roots": ["9070"], "title": "Chest Lesson", "seed": 9070},
        ).json()["export"]
        import time

        for _ in range(200):
            status = client.get(f"/exports/{job['id']}").json()["export"]
            if status["status"] in ("done", "failed"):
                break
            time.sleep(0.02)
        assert status["status"] == "done"
        http_bytes = client.get(f"/exports/{job['id']}/package").content

    assert out_zip.read_bytes() == http_bytes
