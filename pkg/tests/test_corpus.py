import pytest
from fastapi.testclient import TestClient

from app.corpus import acceptance
from app.corpus.acceptance import CheckResult, load_manifest, render_table, replay_workflow, run_acceptance
from app.main import create_app


def test_manifest_points_at_existing_files():
    manifest = load_manifest()
    assert acceptance.corpus_path(manifest["toy"]["root"]).joinpath(manifest["toy"]["file"]).is_file()
    assert acceptance.corpus_path(manifest["large"]["root"]).joinpath(manifest["large"]["file"]).is_file()
    assert len(acceptance.program_cpgs()) >= 25


def test_large_program_has_enough_statements():
    cpg = acceptance.build_tree(load_manifest()["large"]["root"])
    assert len(cpg.methods()) >= 10
    assert acceptance.statement_count(cpg) > 100


@pytest.mark.parametrize("check", acceptance.CHECKS, ids=lambda c: c.__name__)
def test_analysis_checks_pass(settings, check):
    result = check(settings)
    assert result.passed, result.detail


@pytest.mark.parametrize("check", acceptance.SERVICE_CHECKS, ids=lambda c: c.__name__)
def test_service_checks_pass(settings, tmp_path, check):
    result = check(settings, tmp_path)
    assert result.passed, result.detail


def test_crashing_check_is_reported_not_raised(settings, monkeypatch):
    def explode(settings):
        raise RuntimeError("kaput")

    explode.__name__ = "check_explode"
    monkeypatch.setattr(acceptance, "CHECKS", [explode])
    monkeypatch.setattr(acceptance, "SERVICE_CHECKS", [])
    [result] = run_acceptance(settings)
    assert result.name == "explode" and not result.passed
    assert result.detail == "RuntimeError: kaput"


def test_render_table_is_aligned():
    table = render_table([
        CheckResult(name="short", passed=True, detail="fine"),
        CheckResult(name="much_longer", passed=False, detail="broken"),
    ])
    lines = table.splitlines()
    assert lines[0] == "check        result  detail"
    assert lines[2] == "short        PASS    fine"
    assert lines[3] == "much_longer  FAIL    broken"
    assert lines[-1] == "1/2 checks passed"


def test_workflow_replay_reads_method_source(settings):
    toy = load_manifest()["toy"]
    with TestClient(create_app(settings)) as client:
        steps = replay_workflow(client, str(acceptance.corpus_path(toy["root"])))
    assert steps["source"]["name"] == toy["method"]
    assert steps["source"]["numbered"].startswith(" 1  int xml_build_qname(")
    assert [m["name"] for m in steps["methods"]["items"]] == ["xml_build_qname", "main"]
