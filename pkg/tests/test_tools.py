import pytest

from app.core.encoding import encode, encoded_size
from app.core.errors import ResponseTooLarge, UnknownTool, ValidationFailed
from app.corpus.acceptance import TOY_TOOL_CALLS, wait_for_job
from app.schemas.tools import ToolRequest
from app.services.session_manager import SessionManager
from app.services.tools import TOOLS, ToolService

from conftest import TOY_ROOT


@pytest.fixture
def tight_service(settings):
    """A service whose responses must fit in a few hundred bytes."""
    tight = settings.model_copy(update={"max_response_bytes": 400})
    svc = ToolService(tight, SessionManager(tight))
    yield svc
    svc.sessions.shutdown()


def test_registry_covers_the_protocol():
    assert set(TOOLS) == {
        "create_cpg_session", "close_session", "poll_job",
        "get_codebase_summary", "list_methods", "get_method_source", "list_calls", "get_code_snippet",
        "get_data_dependencies", "get_program_slice",
        "find_taint_sources", "find_taint_sinks", "find_taint_flows", "find_bounds_checks",
        "get_call_graph", "check_reachability", "search_literals", "run_structured_query",
    }
    assert {name for name, t in TOOLS.items() if not t.needs_session} == {"create_cpg_session", "poll_job"}


@pytest.mark.parametrize("name, params", TOY_TOOL_CALLS)
def test_every_tool_answers_on_the_toy_program(service, toy_session, name, params):
    result = service.call(name, toy_session, params)
    assert result is not None
    assert encode(result) == encode(service.call(name, toy_session, params))


def test_reachability_params_use_from_and_to(service, toy_session):
    result = service.call("check_reachability", toy_session, {"from": "main", "to": "xml_build_qname"})
    assert result["reachable"] and result["path"] == ["main", "xml_build_qname"]


def test_point_by_node_id_matches_point_by_line(service, toy_session):
    by_line = service.call("get_program_slice", toy_session, {"file": "vuln.c", "line": 12})
    node_id = by_line["criterion"]["node_id"]
    by_id = service.call("get_program_slice", toy_session, {"node_id": node_id})
    assert by_id == by_line


def test_listing_pages_with_cursor(service, toy_session):
    first = service.call("list_calls", toy_session, {"limit": 2})
    assert len(first["items"]) == 2 and first["truncated"] and first["next_cursor"] == 2
    rest = service.call("list_calls", toy_session, {"cursor": 2, "limit": 100})
    assert not rest["truncated"] and rest["next_cursor"] is None
    assert first["total"] == rest["total"] == 2 + len(rest["items"])


def test_taint_override_patterns(service, toy_session):
    sinks = service.call("find_taint_sinks", toy_session, {"sinks": ["strcpy"]})
    assert [s["line"] for s in sinks["items"]] == [21]
    flows = service.call("find_taint_flows", toy_session, {"max_paths": 1})
    assert flows["total"] == 1 and flows["paths"][0]["sink"]["line"] == 12


def test_validation_errors_name_the_key(service, toy_session):
    with pytest.raises(ValidationFailed) as exc:
        service.call("get_call_graph", toy_session, {"method": "main", "depth": -1})
    assert exc.value.detail[0]["key"] == "depth"
    with pytest.raises(ValidationFailed):
        service.call("find_taint_flows", toy_session, {"max_paths": 0})
    with pytest.raises(ValidationFailed):
        service.call("list_methods", None, {})
    with pytest.raises(UnknownTool):
        service.call("explode", toy_session, {})


def test_listing_is_truncated_to_fit(tight_service):
    sid = tight_service.sessions.create(str(TOY_ROOT)).session_id
    result = tight_service.call("list_calls", sid, {})
    assert result["truncated"]
    assert 0 < len(result["items"]) < result["total"]
    assert result["next_cursor"] == len(result["items"])
    assert encoded_size(result) <= 400


def test_paging_a_truncated_listing_reaches_the_end(tight_service):
    sid = tight_service.sessions.create(str(TOY_ROOT)).session_id
    items, cursor = [], 0
    for _ in range(20):
        page = tight_service.call("list_calls", sid, {"cursor": cursor})
        items.extend(page["items"])
        if page["next_cursor"] is None:
            break
        assert page["next_cursor"] > cursor
        cursor = page["next_cursor"]
    assert page["next_cursor"] is None
    assert len(items) == page["total"] == 8
    assert [(c["line"], c["callee"]) for c in items] == sorted((c["line"], c["callee"]) for c in items)


def test_listing_entry_larger_than_the_limit_is_an_error(settings):
    tiny = settings.model_copy(update={"max_response_bytes": 60})
    svc = ToolService(tiny, SessionManager(tiny))
    try:
        sid = svc.sessions.create(str(TOY_ROOT)).session_id
        with pytest.raises(ResponseTooLarge) as exc:
            svc.call("list_calls", sid, {"cursor": 3})
        assert exc.value.detail["cursor"] == 3
    finally:
        svc.sessions.shutdown()


def test_single_results_that_do_not_fit_are_errors(tight_service):
    sid = tight_service.sessions.create(str(TOY_ROOT)).session_id
    with pytest.raises(ResponseTooLarge):
        tight_service.call("get_method_source", sid, {"name": "xml_build_qname"})
    response = tight_service.dispatch("get_method_source", ToolRequest(session_id=sid, params={"name": "xml_build_qname"}))
    assert response.status == "error" and response.error.code == "response_too_large"


def test_dispatch_async_then_poll_job_tool(service, toy_session):
    accepted = service.dispatch("list_methods", ToolRequest(session_id=toy_session, async_=True))
    assert accepted.status == "accepted" and accepted.http_status == 202
    wait_for_job(service.sessions.jobs, accepted.job_id)
    polled = service.call("poll_job", None, {"job_id": accepted.job_id})
    assert polled["state"] == "done"
    assert polled["result"] == service.call("list_methods", toy_session, {})


def test_dispatch_async_needs_a_live_session(service):
    response = service.dispatch("list_methods", ToolRequest(session_id="missing", async_=True))
    assert response.status == "error" and response.error.code == "unknown_session"


def test_dispatch_turns_crashes_into_internal_errors(service, toy_session, monkeypatch):
    def crash(*args, **kwargs):
        raise KeyError("boom")

    monkeypatch.setattr("app.analyses.navigation.get_codebase_summary", crash)
    response = service.dispatch("get_codebase_summary", ToolRequest(session_id=toy_session))
    assert response.status == "error" and response.http_status == 500
    assert response.error.code == "internal_error"
