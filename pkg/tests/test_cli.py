import json

import pytest
import yaml
from fastapi.testclient import TestClient

from app import cli
from app.core.encoding import encode
from app.corpus.acceptance import CheckResult
from app.main import create_app

from conftest import TOY_ROOT

SLICE_ARGS = ["--file", "vuln.c", "--line", "12"]


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    # the CLI reads codebadger.yaml and writes its cache relative to the working directory
    monkeypatch.delenv("CODEBADGER_CONFIG", raising=False)
    monkeypatch.setenv("CODEBADGER_LOG_LEVEL", "WARNING")
    monkeypatch.chdir(tmp_path)


def run(capsys, *argv):
    code = cli.run_cli(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_command_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code == cli.EXIT_USAGE
    assert "usage: codebadger" in err
    assert out == ""


def test_slice_alias_runs_locally(capsys):
    code, out, _ = run(capsys, "slice", "--source", str(TOY_ROOT), *SLICE_ARGS)
    assert code == cli.EXIT_OK
    result = json.loads(out)
    assert result["criterion"]["line"] == 12
    assert "vuln.c:12:     memcpy(ret, ncname, lenn);" in result["lines"]


def test_output_matches_the_tool_service(capsys, service):
    code, out, _ = run(capsys, "get_program_slice", "--source", str(TOY_ROOT), *SLICE_ARGS)
    assert code == cli.EXIT_OK
    sid = service.sessions.create(str(TOY_ROOT)).session_id
    expected = service.call("get_program_slice", sid, {"file": "vuln.c", "line": 12})
    assert out.rstrip("\n") == encode(expected)


def test_taint_max_paths_flag(capsys):
    code, out, _ = run(capsys, "taint", "--source", str(TOY_ROOT), "--max-paths", "1", "--sinks", "memcpy", "strcpy")
    assert code == cli.EXIT_OK
    result = json.loads(out)
    assert result["total"] == 1
    assert result["paths"][0]["sink"]["line"] == 12


def test_info_logs_stay_off_stdout(capsys, monkeypatch):
    monkeypatch.setenv("CODEBADGER_LOG_LEVEL", "INFO")
    code, out, err = run(capsys, "taint", "--source", str(TOY_ROOT), "--max-paths", "1")
    assert code == cli.EXIT_OK
    assert json.loads(out)["total"] == 1
    events = [json.loads(line) for line in err.splitlines()]
    assert "cpg_build_start" in {e["event"] for e in events}
    assert all(e["service"] == "codebadger" for e in events)


def test_console_log_format(capsys, monkeypatch):
    monkeypatch.setenv("CODEBADGER_LOG_LEVEL", "INFO")
    monkeypatch.setenv("CODEBADGER_LOG_FORMAT", "console")
    code, out, err = run(capsys, "list_methods", "--source", str(TOY_ROOT))
    assert code == cli.EXIT_OK
    json.loads(out)
    assert "cpg_build_start" in err
    assert not err.lstrip().startswith("{")


def test_warning_level_keeps_stderr_quiet(capsys):
    code, out, err = run(capsys, "list_methods", "--source", str(TOY_ROOT))
    assert code == cli.EXIT_OK
    json.loads(out)
    assert err == ""


def test_text_format_is_yaml(capsys):
    code, out, _ = run(capsys, "list_methods", "--source", str(TOY_ROOT), "--format", "text")
    assert code == cli.EXIT_OK
    data = yaml.safe_load(out)
    assert [m["name"] for m in data["items"]] == ["xml_build_qname", "main"]


def test_reachability_flags_come_from_aliases(capsys):
    code, out, _ = run(capsys, "check_reachability", "--source", str(TOY_ROOT), "--from", "main", "--to", "xml_build_qname")
    assert code == cli.EXIT_OK
    assert json.loads(out)["reachable"] is True


@pytest.mark.parametrize("argv", [
    ["get_method_source", "--source", str(TOY_ROOT)],
    ["get_call_graph", "--source", str(TOY_ROOT), "--method", "main", "--depth", "-1"],
    ["list_methods"],
    ["poll_job", "--job-id", "abc"],
    ["search_literals", "--source", str(TOY_ROOT), "--kind", "float"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == cli.EXIT_USAGE
    assert out == ""


def test_analysis_error_exits_1_with_envelope(capsys):
    code, out, err = run(capsys, "get_method_source", "--source", str(TOY_ROOT), "--name", "nope")
    assert code == cli.EXIT_ANALYSIS
    assert out == ""
    assert json.loads(err.strip().splitlines()[-1])["error"]["code"] == "unknown_method"


def test_bad_config_file_exits_2(capsys, tmp_path):
    (tmp_path / "bad.yaml").write_text("colour: blue\n")
    code, _, err = run(capsys, "list_methods", "--source", str(TOY_ROOT), "--config", str(tmp_path / "bad.yaml"))
    assert code == cli.EXIT_USAGE
    assert "config_error" in err


def test_remote_call_matches_local(capsys, settings, monkeypatch):
    app = create_app(settings)
    monkeypatch.setattr(cli.httpx, "Client", lambda **kwargs: TestClient(app))

    code, remote, _ = run(capsys, "slice", "--server", "http://test", "--source", str(TOY_ROOT), *SLICE_ARGS)
    assert code == cli.EXIT_OK
    code, local, _ = run(capsys, "slice", "--source", str(TOY_ROOT), *SLICE_ARGS)
    assert remote == local


def test_remote_error_envelope_is_passed_through(capsys, settings, monkeypatch):
    app = create_app(settings)
    monkeypatch.setattr(cli.httpx, "Client", lambda **kwargs: TestClient(app))
    code, _, err = run(capsys, "get_method_source", "--server", "http://test", "--source", str(TOY_ROOT), "--name", "nope")
    assert code == cli.EXIT_ANALYSIS
    assert "unknown_method" in err


def test_corpus_check_exit_code_follows_results(capsys, monkeypatch):
    results = [CheckResult(name="a", passed=True, detail="ok"), CheckResult(name="b", passed=False, detail="bad")]
    monkeypatch.setattr("app.corpus.acceptance.run_acceptance", lambda settings: results)
    code, out, _ = run(capsys, "corpus-check")
    assert code == cli.EXIT_ANALYSIS
    assert "1/2 checks passed" in out

    code, out, _ = run(capsys, "corpus-check", "--format", "json")
    assert [r["name"] for r in json.loads(out)] == ["a", "b"]


def test_parser_generates_flags_from_param_models():
    parser = cli.build_parser()
    args = parser.parse_args(["get_data_dependencies", "--source", "x", "--line", "3", "--file", "a.c", "--direction", "forward"])
    assert args.tool == "get_data_dependencies"
    assert cli._tool_params(args) == {"file": "a.c", "line": 3, "direction": "forward"}
