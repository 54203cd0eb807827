"""
Command-line access to every tool, plus ``serve`` and ``corpus-check``.

Each tool is a subcommand whose flags come from the tool's parameter model, so the CLI
and the HTTP manifest never drift apart. Without ``--server`` the tool runs in-process
against an ephemeral session that shares the configured cache directory.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union, get_args, get_origin

import httpx
import yaml
from pydantic import BaseModel

from app.core.config import Settings, load_settings
from app.core.encoding import encode, to_jsonable
from app.core.errors import CodeBadgerError, ValidationFailed
from app.core.logging_config import get_logger, setup_logging
from app.schemas.tools import ToolParams
from app.services.session_manager import SessionManager
from app.services.tools import TOOLS, ToolService

logger = get_logger("cli")

ALIASES = {"get_program_slice": ["slice"], "find_taint_flows": ["taint"]}
SERVER_ONLY = {"close_session", "poll_job"}

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _unwrap_optional(annotation: Any) -> Any:
    if get_origin(annotation) is Union:
        args = [a for a in get_args(annotation) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return annotation


def _json_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"not valid JSON: {e.msg}")


def add_model_arguments(parser: argparse.ArgumentParser, model: type, skip: Sequence[str] = ()) -> List[str]:
    """Add one flag per model field; returns the field names added."""
    added = []
    for name, field in model.model_fields.items():
        flag_name = field.alias or name
        if flag_name in skip:
            continue
        flag = "--" + flag_name.replace("_", "-")
        kwargs: Dict[str, Any] = {"dest": name, "default": argparse.SUPPRESS, "help": field.description}
        annotation = _unwrap_optional(field.annotation)
        origin = get_origin(annotation)
        if annotation is bool:
            kwargs["action"] = "store_true"
        elif origin is Literal:
            choices = list(get_args(annotation))
            kwargs["choices"] = choices
            kwargs["type"] = type(choices[0])
        elif annotation is int:
            kwargs["type"] = int
        elif origin in (list, List):
            kwargs["nargs"] = "+"
        elif annotation is str:
            kwargs["type"] = str
        else:
            kwargs["type"] = _json_value
            kwargs["metavar"] = "JSON"
        if field.is_required() and annotation is not bool:
            kwargs["required"] = True
        parser.add_argument(flag, **kwargs)
        added.append(name)
    return added


def _common_arguments(with_source: bool) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to a codebadger.yaml config file")
    common.add_argument("--format", choices=["json", "text"], default="json", help="json (compact) or text (YAML)")
    common.add_argument("--server", metavar="URL", help="Send the call to a running server")
    common.add_argument("--session-id", dest="session_id", help="Existing server session (with --server)")
    if with_source:
        common.add_argument("--source", dest="source_root", help="Source tree to analyze")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codebadger", description="Code property graph analysis of Mini-C sources")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    serve_parser = subparsers.add_parser("serve", help="Run the HTTP tool server")
    serve_parser.add_argument("--config", help="Path to a codebadger.yaml config file")
    serve_parser.add_argument("--host")
    serve_parser.add_argument("--port", type=int)
    serve_parser.set_defaults(command="serve")

    check_parser = subparsers.add_parser("corpus-check", help="Run the acceptance suite over the bundled corpus")
    check_parser.add_argument("--config", help="Path to a codebadger.yaml config file")
    check_parser.add_argument("--format", choices=["json", "text"], default="text")
    check_parser.set_defaults(command="corpus-check")

    for name, t in TOOLS.items():
        # create_cpg_session carries its own --source
        own_source = "source" in {f.alias or n for n, f in t.params.model_fields.items()}
        sub = subparsers.add_parser(
            name,
            aliases=ALIASES.get(name, []),
            help=t.description,
            description=t.description,
            parents=[_common_arguments(with_source=not own_source)],
        )
        fields = add_model_arguments(sub, t.params)
        sub.set_defaults(command="tool", tool=name, fields=fields, subparser=sub)
    return parser


def render(result: Any, fmt: str) -> str:
    data = to_jsonable(result)
    if fmt == "text":
        return yaml.safe_dump(data, sort_keys=False, allow_unicode=True, default_flow_style=False).rstrip("\n")
    return encode(data)


def _tool_params(args: argparse.Namespace) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in args.fields if hasattr(args, name)}


def _run_local(settings: Settings, args: argparse.Namespace, params: Dict[str, Any]) -> Any:
    if args.tool in SERVER_ONLY:
        raise UsageError(f"{args.tool} needs --server")
    service = ToolService(settings, SessionManager(settings))
    try:
        if not TOOLS[args.tool].needs_session:
            return service.call(args.tool, None, params)
        if not args.source_root:
            raise UsageError("--source is required without --server")
        session = service.sessions.create(args.source_root, settings.language)
        return service.call(args.tool, session.session_id, params)
    finally:
        service.sessions.shutdown()


def _post(client: httpx.Client, name: str, session_id: Optional[str], params: Dict[str, Any]) -> Any:
    body = {"params": params}
    if session_id:
        body["session_id"] = session_id
    response = client.post(f"/tools/{name}", json=body)
    payload = response.json()
    if payload.get("status") == "error":
        raise RemoteError(payload["error"])
    return payload.get("result")


class RemoteError(Exception):
    def __init__(self, error: Dict[str, Any]):
        super().__init__(error.get("message", ""))
        self.error = error


def _run_remote(args: argparse.Namespace, params: Dict[str, Any]) -> Any:
    with httpx.Client(base_url=args.server.rstrip("/"), timeout=300.0) as client:
        if args.tool == "poll_job":
            response = client.get(f"/jobs/{params['job_id']}")
            payload = response.json()
            if payload.get("status") == "error" and "error" in payload:
                raise RemoteError(payload["error"])
            return payload
        if not TOOLS[args.tool].needs_session or args.session_id:
            return _post(client, args.tool, args.session_id, params)
        if not args.source_root:
            raise UsageError("--source or --session-id is required")
        source = str(Path(args.source_root).resolve())
        created = _post(client, "create_cpg_session", None, {"source": source})
        try:
            return _post(client, args.tool, created["session_id"], params)
        finally:
            client.post("/tools/close_session", json={"session_id": created["session_id"], "params": {}})


def _print_error(error: Dict[str, Any]) -> None:
    print(encode({"error": error}), file=sys.stderr)


def _run_tool(args: argparse.Namespace) -> int:
    subparser: argparse.ArgumentParser = args.subparser
    try:
        settings = load_settings(args.config)
    except CodeBadgerError as e:
        _print_error(e.to_dict())
        return EXIT_USAGE
    setup_logging(settings.log_level, settings.log_format)
    params = _tool_params(args)
    try:
        result = _run_remote(args, params) if args.server else _run_local(settings, args, params)
    except UsageError as e:
        subparser.print_help(sys.stderr)
        print(f"codebadger {args.tool}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailed as e:
        subparser.print_help(sys.stderr)
        _print_error(e.to_dict())
        return EXIT_USAGE
    except CodeBadgerError as e:
        logger.info("cli_tool_error", tool=args.tool, code=e.code)
        _print_error(e.to_dict())
        return EXIT_ANALYSIS
    except RemoteError as e:
        _print_error(e.error)
        if e.error.get("code") == "validation_error":
            subparser.print_help(sys.stderr)
            return EXIT_USAGE
        return EXIT_ANALYSIS
    except httpx.HTTPError as e:
        print(f"codebadger: cannot reach {args.server}: {e}", file=sys.stderr)
        return EXIT_ANALYSIS
    print(render(result, args.format))
    return EXIT_OK


def _run_corpus_check(args: argparse.Namespace) -> int:
    from app.corpus.acceptance import render_table, run_acceptance

    try:
        settings = load_settings(args.config)
    except CodeBadgerError as e:
        _print_error(e.to_dict())
        return EXIT_USAGE
    setup_logging(settings.log_level, settings.log_format)
    results = run_acceptance(settings)
    if args.format == "json":
        print(encode([r.model_dump() for r in results]))
    else:
        print(render_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_ANALYSIS


def _parse(parser: argparse.ArgumentParser, argv: Optional[Sequence[str]]) -> Tuple[Optional[argparse.Namespace], int]:
    try:
        return parser.parse_args(argv), EXIT_OK
    except SystemExit as e:
        return None, EXIT_USAGE if e.code else EXIT_OK


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, code = _parse(parser, argv)
    if args is None:
        return code
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "serve":
        from app.main import serve

        overrides = {k: v for k, v in (("host", args.host), ("port", args.port)) if v is not None}
        return serve(args.config, **overrides)
    if args.command == "corpus-check":
        return _run_corpus_check(args)
    return _run_tool(args)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
