"""
Acceptance suite over the bundled corpus.

Each check returns a CheckResult whose detail holds counts only, so two runs print the
same table byte for byte.
"""
import random
import tempfile
import time
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import yaml
from fastapi.testclient import TestClient
from pydantic import BaseModel

from app.analyses.bounds import find_bounds_checks
from app.analyses.points import resolve_point
from app.analyses.slicing import get_program_slice, slice_points
from app.analyses.taint import SourceSinkConfig, find_taint_flows, find_taint_sinks, find_taint_sources
from app.core.config import Settings
from app.core.encoding import encode
from app.core.logging_config import get_logger
from app.corpus import oracles
from app.cpg.builder import build_cpg_from_files
from app.cpg.graph import Cpg
from app.cpg.models import EdgeKind, NodeKind
from app.frontend.source import SourceFile, load_sources
from app.schemas.tools import ToolRequest
from app.services.jobs import JobQueue
from app.services.session_manager import SessionManager
from app.services.tools import ToolService

logger = get_logger("corpus.acceptance")

CORPUS_ROOT = Path(__file__).resolve().parent

SLICE_KINDS = {
    NodeKind.ASSIGN, NodeKind.LOCAL, NodeKind.CALL, NodeKind.RETURN,
    NodeKind.CONTROL_STRUCTURE, NodeKind.OPERATOR,
}

# one representative call per analysis tool against the toy program
TOY_TOOL_CALLS: List[Tuple[str, Dict[str, Any]]] = [
    ("get_codebase_summary", {}),
    ("list_methods", {}),
    ("get_method_source", {"name": "xml_build_qname"}),
    ("list_calls", {"pattern": "memcpy"}),
    ("get_code_snippet", {"file": "vuln.c", "start_line": 1, "end_line": 14}),
    ("get_data_dependencies", {"file": "vuln.c", "line": 12, "direction": "backward", "depth": 2}),
    ("get_program_slice", {"file": "vuln.c", "line": 12}),
    ("find_taint_sources", {}),
    ("find_taint_sinks", {}),
    ("find_taint_flows", {"max_paths": 10}),
    ("find_bounds_checks", {"file": "vuln.c", "line": 12}),
    ("get_call_graph", {"method": "main"}),
    ("check_reachability", {"from": "main", "to": "xml_build_qname"}),
    ("search_literals", {"kind": "string"}),
    ("run_structured_query", {"kind": "Call", "name_glob": "mem*"}),
]


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


@lru_cache(maxsize=None)
def load_manifest() -> Dict[str, Any]:
    with open(CORPUS_ROOT / "manifest.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f)


def corpus_path(relative: str) -> Path:
    return CORPUS_ROOT / relative


def build_tree(relative: str) -> Cpg:
    return build_cpg_from_files(load_sources(corpus_path(relative)))


def program_cpgs() -> List[Tuple[str, Cpg]]:
    """Each file under programs/ as its own single-file codebase, in name order."""
    root = corpus_path(load_manifest()["programs"]["root"])
    out = []
    for path in sorted(root.glob("*.c")):
        source = SourceFile(path=path.name, content=path.read_text(encoding="utf-8"))
        out.append((path.stem, build_cpg_from_files([source])))
    return out


def all_cpgs() -> List[Tuple[str, Cpg]]:
    manifest = load_manifest()
    trees = [
        manifest["toy"]["root"],
        manifest["bounds"]["vuln"]["root"],
        manifest["bounds"]["patched"]["root"],
        manifest["large"]["root"],
    ]
    return program_cpgs() + [(t, build_tree(t)) for t in trees]


def statement_count(cpg: Cpg) -> int:
    return sum(
        1 for n in cpg.nodes
        if n.is_statement and n.kind not in (NodeKind.METHOD, NodeKind.METHOD_RETURN, NodeKind.PARAM)
    )


def _pairs(paths) -> set:
    return {((p.source.file, p.source.line), (p.sink.file, p.sink.line)) for p in paths}


# --- checks ---

def check_taint_oracle(settings: Settings) -> CheckResult:
    config = SourceSinkConfig.from_settings(settings)
    max_paths = load_manifest()["programs"]["max_paths"]
    mismatched, total, oversized = [], 0, []
    programs = program_cpgs()
    for name, cpg in programs:
        if statement_count(cpg) > 60:
            oversized.append(name)
        got = _pairs(find_taint_flows(cpg, config, max_paths))
        want = oracles.taint_pairs(cpg, config)
        total += len(want)
        if got != want:
            mismatched.append(name)
    return CheckResult(
        name="taint_oracle",
        passed=not mismatched and not oversized and len(programs) >= 25,
        detail=f"{len(programs)} programs, {total} flows, mismatched={mismatched or 'none'}"
               + (f", oversized={oversized}" if oversized else ""),
    )


def check_path_cap(settings: Settings) -> CheckResult:
    config = SourceSinkConfig.from_settings(settings)
    failures, runs = [], 0
    for name, cpg in program_cpgs():
        full = find_taint_flows(cpg, config, 1000)
        n = len(full)
        for cap in sorted({1, 2, 3, n, n + 5} - {0}):
            runs += 1
            got = find_taint_flows(cpg, config, cap)
            if len(got) != min(cap, n) or encode(got) != encode(full[:len(got)]):
                failures.append(f"{name}@{cap}")
    return CheckResult(
        name="path_cap",
        passed=not failures,
        detail=f"{runs} capped runs, failures={failures or 'none'}",
    )


def check_slice_fixpoint(settings: Settings) -> CheckResult:
    sample = load_manifest()["slice_sample"]
    candidates = []
    for name, cpg in program_cpgs() + [("toy", build_tree(load_manifest()["toy"]["root"]))]:
        for n in cpg.nodes:
            if n.is_statement and n.kind in SLICE_KINDS:
                candidates.append((name, cpg, n.id))
    rng = random.Random(sample["seed"])
    chosen = rng.sample(candidates, min(sample["size"], len(candidates)))
    failures = []
    for name, cpg, criterion in chosen:
        points = slice_points(cpg, criterion)
        ok = criterion in points and points == oracles.slice_closure(cpg, criterion)
        ok = ok and all(not oracles.is_closed(cpg, points - {p}) for p in points if p != criterion)
        if not ok:
            failures.append(f"{name}#{criterion}")
    return CheckResult(
        name="slice_fixpoint",
        passed=not failures and len(chosen) >= 100,
        detail=f"{len(chosen)} criteria, failures={failures or 'none'}",
    )


def slice_ratios() -> List[float]:
    large = load_manifest()["large"]
    cpg = build_tree(large["root"])
    total = cpg.file(large["file"]).line_count
    ratios = []
    for line in large["criteria"]:
        point = resolve_point(cpg, file=large["file"], line=line)
        kept = [entry for entry in get_program_slice(cpg, point).lines if not entry.startswith("// ")]
        ratios.append(len(kept) / total)
    return ratios


def check_slice_reduction(settings: Settings) -> CheckResult:
    large = load_manifest()["large"]
    ratios = slice_ratios()
    mean = sum(ratios) / len(ratios)
    best = min(ratios)
    return CheckResult(
        name="slice_reduction",
        passed=len(ratios) == 10 and mean <= large["max_mean_ratio"] and best <= large["max_best_ratio"],
        detail=f"{len(ratios)} criteria, mean={mean:.3f}, best={best:.3f}",
    )


def check_dataflow_oracles(settings: Settings) -> CheckResult:
    limit = load_manifest()["oracle_cfg_limit"]
    checked, failures = 0, []
    for name, cpg in all_cpgs():
        for m in cpg.methods():
            cfg = cpg.cfg(m.id)
            if len(cfg.nodes) > limit or not oracles.exit_reachable(cpg, m.id):
                continue
            checked += 1
            members = set(cfg.nodes)
            rd = {
                (e.src, e.dst, e.variable) for e in cpg.edges_of_kind(EdgeKind.REACHING_DEF)
                if e.binding is None and e.dst in members
            }
            cdg = {(e.src, e.dst) for e in cpg.edges_of_kind(EdgeKind.CDG) if e.src in members}
            if rd != oracles.reaching_definition_pairs(cpg, m.id):
                failures.append(f"{name}:{m.name}:rd")
            if cdg != oracles.control_dependence_pairs(cpg, m.id):
                failures.append(f"{name}:{m.name}:cdg")
            dom = oracles.dominator_sets(cpg, m.id)
            tree = cpg.dominators(m.id)
            if any(tree.dominators(n) != set(dom[n]) for n in cfg.nodes):
                failures.append(f"{name}:{m.name}:dom")
    return CheckResult(
        name="dataflow_oracles",
        passed=not failures and checked > 0,
        detail=f"{checked} methods, failures={failures or 'none'}",
    )


def check_bounds_ordering(settings: Settings) -> CheckResult:
    bounds = load_manifest()["bounds"]
    outcomes = []
    passed = True
    for variant in ("vuln", "patched"):
        case = bounds[variant]
        cpg = build_tree(case["root"])
        access = resolve_point(cpg, file=case["file"], line=case["access_line"])
        report = find_bounds_checks(cpg, access, settings.size_arguments)
        dom = oracles.dominator_sets(cpg, cpg.method_of(access.id).id)
        agrees = all(
            c.dominates_access == (c.check.node_id == access.id or c.check.node_id in dom[access.id])
            for c in report.checks
        )
        expected = all(c.dominates_access == case["dominates_access"] for c in report.checks)
        passed = passed and bool(report.checks) and agrees and expected
        outcomes.append(f"{variant}: {len(report.checks)} checks, dominates_access="
                        f"{[c.dominates_access for c in report.checks]}")
    return CheckResult(name="bounds_ordering", passed=passed, detail="; ".join(outcomes))


def check_toy_ground_truth(settings: Settings) -> CheckResult:
    toy = load_manifest()["toy"]
    cpg = build_tree(toy["root"])
    config = SourceSinkConfig.from_settings(settings)
    counts = {
        "paths": len(find_taint_flows(cpg, config, 10)),
        "sources": len(find_taint_sources(cpg, config)),
        "sinks": len(find_taint_sinks(cpg, config)),
    }
    return CheckResult(
        name="toy_ground_truth",
        passed=counts == toy["expected"],
        detail=", ".join(f"{k}={v}" for k, v in counts.items()),
    )


def _isolated(settings: Settings, scratch: Path, name: str) -> Settings:
    return settings.model_copy(update={"cache_root": scratch / name, "max_response_bytes": 1 << 24})


def check_cache(settings: Settings, scratch: Path) -> CheckResult:
    settings = _isolated(settings, scratch, "cache-check")
    toy_root = str(corpus_path(load_manifest()["toy"]["root"]))
    first = ToolService(settings, SessionManager(settings))
    second = ToolService(settings, SessionManager(settings))
    try:
        fresh = first.sessions.create(toy_root)
        loaded = second.sessions.create(toy_root)
        builds = second.sessions.cache.build_count
        differing = [
            name for name, params in TOY_TOOL_CALLS
            if encode(first.call(name, fresh.session_id, params)) != encode(second.call(name, loaded.session_id, params))
        ]
    finally:
        first.sessions.shutdown()
        second.sessions.shutdown()
    return CheckResult(
        name="cache",
        passed=builds == 0 and loaded.cache_hit is True and not differing,
        detail=f"second session builds={builds}, cache_hit={loaded.cache_hit}, "
               f"{len(TOY_TOOL_CALLS)} tools, differing={differing or 'none'}",
    )


def wait_for_job(jobs: JobQueue, job_id: str, timeout: float = 30.0):
    deadline = time.monotonic() + timeout
    while True:
        job = jobs.get(job_id)
        if job.finished or time.monotonic() > deadline:
            return job
        time.sleep(0.01)


def check_async_equivalence(settings: Settings, scratch: Path) -> CheckResult:
    settings = _isolated(settings, scratch, "async-check")
    service = ToolService(settings, SessionManager(settings))
    differing = []
    try:
        session = service.sessions.create(str(corpus_path(load_manifest()["toy"]["root"])))
        for name, params in TOY_TOOL_CALLS:
            sync = service.call(name, session.session_id, params)
            response = service.dispatch(name, ToolRequest(session_id=session.session_id, params=params, async_=True))
            job = wait_for_job(service.sessions.jobs, response.job_id)
            if job.state.value != "done" or encode(job.result) != encode(sync):
                differing.append(name)
    finally:
        service.sessions.shutdown()
    return CheckResult(
        name="async_equivalence",
        passed=not differing,
        detail=f"{len(TOY_TOOL_CALLS)} tools, differing={differing or 'none'}",
    )


def replay_workflow(client: TestClient, toy_root: str) -> Dict[str, Any]:
    """The scripted audit sequence against the toy program; returns each step's result."""
    toy = load_manifest()["toy"]

    def call(tool: str, session_id=None, /, **params):
        body = {"params": params}
        if session_id:
            body["session_id"] = session_id
        payload = client.post(f"/tools/{tool}", json=body).json()
        if payload["status"] != "ok":
            raise RuntimeError(f"{tool} failed: {payload['error']['code']}")
        return payload["result"]

    sid = call("create_cpg_session", source=toy_root)["session_id"]
    steps = {"methods": call("list_methods", sid)}
    steps["source"] = call("get_method_source", sid, name=toy["method"])
    steps["calls"] = call("list_calls", sid, pattern="memcpy")
    steps["dependencies"] = [
        call("get_data_dependencies", sid, file=toy["file"], line=line, direction="backward", variable=var)
        for line, var in zip((toy["copy_line"], toy["first_copy_line"]), toy["size_variables"])
    ]
    steps["slice"] = call("get_program_slice", sid, file=toy["file"], line=toy["copy_line"])
    call("close_session", sid)
    return steps


def check_workflow_replay(settings: Settings, scratch: Path) -> CheckResult:
    from app.main import create_app

    settings = _isolated(settings, scratch, "workflow-check")
    toy = load_manifest()["toy"]
    started = time.perf_counter()
    with TestClient(create_app(settings)) as client:
        steps = replay_workflow(client, str(corpus_path(toy["root"])))
    elapsed = time.perf_counter() - started

    slice_lines = {int(entry.split(":")[1]) for entry in steps["slice"]["lines"] if not entry.startswith("// ")}
    wanted = {toy["allocation_line"], toy["first_copy_line"], toy["copy_line"], *toy["size_lines"]}
    dep_lines = [sorted({d["point"]["line"] for d in r["dependencies"]}) for r in steps["dependencies"]]
    copies = [c["line"] for c in steps["calls"]["items"]]
    passed = (
        wanted <= slice_lines
        and copies == [toy["first_copy_line"], toy["copy_line"]]
        and all(dep_lines)
        and elapsed < 5.0
    )
    return CheckResult(
        name="workflow_replay",
        passed=passed,
        detail=f"slice lines={sorted(slice_lines)}, memcpy calls={copies}, dependency lines={dep_lines}",
    )


def check_determinism(settings: Settings) -> CheckResult:
    def snapshot() -> str:
        config = SourceSinkConfig.from_settings(settings)
        parts = [encode(find_taint_flows(cpg, config, 1000)) for _, cpg in program_cpgs()]
        parts.append(encode(slice_ratios()))
        return "".join(parts)

    return CheckResult(name="determinism", passed=snapshot() == snapshot(), detail="two runs compared")


CHECKS: List[Callable[..., CheckResult]] = [
    check_taint_oracle,
    check_path_cap,
    check_slice_fixpoint,
    check_slice_reduction,
    check_dataflow_oracles,
    check_bounds_ordering,
    check_toy_ground_truth,
    check_determinism,
]
SERVICE_CHECKS: List[Callable[..., CheckResult]] = [
    check_cache,
    check_async_equivalence,
    check_workflow_replay,
]


def _guarded(name: str, fn: Callable[[], CheckResult]) -> CheckResult:
    try:
        return fn()
    except Exception as e:
        logger.error("acceptance_check_crashed", check=name, error=str(e), exc_info=True)
        return CheckResult(name=name, passed=False, detail=f"{type(e).__name__}: {e}")


def run_acceptance(settings: Settings) -> List[CheckResult]:
    results = []
    for check in CHECKS:
        results.append(_guarded(check.__name__[len("check_"):], lambda c=check: c(settings)))
    with tempfile.TemporaryDirectory(prefix="codebadger-acceptance-") as tmp:
        for check in SERVICE_CHECKS:
            results.append(_guarded(check.__name__[len("check_"):], lambda c=check: c(settings, Path(tmp))))
    logger.info("acceptance_done", passed=sum(r.passed for r in results), total=len(results))
    return results


def render_table(results: List[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    rows = [f"{'check'.ljust(width)}  result  detail", f"{'-' * width}  ------  ------"]
    for r in results:
        rows.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL':6}  {r.detail}")
    passed = sum(r.passed for r in results)
    rows.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(rows)
