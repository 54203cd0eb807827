"""
Versioned JSON cache format for a Cpg.

Layout: header, files, nodes, edges, build report, warnings. Indexes and dominator trees are
rebuilt on load, so dump(load(dump(cpg))) is byte-identical to dump(cpg).
"""
import hashlib
import json
from typing import Any, Dict

from app.core.errors import IoError
from app.cpg.graph import Cpg
from app.cpg.models import AnalysisWarning, BuildIssue, CpgEdge, CpgNode
from app.frontend.source import SourceFile

FORMAT_NAME = "codebadger-cpg"
FORMAT_VERSION = 2
DIGEST_ALGORITHM = "sha256"


def _digest(payload: str) -> str:
    return hashlib.new(DIGEST_ALGORITHM, payload.encode("utf-8")).hexdigest()


def _payload(cpg: Cpg) -> Dict[str, Any]:
    return {
        "files": [{"path": f.path, "content": f.content} for f in cpg.files],
        "nodes": [n.model_dump(mode="json", exclude_defaults=True) for n in cpg.nodes],
        "edges": [e.model_dump(mode="json", exclude_none=True) for e in cpg.edges],
        "report": [r.model_dump(mode="json") for r in cpg.report],
        "warnings": [w.model_dump(mode="json") for w in cpg.warnings],
    }


def dumps(cpg: Cpg) -> str:
    payload = json.dumps(_payload(cpg), separators=(",", ":"), ensure_ascii=False, sort_keys=True)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "digest": _digest(payload),
        "digest_algorithm": DIGEST_ALGORITHM,
        "language": cpg.language,
        "source_hash": cpg.source_hash,
    }
    return json.dumps(header, separators=(",", ":"), sort_keys=True) + "\n" + payload + "\n"


def loads(text: str) -> Cpg:
    try:
        header_line, payload, _ = text.split("\n", 2)
        header = json.loads(header_line)
    except (ValueError, json.JSONDecodeError) as e:
        raise IoError("CPG cache file is truncated or not JSON", detail=str(e))
    if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
        raise IoError(
            "unsupported CPG cache format",
            detail={"format": header.get("format"), "version": header.get("version")},
        )
    if header.get("digest_algorithm") != DIGEST_ALGORITHM:
        raise IoError("unsupported CPG cache digest", detail={"digest_algorithm": header.get("digest_algorithm")})
    if _digest(payload) != header.get("digest"):
        raise IoError("CPG cache file digest mismatch")

    doc = json.loads(payload)
    return Cpg(
        files=[SourceFile(f["path"], f["content"]) for f in doc["files"]],
        nodes=[CpgNode.model_validate(n) for n in doc["nodes"]],
        edges=[CpgEdge.model_validate(e) for e in doc["edges"]],
        language=header["language"],
        source_hash=header["source_hash"],
        report=[BuildIssue.model_validate(r) for r in doc["report"]],
        warnings=[AnalysisWarning.model_validate(w) for w in doc["warnings"]],
    )
