import json

import pytest

from app.core.errors import IoError
from app.corpus import oracles
from app.cpg import serialize
from app.cpg.models import Binding, EdgeKind, NodeKind
from app.frontend.source import SourceFile
from app.cpg.builder import build_cpg_from_files

from conftest import line_of, make_cpg, program_cpg

BRANCH = """int f(int c) {
    int x = 1;
    int y = 0;
    if (c) {
        y = x;
    }
    return y;
}
"""

LOOP = """int g(int n) {
    int i = 0;
    while (i < n) {
        i = i + 1;
    }
    return i;
}
"""

CALLS = """int callee(int p) {
    return p + 1;
}

int main() {
    int a = 5;
    int b = callee(a);
    return b;
}
"""


def flow_lines(cpg, binding=None):
    """REACHING_DEF edges as (src line, dst line, variable)."""
    return {
        (cpg.node(e.src).line, cpg.node(e.dst).line, e.variable)
        for e in cpg.edges_of_kind(EdgeKind.REACHING_DEF)
        if e.binding == binding
    }


def cdg_lines(cpg):
    return {(cpg.node(e.src).line, cpg.node(e.dst).line) for e in cpg.edges_of_kind(EdgeKind.CDG)}


# --- control flow ---

def test_if_statement_branches_to_body_and_join():
    cpg = make_cpg(BRANCH)
    branch = line_of(cpg, "t.c", 4)
    assert branch.kind == NodeKind.CONTROL_STRUCTURE and branch.code == "if (c)"
    assert {cpg.node(e.dst).line for e in cpg.out_edges(branch.id, EdgeKind.CFG)} == {5, 7}


def test_cfg_runs_from_method_to_method_return():
    cpg = make_cpg(BRANCH)
    method = cpg.methods()[0]
    fragment = cpg.cfg(method.id)
    assert fragment.entry == method.id
    assert cpg.node(fragment.exit).kind == NodeKind.METHOD_RETURN
    assert cpg.node(fragment.exit).line == 8
    assert oracles.exit_reachable(cpg, method.id)


def test_dead_code_has_no_control_flow():
    cpg = program_cpg("p22_dead_code.c")
    dead = [n for n in cpg.nodes_of_kind(NodeKind.CALL) if n.name == "system"][0]
    assert cpg.in_edges(dead.id, EdgeKind.CFG) == []
    assert dead.id not in cpg.cfg(cpg.method_of(dead.id).id).nodes


# --- reaching definitions ---

def test_reaching_definitions_through_a_branch():
    cpg = make_cpg(BRANCH)
    assert flow_lines(cpg) == {
        (1, 4, "c"),
        (2, 5, "x"),
        (3, 7, "y"),
        (5, 7, "y"),
        (7, 8, "$ret"),
    }


def test_loop_carried_definitions():
    cpg = make_cpg(LOOP)
    edges = flow_lines(cpg)
    assert {(2, 3, "i"), (4, 3, "i"), (2, 4, "i"), (4, 4, "i"), (2, 6, "i"), (4, 6, "i")} <= edges
    assert (1, 3, "n") in edges


def test_strong_definition_kills_earlier_one():
    cpg = make_cpg("int k() {\n    int x = 1;\n    x = 2;\n    return x;\n}\n")
    assert {e for e in flow_lines(cpg) if e[2] == "x"} == {(3, 4, "x")}


def test_array_writes_are_weak_definitions():
    text = "int h() {\n    char a[4];\n    int v = 1;\n    a[0] = v;\n    a[1] = 2;\n    return a[0];\n}\n"
    cpg = make_cpg(text)
    assert {e for e in flow_lines(cpg) if e[2] == "a"} == {(4, 6, "a"), (5, 6, "a")}
    assert line_of(cpg, "t.c", 4).weak_defines == ("a",)


def test_array_passed_to_call_is_weakly_defined():
    text = "int r() {\n    char b[4];\n    read(0, b, 4);\n    return b[0];\n}\n"
    cpg = make_cpg(text)
    assert (3, 4, "b") in flow_lines(cpg)


@pytest.mark.parametrize("name", ["p08_branch.c", "p07_loop.c", "p10_multi_source.c", "p26_loop_calls.c"])
def test_reaching_definitions_match_path_enumeration(name):
    cpg = program_cpg(name)
    for method in cpg.methods():
        produced = {
            (e.src, e.dst, e.variable)
            for e in cpg.edges_of_kind(EdgeKind.REACHING_DEF)
            if e.binding is None and cpg.method_of(e.dst).id == method.id
        }
        assert produced == oracles.reaching_definition_pairs(cpg, method.id)


def test_use_before_definition_is_a_warning_not_an_error():
    cpg = make_cpg("int w() {\n    int x;\n    return x;\n}\n")
    assert [w.message for w in cpg.warnings] == ["'x' may be used before it is defined"]
    assert cpg.warnings[0].line == 3


def test_buffer_filled_by_a_call_is_not_used_before_definition():
    cpg = make_cpg("int r() {\n    char buf[8];\n    int n = read(0, buf, 8);\n    int k;\n    return n + k;\n}\n")
    assert [(w.line, w.message) for w in cpg.warnings] == [(5, "'k' may be used before it is defined")]


def test_undeclared_identifier_is_reported():
    cpg = make_cpg("int u() {\n    return z;\n}\n")
    assert any(w.message == "undeclared identifier 'z' in u" for w in cpg.warnings)


# --- control dependence and dominance ---

def test_branch_body_depends_on_condition():
    assert cdg_lines(make_cpg(BRANCH)) == {(4, 5)}


def test_loop_header_depends_on_itself():
    assert cdg_lines(make_cpg(LOOP)) == {(3, 4), (3, 3)}


@pytest.mark.parametrize("name", ["p08_branch.c", "p07_loop.c", "p19_nested_if.c"])
def test_cdg_and_dominators_match_set_oracles(name):
    cpg = program_cpg(name)
    for method in cpg.methods():
        if not oracles.exit_reachable(cpg, method.id):
            continue
        produced = {
            (e.src, e.dst) for e in cpg.edges_of_kind(EdgeKind.CDG) if cpg.method_of(e.dst).id == method.id
        }
        assert produced == oracles.control_dependence_pairs(cpg, method.id)
        expected = oracles.dominator_sets(cpg, method.id)
        tree = cpg.dominators(method.id)
        for node, doms in expected.items():
            assert tree.dominators(node) == set(doms)


def test_entry_dominates_everything():
    cpg = make_cpg(BRANCH)
    method = cpg.methods()[0]
    tree = cpg.dominators(method.id)
    assert all(tree.dominates(method.id, n) for n in cpg.cfg(method.id).nodes)
    assert not tree.dominates(line_of(cpg, "t.c", 5).id, line_of(cpg, "t.c", 7).id)


# --- calls ---

def test_call_edges_and_bindings():
    cpg = make_cpg(CALLS)
    call = [n for n in cpg.nodes_of_kind(NodeKind.CALL) if n.name == "callee"][0]
    callee = cpg.node(cpg.callee_of(call.id))
    assert callee.kind == NodeKind.METHOD and callee.name == "callee"
    assert [a.code for a in cpg.arguments(call.id)] == ["a"]
    assert flow_lines(cpg, Binding.PARAM) == {(6, 1, "a")}
    assert flow_lines(cpg, Binding.RETURN) == {(3, 7, "$ret")}


def test_external_calls_stay_unresolved():
    cpg = make_cpg("int m() {\n    int n = strlen(\"x\");\n    return n;\n}\n")
    call = cpg.nodes_of_kind(NodeKind.CALL)[0]
    assert cpg.callee_of(call.id) is None
    assert [a.kind for a in cpg.arguments(call.id)] == [NodeKind.LITERAL]


def test_duplicate_definitions_prefer_the_callers_file():
    files = [
        SourceFile("a.c", "int helper() {\n    return 1;\n}\n"),
        SourceFile("b.c", "int helper() {\n    return 2;\n}\nint main() {\n    return helper();\n}\n"),
        SourceFile("c.c", "int other() {\n    return helper();\n}\n"),
    ]
    cpg = build_cpg_from_files(files)
    targets = {
        cpg.node(c.method_id).name: cpg.node(cpg.callee_of(c.id)).file
        for c in cpg.nodes_of_kind(NodeKind.CALL)
    }
    assert targets == {"main": "b.c", "other": "a.c"}


# --- graph integrity and cache format ---

def test_indexes_are_consistent(toy_cpg):
    assert toy_cpg.verify_indexes() == []
    assert len(toy_cpg.nodes_at("vuln.c", 12)) > 1


def test_serialized_form_is_byte_stable(toy_cpg):
    text = serialize.dumps(toy_cpg)
    reloaded = serialize.loads(text)
    assert serialize.dumps(reloaded) == text
    assert len(reloaded) == len(toy_cpg)
    assert reloaded.edges == toy_cpg.edges


def test_tampered_cache_payload_is_rejected(toy_cpg):
    header, payload, _ = serialize.dumps(toy_cpg).split("\n", 2)
    with pytest.raises(IoError):
        serialize.loads(header + "\n" + payload.replace("memcpy", "memmove", 1) + "\n")
    with pytest.raises(IoError):
        serialize.loads("not a cache file")


def test_cache_header_names_the_digest_algorithm(toy_cpg):
    header_line, payload, _ = serialize.dumps(toy_cpg).split("\n", 2)
    header = json.loads(header_line)
    assert header["digest_algorithm"] == "sha256"
    assert header["source_hash"] == toy_cpg.source_hash

    header["digest_algorithm"] = "md5"
    with pytest.raises(IoError):
        serialize.loads(json.dumps(header) + "\n" + payload + "\n")
