import pytest

from app.analyses.bounds import access_variables, find_bounds_checks
from app.analyses.dataflow import get_data_dependencies
from app.core.config import DEFAULT_SIZE_ARGUMENTS
from app.core.errors import NotABoundsContext, ValidationFailed
from app.corpus.acceptance import build_tree

from conftest import line_of, make_cpg


def dep_lines(deps):
    return {(d.point.line, d.variable) for d in deps}


# --- data dependencies ---

def test_backward_dependencies_of_second_copy(toy_cpg):
    deps = get_data_dependencies(toy_cpg, line_of(toy_cpg, "vuln.c", 12))
    assert dep_lines(deps) == {
        (7, "ret"), (9, "ret"), (11, "ret"),
        (1, "ncname"), (2, "ncname"),
        (2, "lenn"),
    }
    assert all(d.hop == 1 for d in deps)


def test_variable_filter_applies_to_the_first_hop(toy_cpg):
    deps = get_data_dependencies(toy_cpg, line_of(toy_cpg, "vuln.c", 12), depth=2, variable="lenn")
    assert (2, "lenn") in dep_lines(deps)
    assert {d.variable for d in deps if d.hop == 1} == {"lenn"}
    assert any(d.hop == 2 and d.variable == "ncname" for d in deps)


def test_forward_dependencies_follow_bindings(toy_cpg):
    deps = get_data_dependencies(toy_cpg, line_of(toy_cpg, "vuln.c", 20), direction="forward")
    found = dep_lines(deps)
    assert {(22, "name"), (23, "n"), (1, "name")} <= found


def test_results_are_ordered_by_hop_then_position(toy_cpg):
    deps = get_data_dependencies(toy_cpg, line_of(toy_cpg, "vuln.c", 12), depth=3)
    keys = [(d.hop, d.point.file, d.point.line, d.point.node_id, d.variable) for d in deps]
    assert keys == sorted(keys)


@pytest.mark.parametrize("kwargs", [{"direction": "sideways"}, {"depth": 0}])
def test_bad_arguments_are_rejected(toy_cpg, kwargs):
    with pytest.raises(ValidationFailed):
        get_data_dependencies(toy_cpg, line_of(toy_cpg, "vuln.c", 12), **kwargs)


# --- bounds checks ---

def test_check_after_access_does_not_dominate():
    cpg = build_tree("bounds/vuln")
    report = find_bounds_checks(cpg, line_of(cpg, "strip.c", 3))
    assert report.variables == ["pos"]
    assert [(c.check.line, c.operator, c.dominates_access) for c in report.checks] == [(4, ">=", False)]
    assert report.checks[0].relation == "pos >= size"


def test_check_before_access_dominates():
    cpg = build_tree("bounds/patched")
    report = find_bounds_checks(cpg, line_of(cpg, "strip.c", 6))
    assert [(c.check.line, c.dominates_access) for c in report.checks] == [(3, True)]


def test_size_argument_counts_as_access(toy_cpg):
    access = line_of(toy_cpg, "vuln.c", 12)
    assert access_variables(toy_cpg, access, DEFAULT_SIZE_ARGUMENTS) == {"lenn"}


def test_comparison_inside_access_statement_dominates():
    text = "int f(char a[], int i) {\n    a[i] = i < 4;\n    return 0;\n}\n"
    cpg = make_cpg(text)
    report = find_bounds_checks(cpg, line_of(cpg, "t.c", 2))
    assert [c.dominates_access for c in report.checks] == [True]


def test_statement_without_index_is_not_a_bounds_context(toy_cpg):
    with pytest.raises(NotABoundsContext):
        find_bounds_checks(toy_cpg, line_of(toy_cpg, "vuln.c", 23))
