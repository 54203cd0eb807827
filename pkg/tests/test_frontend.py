import pytest

from app.core.errors import IoError, LexError, ParseError, ParseFailed
from app.frontend.ast import AstKind
from app.frontend.lexer import tokenize
from app.frontend.parser import parse, parse_codebase, parse_file
from app.frontend.source import SourceFile, load_sources

from conftest import PROGRAMS_ROOT, TOY_ROOT


def src(text, name="t.c"):
    return SourceFile(path=name, content=text)


# --- lexer ---

def test_tokens_render_as_kind_and_text():
    tokens = tokenize(src('int x = 42; char s[4]; f("a\\n");'))
    assert [str(t) for t in tokens[:5]] == ["kw:int", "id:x", "op:=", "int:42", "punct:;"]
    assert "str:\"a\\n\"" in [str(t) for t in tokens]


def test_comments_are_skipped_and_locations_are_one_based():
    tokens = tokenize(src("// header\n/* block\n comment */ int y;"))
    assert [t.text for t in tokens] == ["int", "y", ";"]
    assert (tokens[0].loc.line, tokens[0].loc.col) == (3, 13)


def test_two_char_operators_win_over_single():
    tokens = tokenize(src("a <= b && c != d || !e"))
    assert [t.text for t in tokens if t.kind == "op"] == ["<=", "&&", "!=", "||", "!"]


@pytest.mark.parametrize("text, fragment", [
    ('"abc', "unterminated string"),
    ("/* never closed", "unterminated block comment"),
    ("int x = 1 @ 2;", "illegal character"),
    ('f("\\q");', "invalid escape"),
])
def test_lex_errors_carry_location(text, fragment):
    with pytest.raises(LexError) as exc:
        tokenize(src(text))
    assert fragment in exc.value.message
    assert exc.value.location.file == "t.c"


# --- parser ---

def test_function_shape_and_spans():
    text = "int add(int a, char b[]) {\n    int c = a + 1;\n    return c;\n}\n"
    unit = parse_file(src(text))
    fn = unit.children[0]
    assert fn.kind == AstKind.FUNCTION_DEF
    assert fn.name == "add" and fn.type_name == "int"
    assert [p.name for p in fn.params] == ["a", "b"]
    assert fn.params[1].is_array and fn.params[1].array_size is None
    decl = fn.body.children[0]
    assert decl.kind == AstKind.VAR_DECL and decl.has_init
    assert decl.init.kind == AstKind.BINARY_OP and decl.init.op == "+"
    assert decl.loc == ("t.c", 2, 5, 2, 19)


def test_node_code_matches_source_slice_over_corpus():
    for f in load_sources(PROGRAMS_ROOT) + load_sources(TOY_ROOT):
        unit = parse_file(f)
        for node in unit.walk():
            assert f.content[node.span.start:node.span.end] == node.code


def test_precedence_is_c_like():
    fn = parse_file(src("int f() { return 1 + 2 * 3 < 4 && 5; }")).children[0]
    expr = fn.body.children[0].children[0]
    assert expr.op == "&&"
    assert expr.children[0].op == "<"
    assert expr.children[0].children[0].op == "+"
    assert expr.children[0].children[0].children[1].op == "*"


def test_array_declaration_materializes_size_literal():
    decl = parse_file(src("int f() { char buf[16]; return 0; }")).children[0].body.children[0]
    assert decl.is_array and decl.array_size == 16
    assert decl.children[0].kind == AstKind.INT_LITERAL and decl.children[0].value == "16"


def test_void_params_and_void_return():
    fn = parse_file(src("void f(void) { g(); }")).children[0]
    assert fn.type_name == "void" and fn.params == []
    assert fn.body.children[0].kind == AstKind.EXPR_STMT


@pytest.mark.parametrize("text, expected", [
    ("int f() { x = ; }", "expression"),
    ("int f() { 1 = x; }", "';'"),
    ("int f() { return 0 }", "';'"),
    ("int x;", "'('"),
    ("int f() { char b[n]; }", "constant array size"),
])
def test_parse_errors_name_what_was_expected(text, expected):
    with pytest.raises(ParseError) as exc:
        parse_file(src(text))
    assert exc.value.expected == expected


def test_parse_codebase_keeps_good_files_and_collects_errors():
    result = parse_codebase([src("int ok() { return 0; }", "a.c"), src("int bad( {", "b.c")])
    assert not result.ok
    assert [u.name for u in result.root.children] == ["a.c"]
    assert result.errors[0].location.file == "b.c"
    with pytest.raises(ParseFailed):
        parse([src("int bad( {", "b.c")])


def nested_parens(depth):
    return "int f() { int x = " + "(" * depth + "1" + ")" * depth + "; return x; }"


def test_moderate_nesting_parses():
    root = parse([src(nested_parens(40))])
    assert root.children[0].children[0].name == "f"
    parse([src("int f() { int x = " + " + ".join(["1"] * 100) + "; return x; }")])


@pytest.mark.parametrize("text", [
    nested_parens(200),
    "int f() { int x = " + "-" * 500 + "1; return x; }",
    "int f() " + "{" * 300 + "}" * 300,
])
def test_deep_nesting_is_a_parse_error(text):
    result = parse_codebase([src(text, "deep.c"), src("int ok() { return 0; }", "ok.c")])
    assert [u.name for u in result.root.children] == ["ok.c"]
    [error] = result.errors
    assert isinstance(error, ParseError)
    assert error.expected == "at most 64 levels of nesting"
    assert error.location.file == "deep.c"


def test_long_operator_chain_is_a_parse_error():
    text = "int f() {\n  int x = " + " + ".join(["1"] * 400) + ";\n  return x;\n}"
    with pytest.raises(ParseError) as exc:
        parse_file(src(text))
    assert exc.value.expected == "an expression at most 256 levels deep"
    assert exc.value.location.line == 2


def test_root_ids_are_preorder():
    root = parse([src("int f() { return 1; }")])
    assert root.kind == AstKind.ROOT
    assert [n.id for n in root.walk()] == list(range(len(list(root.walk()))))


# --- sources ---

def test_load_sources_is_sorted_and_filtered(tmp_path):
    (tmp_path / "b.c").write_text("int b() { return 0; }\n")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "a.c").write_text("int a() { return 0; }\n")
    (tmp_path / "notes.txt").write_text("skip me")
    assert [f.path for f in load_sources(tmp_path)] == ["b.c", "sub/a.c"]


def test_load_sources_rejects_missing_root(tmp_path):
    with pytest.raises(IoError):
        load_sources(tmp_path / "nope")


def test_source_file_line_math():
    f = src("ab\ncd\n")
    assert f.line_count == 2
    assert f.line_text(2) == "cd"
    assert f.text(1, 2) == "ab\ncd\n"
    assert f.position(3) == (2, 1)
