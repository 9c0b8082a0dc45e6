"""Lexer, parser, pretty-printer, and type-checker behavior.

The language front end never raises on bad input through parse_program:
everything surfaces as diagnostics with stable codes.
"""

from __future__ import annotations

import pytest

from _generators import random_program
from mtcgen import bundled_corpus_path
from mtcgen.minilang import (
    DiagnosticList,
    DUPLICATE_DECL,
    PARSE_ERROR,
    TYPE_MISMATCH,
    UNRESOLVED_SYMBOL,
    parse_program,
    parse_raw_program,
    pretty_print,
)
from mtcgen.minilang import ast
from mtcgen.minilang.ast import ast_equal
from mtcgen.minilang.lexer import LexError, tokenize
from mtcgen.minilang.printer import print_expr


def parse_ok(text: str) -> ast.Program:
    result = parse_program([("<test>", text)])
    assert not isinstance(result, DiagnosticList), result.render()
    return result


def parse_diags(text: str) -> DiagnosticList:
    result = parse_program([("<test>", text)])
    assert isinstance(result, DiagnosticList)
    return result


# ── lexer ─────────────────────────────────────────────────────────────────────


def test_tokenize_basics():
    kinds = [(t.kind, t.value) for t in tokenize('class A { int x = 1; } // note')]
    assert ("KEYWORD", "class") in kinds
    assert ("IDENT", "A") in kinds
    assert ("PUNCT", "{") in kinds
    assert ("INT", "1") in kinds
    assert kinds[-1] == ("EOF", "")


def test_tokenize_two_char_operators():
    values = [t.value for t in tokenize("a <= b == c && d")]
    assert "<=" in values and "==" in values and "&&" in values


def test_tokenize_string_escapes():
    tokens = tokenize(r'"a\"b\\c\nd\te"')
    assert tokens[0].value == 'a"b\\c\nd\te'


def test_tokenize_line_comment_skipped():
    tokens = tokenize("x // the rest is ignored\ny")
    assert [t.value for t in tokens[:-1]] == ["x", "y"]


def test_tokenize_unterminated_string():
    with pytest.raises(LexError):
        tokenize('"never closed')


# ── parser ────────────────────────────────────────────────────────────────────


def test_minimal_class():
    program = parse_ok("class A { }")
    assert len(program.classes) == 1
    assert program.classes[0].name == "A"
    assert not program.classes[0].fields and not program.classes[0].methods


def test_unresolved_symbol_diagnostic():
    diags = parse_diags("class A { int f() { return g(); } }")
    assert UNRESOLVED_SYMBOL in diags.codes()
    assert any("'g'" in d.message for d in diags)


def test_parse_error_is_diagnostic_not_exception():
    diags = parse_diags("class A { int x = ; }")
    assert PARSE_ERROR in diags.codes()


def test_diagnostic_rendering_format():
    diags = parse_diags("class A { int f() { return g(); } }")
    line = diags.items[0].render()
    assert line.startswith("<test>:")
    assert ": UNRESOLVED_SYMBOL: " in line


def test_duplicate_class_and_field():
    assert DUPLICATE_DECL in parse_diags("class A { } class A { }").codes()
    assert DUPLICATE_DECL in parse_diags("class A { int x = 1; int x = 2; }").codes()


def test_duplicate_method_signature_vs_overload():
    overload = "class A { int f(int a) { return a; } int f(string s) { return 1; } }"
    assert parse_ok(overload)
    duplicate = "class A { int f(int a) { return a; } int f(int b) { return b; } }"
    assert DUPLICATE_DECL in parse_diags(duplicate).codes()


def test_negative_int_literal_round_trip():
    program = parse_ok("class A { int f() { return -1; } }")
    stmt = program.classes[0].methods[0].body.stmts[0]
    assert isinstance(stmt, ast.Return)
    assert isinstance(stmt.value, ast.IntLit) and stmt.value.value == -1
    assert "return -1;" in pretty_print(program)


def test_annotations_parse():
    program = parse_ok("class T { @Test void go() { return; } }")
    assert program.classes[0].methods[0].annotations == ("Test",)
    assert program.classes[0].methods[0].is_test()


def test_precedence_and_parens():
    program = parse_ok("class A { int f() { return 1 + 2 * 3; } }")
    ret = program.classes[0].methods[0].body.stmts[0]
    assert isinstance(ret.value, ast.Binary) and ret.value.op == "+"
    assert isinstance(ret.value.rhs, ast.Binary) and ret.value.rhs.op == "*"


def test_parens_group_explicitly():
    program = parse_ok("class A { int f() { return (1 + 2) * 3; } }")
    ret = program.classes[0].methods[0].body.stmts[0]
    assert ret.value.op == "*" and ret.value.lhs.op == "+"


# ── type checker ──────────────────────────────────────────────────────────────


def test_type_mismatch_assignment():
    diags = parse_diags('class A { int f() { int x = "s"; return x; } }')
    assert TYPE_MISMATCH in diags.codes()


def test_return_type_checked():
    diags = parse_diags('class A { int f() { return "s"; } }')
    assert TYPE_MISMATCH in diags.codes()


def test_condition_must_be_bool():
    diags = parse_diags("class A { void f() { if (1) { return; } } }")
    assert TYPE_MISMATCH in diags.codes()


def test_overload_resolution_by_arg_types():
    program = parse_ok(
        """
class A {
    static int f(int a) { return 1; }
    static int f(string s) { return 2; }
    static int g() { return A.f("x"); }
}
"""
    )
    info = program.type_info
    call = next(
        n
        for n in ast.walk(program.classes[0].methods[2].body)
        if isinstance(n, ast.Call)
    )
    target = info.call_targets[call.nid]
    assert target.ref.param_types == ("string",)


def test_instance_field_from_static_context_rejected():
    diags = parse_diags(
        "class A { int x; static int f() { return x; } }"
    )
    assert TYPE_MISMATCH in diags.codes()


def test_relational_operators_int_only():
    diags = parse_diags('class A { bool f() { return "a" < "b"; } }')
    assert TYPE_MISMATCH in diags.codes()


def test_string_concatenation_allowed():
    parse_ok('class A { string f() { return "a" + "b"; } }')


def test_empty_list_adopts_declared_type():
    parse_ok("class A { list<int> f() { list<int> xs = []; return xs; } }")


def test_constructor_requires_known_class_and_no_args():
    assert UNRESOLVED_SYMBOL in parse_diags(
        "class A { void f() { B b = new B(); return; } }"
    ).codes()
    assert TYPE_MISMATCH in parse_diags(
        "class B { } class A { void f() { B b = new B(1); return; } }"
    ).codes()


# ── pretty printer ────────────────────────────────────────────────────────────


def test_empty_class_canonical_layout():
    program = parse_ok("class A { }")
    assert pretty_print(program) == "class A {\n}\n"


def test_statements_one_per_line_with_indent():
    program = parse_ok("class A { int f() { int x = 1; return x; } }")
    text = pretty_print(program)
    assert "        int x = 1;\n        return x;" in text


def test_binary_expressions_fully_parenthesized():
    program = parse_ok("class A { int f() { return 1 + 2 * 3; } }")
    assert "return (1 + (2 * 3));" in pretty_print(program)


def test_print_expr_escapes_strings():
    assert print_expr(ast.StringLit('a"b\\c\nd')) == '"a\\"b\\\\c\\nd"'


def test_corpus_round_trip():
    source_dir = bundled_corpus_path("aes") / "src"
    sources = [
        (str(p), p.read_text(encoding="utf-8")) for p in sorted(source_dir.glob("*.mini"))
    ]
    program = parse_program(sources)
    assert not isinstance(program, DiagnosticList)
    reparsed = parse_raw_program([("<pp>", pretty_print(program))])
    assert not isinstance(reparsed, DiagnosticList)
    assert ast_equal(reparsed.classes, program.classes)


def test_bundled_aes_file_parses_to_one_class():
    path = bundled_corpus_path("aes") / "src" / "AESCodec.mini"
    program = parse_ok(path.read_text(encoding="utf-8"))
    assert len(program.classes) == 1
    names = {m.name for m in program.classes[0].methods}
    assert {"encryptText", "decryptText", "encryptTextWithAbecedarium"} <= names
    assert any(f.name == "defaultKey" for f in program.classes[0].fields)


@pytest.mark.parametrize("seed", range(60))
def test_random_ast_round_trip(seed):
    program = random_program(seed)
    text = pretty_print(program)
    reparsed = parse_raw_program([("<gen>", text)])
    assert not isinstance(reparsed, DiagnosticList), text
    assert ast_equal(reparsed.classes, program.classes)
