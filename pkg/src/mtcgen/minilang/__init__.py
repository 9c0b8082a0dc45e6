"""The Mini language: parser, type checker, pretty-printer, interpreter.

Public surface:
    parse_program(sources)        -> Program | DiagnosticList
    pretty_print(program)         -> canonical source text
    run_test_class(program, t, l) -> {test name: TestOutcome}
"""

from __future__ import annotations

from . import ast
from .ast import MethodRef, Program
from .diagnostics import (
    DUPLICATE_DECL,
    Diagnostic,
    DiagnosticList,
    PARSE_ERROR,
    TYPE_MISMATCH,
    UNRESOLVED_SYMBOL,
)
from .interp import (
    ASSERT_FAIL,
    CLASS_LEVEL_KEY,
    COMPILE_ERROR,
    Limits,
    PASS,
    RUNTIME_ERROR,
    TIMEOUT,
    TestClass,
    TestOutcome,
    check_test_class,
    run_test_class,
)
from .parser import ParseFailure, parse_classes
from .printer import (
    pretty_print,
    print_class,
    print_class_skeleton,
    print_expr,
    print_method,
)
from .typecheck import ASSERTION_BUILTINS, BUILTIN_NAMES, TypeInfo, typecheck

__all__ = [
    "ast",
    "ASSERT_FAIL",
    "ASSERTION_BUILTINS",
    "BUILTIN_NAMES",
    "CLASS_LEVEL_KEY",
    "COMPILE_ERROR",
    "Diagnostic",
    "DiagnosticList",
    "DUPLICATE_DECL",
    "Limits",
    "MethodRef",
    "PARSE_ERROR",
    "PASS",
    "ParseFailure",
    "Program",
    "RUNTIME_ERROR",
    "TestClass",
    "TestOutcome",
    "TIMEOUT",
    "TYPE_MISMATCH",
    "TypeInfo",
    "UNRESOLVED_SYMBOL",
    "check_test_class",
    "parse_classes",
    "parse_program",
    "parse_raw_program",
    "pretty_print",
    "print_class",
    "print_class_skeleton",
    "print_expr",
    "print_method",
    "run_test_class",
    "typecheck",
]


def parse_raw_program(sources: list[tuple[str, str]]) -> Program | DiagnosticList:
    """Parse without type checking; used by round-trip tests and tooling."""
    diags = DiagnosticList()
    classes: list[ast.ClassDecl] = []
    next_id = 0
    for path, text in sources:
        try:
            parsed, next_id = parse_classes(text, path, next_id)
            classes.extend(parsed)
        except ParseFailure as e:
            diags.add(path, e.line, PARSE_ERROR, e.message)
    if diags:
        return diags
    return Program(classes, tuple(p for p, _ in sources))


def parse_program(sources: list[tuple[str, str]]) -> Program | DiagnosticList:
    """Parse and type-check a set of source files.

    Never raises on bad input: every failure comes back as a DiagnosticList
    with stable codes (PARSE_ERROR, UNRESOLVED_SYMBOL, TYPE_MISMATCH,
    DUPLICATE_DECL).
    """
    result = parse_raw_program(sources)
    if isinstance(result, DiagnosticList):
        return result
    info, diags = typecheck(result.classes)
    if diags:
        return diags
    result.type_info = info
    return result
