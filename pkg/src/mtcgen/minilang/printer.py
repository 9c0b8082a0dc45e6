"""Canonical pretty-printer for the Mini language.

Layout rules: 4-space indent, one statement per line, mandatory braces,
and every binary/unary expression wrapped in parentheses. The blanket
parenthesization keeps an operator-level mutant's pretty-print within a
single token of the original. parse(pretty_print(p)) is structurally
equal to p.
"""

from __future__ import annotations

from . import ast

_INDENT = "    "

_STRING_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def escape_string(value: str) -> str:
    return "".join(_STRING_ESCAPES.get(ch, ch) for ch in value)


def print_type(t: ast.MiniType) -> str:
    return t.render()


def print_expr(expr: ast.Expr) -> str:
    if isinstance(expr, ast.IntLit):
        return str(expr.value)
    if isinstance(expr, ast.BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, ast.StringLit):
        return f'"{escape_string(expr.value)}"'
    if isinstance(expr, ast.ListLit):
        return "[" + ", ".join(print_expr(e) for e in expr.elements) + "]"
    if isinstance(expr, ast.Name):
        return expr.ident
    if isinstance(expr, ast.FieldAccess):
        return f"{print_expr(expr.receiver)}.{expr.name}"
    if isinstance(expr, ast.Call):
        args = ", ".join(print_expr(a) for a in expr.args)
        if expr.receiver is None:
            return f"{expr.name}({args})"
        return f"{print_expr(expr.receiver)}.{expr.name}({args})"
    if isinstance(expr, ast.New):
        args = ", ".join(print_expr(a) for a in expr.args)
        return f"new {expr.class_name}({args})"
    if isinstance(expr, ast.Index):
        return f"{print_expr(expr.seq)}[{print_expr(expr.index)}]"
    if isinstance(expr, ast.Unary):
        return f"({expr.op}{print_expr(expr.operand)})"
    if isinstance(expr, ast.Binary):
        return f"({print_expr(expr.lhs)} {expr.op} {print_expr(expr.rhs)})"
    raise TypeError(f"unprintable expression {type(expr).__name__}")


def _print_stmt(stmt: ast.Stmt, depth: int, out: list[str]) -> None:
    pad = _INDENT * depth
    if isinstance(stmt, ast.VarDecl):
        out.append(f"{pad}{print_type(stmt.decl_type)} {stmt.name} = {print_expr(stmt.init)};")
    elif isinstance(stmt, ast.Assign):
        out.append(f"{pad}{print_expr(stmt.target)} = {print_expr(stmt.value)};")
    elif isinstance(stmt, ast.If):
        out.append(f"{pad}if ({print_expr(stmt.cond)}) {{")
        _print_block_body(stmt.then, depth + 1, out)
        if stmt.orelse is not None:
            out.append(f"{pad}}} else {{")
            _print_block_body(stmt.orelse, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, ast.While):
        out.append(f"{pad}while ({print_expr(stmt.cond)}) {{")
        _print_block_body(stmt.body, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, ast.Return):
        if stmt.value is None:
            out.append(f"{pad}return;")
        else:
            out.append(f"{pad}return {print_expr(stmt.value)};")
    elif isinstance(stmt, ast.Throw):
        out.append(f"{pad}throw {print_expr(stmt.value)};")
    elif isinstance(stmt, ast.ExprStmt):
        out.append(f"{pad}{print_expr(stmt.expr)};")
    else:
        raise TypeError(f"unprintable statement {type(stmt).__name__}")


def _print_block_body(block: ast.Block, depth: int, out: list[str]) -> None:
    for stmt in block.stmts:
        _print_stmt(stmt, depth, out)


def print_method(method: ast.MethodDecl, depth: int = 1) -> str:
    out: list[str] = []
    pad = _INDENT * depth
    for ann in method.annotations:
        out.append(f"{pad}@{ann}")
    static = "static " if method.static else ""
    ret = "void" if method.return_type == ast.UNIT else print_type(method.return_type)
    params = ", ".join(f"{print_type(p.decl_type)} {p.name}" for p in method.params)
    out.append(f"{pad}{static}{ret} {method.name}({params}) {{")
    _print_block_body(method.body, depth + 1, out)
    out.append(f"{pad}}}")
    return "\n".join(out)


def print_method_signature(method: ast.MethodDecl, depth: int = 1) -> str:
    """Signature-only rendering with the body elided, for class skeletons."""
    pad = _INDENT * depth
    lines = [f"{pad}@{ann}" for ann in method.annotations]
    static = "static " if method.static else ""
    ret = "void" if method.return_type == ast.UNIT else print_type(method.return_type)
    params = ", ".join(f"{print_type(p.decl_type)} {p.name}" for p in method.params)
    lines.append(f"{pad}{static}{ret} {method.name}({params}) {{ ... }}")
    return "\n".join(lines)


def print_field(field: ast.FieldDecl, depth: int = 1) -> str:
    pad = _INDENT * depth
    static = "static " if field.static else ""
    text = f"{pad}{static}{print_type(field.decl_type)} {field.name}"
    if field.init is not None:
        text += f" = {print_expr(field.init)}"
    return text + ";"


def print_class(cls: ast.ClassDecl) -> str:
    out: list[str] = [f"class {cls.name} {{"]
    for field in cls.fields:
        out.append(print_field(field))
    for method in cls.methods:
        out.append(print_method(method))
    out.append("}")
    return "\n".join(out) + "\n"


def print_class_skeleton(cls: ast.ClassDecl) -> str:
    """Class with method bodies elided to signatures, for prompt context."""
    out: list[str] = [f"class {cls.name} {{"]
    for field in cls.fields:
        out.append(print_field(field))
    for method in cls.methods:
        out.append(print_method_signature(method))
    out.append("}")
    return "\n".join(out) + "\n"


def pretty_print(program: ast.Program) -> str:
    return "\n".join(print_class(c) for c in program.classes)
