"""Type checker and name resolver for the Mini language.

Besides diagnostics, checking produces a TypeInfo table keyed by node id:
expression types, call-target resolutions (user method, builtin, or
constructor), field references, and which Name nodes denote classes.
Downstream static analysis (method facts, MTC property checks, skeleton
extraction) and the interpreter all consume these annotations instead of
re-resolving names.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .diagnostics import (
    DUPLICATE_DECL,
    DiagnosticList,
    TYPE_MISMATCH,
    UNRESOLVED_SYMBOL,
)

BUILTIN_NAMES = frozenset(
    {
        "print",
        "length",
        "charAt",
        "indexOf",
        "substring",
        "append",
        "contains",
        "assertEquals",
        "assertNotEquals",
        "assertTrue",
        "assertFalse",
    }
)

ASSERTION_BUILTINS = frozenset(
    {"assertEquals", "assertNotEquals", "assertTrue", "assertFalse"}
)


@dataclass(frozen=True)
class CallTarget:
    kind: str  # "method" | "builtin" | "ctor"
    name: str
    ref: ast.MethodRef | None = None  # set for kind == "method"


@dataclass
class TypeInfo:
    expr_types: dict[int, ast.MiniType] = field(default_factory=dict)
    call_targets: dict[int, CallTarget] = field(default_factory=dict)
    field_refs: dict[int, tuple[str, str]] = field(default_factory=dict)
    class_refs: set[int] = field(default_factory=set)

    def merged_with(self, other: "TypeInfo") -> "TypeInfo":
        merged = TypeInfo(
            dict(self.expr_types),
            dict(self.call_targets),
            dict(self.field_refs),
            set(self.class_refs),
        )
        merged.expr_types.update(other.expr_types)
        merged.call_targets.update(other.call_targets)
        merged.field_refs.update(other.field_refs)
        merged.class_refs.update(other.class_refs)
        return merged


class _Scope:
    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        self.vars: dict[str, ast.MiniType] = {}

    def lookup(self, name: str) -> ast.MiniType | None:
        scope: _Scope | None = self
        while scope is not None:
            if name in scope.vars:
                return scope.vars[name]
            scope = scope.parent
        return None

    def declared_here(self, name: str) -> bool:
        return name in self.vars


class _Checker:
    def __init__(self, classes: list[ast.ClassDecl]):
        self.classes = classes
        self.by_name: dict[str, ast.ClassDecl] = {}
        self.info = TypeInfo()
        self.diags = DiagnosticList()

    # ── entry ──────────────────────────────────────────────────────────────

    def check(self) -> tuple[TypeInfo, DiagnosticList]:
        for cls in self.classes:
            if cls.name in self.by_name:
                self.error(cls, DUPLICATE_DECL, f"duplicate class '{cls.name}'")
            else:
                self.by_name[cls.name] = cls
        for cls in self.classes:
            self.check_class(cls)
        return self.info, self.diags

    def error(self, node: ast.Node, code: str, message: str) -> None:
        self.diags.add(node.span.path, node.span.line, code, message)

    # ── declarations ───────────────────────────────────────────────────────

    def check_class(self, cls: ast.ClassDecl) -> None:
        seen_fields: set[str] = set()
        for fld in cls.fields:
            if fld.name in seen_fields:
                self.error(fld, DUPLICATE_DECL, f"duplicate field '{fld.name}'")
            seen_fields.add(fld.name)
            self.check_type_exists(fld.decl_type, fld)
            if fld.init is not None:
                t = self.check_expr(fld.init, cls, _Scope(), static=True)
                if not ast.types_compatible(t, fld.decl_type):
                    self.error(
                        fld,
                        TYPE_MISMATCH,
                        f"initializer of '{fld.name}' has type {t.render()}, "
                        f"expected {fld.decl_type.render()}",
                    )
        seen_sigs: set[tuple[str, tuple[str, ...]]] = set()
        for method in cls.methods:
            sig = (method.name, tuple(t.render() for t in method.param_types()))
            if sig in seen_sigs:
                self.error(
                    method, DUPLICATE_DECL, f"duplicate method '{method.name}'"
                )
            seen_sigs.add(sig)
            self.check_method(cls, method)

    def check_method(self, cls: ast.ClassDecl, method: ast.MethodDecl) -> None:
        scope = _Scope()
        seen_params: set[str] = set()
        for param in method.params:
            self.check_type_exists(param.decl_type, param)
            if param.name in seen_params:
                self.error(
                    param, DUPLICATE_DECL, f"duplicate parameter '{param.name}'"
                )
            seen_params.add(param.name)
            scope.vars[param.name] = param.decl_type
        if method.return_type != ast.UNIT:
            self.check_type_exists(method.return_type, method)
        self.check_block(method.body, cls, method, _Scope(scope))

    def check_type_exists(self, t: ast.MiniType, node: ast.Node) -> None:
        if isinstance(t, ast.ClassType) and t.name not in self.by_name:
            self.error(node, UNRESOLVED_SYMBOL, f"cannot find symbol '{t.name}'")
        elif isinstance(t, ast.ListType):
            self.check_type_exists(t.elem, node)

    # ── statements ─────────────────────────────────────────────────────────

    def check_block(
        self, block: ast.Block, cls: ast.ClassDecl, method: ast.MethodDecl, scope: _Scope
    ) -> None:
        for stmt in block.stmts:
            self.check_stmt(stmt, cls, method, scope)

    def check_stmt(
        self, stmt: ast.Stmt, cls: ast.ClassDecl, method: ast.MethodDecl, scope: _Scope
    ) -> None:
        static = method.static
        if isinstance(stmt, ast.VarDecl):
            self.check_type_exists(stmt.decl_type, stmt)
            t = self.check_expr(stmt.init, cls, scope, static)
            if not ast.types_compatible(t, stmt.decl_type):
                self.error(
                    stmt,
                    TYPE_MISMATCH,
                    f"initializer of '{stmt.name}' has type {t.render()}, "
                    f"expected {stmt.decl_type.render()}",
                )
            if scope.declared_here(stmt.name):
                self.error(stmt, DUPLICATE_DECL, f"duplicate variable '{stmt.name}'")
            scope.vars[stmt.name] = stmt.decl_type
        elif isinstance(stmt, ast.Assign):
            target_t = self.check_expr(stmt.target, cls, scope, static)
            value_t = self.check_expr(stmt.value, cls, scope, static)
            if not ast.types_compatible(value_t, target_t):
                self.error(
                    stmt,
                    TYPE_MISMATCH,
                    f"cannot assign {value_t.render()} to {target_t.render()}",
                )
        elif isinstance(stmt, ast.If):
            t = self.check_expr(stmt.cond, cls, scope, static)
            if not ast.types_compatible(t, ast.BOOL):
                self.error(stmt, TYPE_MISMATCH, "if condition must be bool")
            self.check_block(stmt.then, cls, method, _Scope(scope))
            if stmt.orelse is not None:
                self.check_block(stmt.orelse, cls, method, _Scope(scope))
        elif isinstance(stmt, ast.While):
            t = self.check_expr(stmt.cond, cls, scope, static)
            if not ast.types_compatible(t, ast.BOOL):
                self.error(stmt, TYPE_MISMATCH, "while condition must be bool")
            self.check_block(stmt.body, cls, method, _Scope(scope))
        elif isinstance(stmt, ast.Return):
            if stmt.value is None:
                if method.return_type != ast.UNIT:
                    self.error(
                        stmt,
                        TYPE_MISMATCH,
                        f"method '{method.name}' must return "
                        f"{method.return_type.render()}",
                    )
            else:
                t = self.check_expr(stmt.value, cls, scope, static)
                if method.return_type == ast.UNIT:
                    self.error(
                        stmt, TYPE_MISMATCH, f"void method '{method.name}' returns a value"
                    )
                elif not ast.types_compatible(t, method.return_type):
                    self.error(
                        stmt,
                        TYPE_MISMATCH,
                        f"return type {t.render()} does not match "
                        f"{method.return_type.render()}",
                    )
        elif isinstance(stmt, ast.Throw):
            t = self.check_expr(stmt.value, cls, scope, static)
            if not ast.types_compatible(t, ast.STRING):
                self.error(stmt, TYPE_MISMATCH, "throw expects a string message")
        elif isinstance(stmt, ast.ExprStmt):
            self.check_expr(stmt.expr, cls, scope, static)
        else:
            raise TypeError(f"unexpected statement {type(stmt).__name__}")

    # ── expressions ────────────────────────────────────────────────────────

    def record(self, expr: ast.Expr, t: ast.MiniType) -> ast.MiniType:
        self.info.expr_types[expr.nid] = t
        return t

    def check_expr(
        self, expr: ast.Expr, cls: ast.ClassDecl, scope: _Scope, static: bool
    ) -> ast.MiniType:
        if isinstance(expr, ast.IntLit):
            return self.record(expr, ast.INT)
        if isinstance(expr, ast.BoolLit):
            return self.record(expr, ast.BOOL)
        if isinstance(expr, ast.StringLit):
            return self.record(expr, ast.STRING)
        if isinstance(expr, ast.ListLit):
            elem_t: ast.MiniType = ast.ANY
            for e in expr.elements:
                t = self.check_expr(e, cls, scope, static)
                if isinstance(elem_t, ast.AnyType):
                    elem_t = t
                elif not ast.types_compatible(t, elem_t):
                    self.error(e, TYPE_MISMATCH, "mixed element types in list literal")
            if not expr.elements:
                return self.record(expr, ast.ANY)
            return self.record(expr, ast.ListType(elem_t))
        if isinstance(expr, ast.Name):
            return self.check_name(expr, cls, scope, static)
        if isinstance(expr, ast.FieldAccess):
            return self.check_field_access(expr, cls, scope, static)
        if isinstance(expr, ast.Call):
            return self.check_call(expr, cls, scope, static)
        if isinstance(expr, ast.New):
            if expr.class_name not in self.by_name:
                self.error(
                    expr, UNRESOLVED_SYMBOL, f"cannot find symbol '{expr.class_name}'"
                )
                return self.record(expr, ast.ANY)
            for a in expr.args:
                self.check_expr(a, cls, scope, static)
            if expr.args:
                self.error(
                    expr, TYPE_MISMATCH, "constructors take no arguments"
                )
            self.info.call_targets[expr.nid] = CallTarget("ctor", expr.class_name)
            return self.record(expr, ast.ClassType(expr.class_name))
        if isinstance(expr, ast.Index):
            seq_t = self.check_expr(expr.seq, cls, scope, static)
            idx_t = self.check_expr(expr.index, cls, scope, static)
            if not ast.types_compatible(idx_t, ast.INT):
                self.error(expr, TYPE_MISMATCH, "index must be int")
            if isinstance(seq_t, ast.ListType):
                return self.record(expr, seq_t.elem)
            if isinstance(seq_t, ast.AnyType):
                return self.record(expr, ast.ANY)
            self.error(expr, TYPE_MISMATCH, "only lists can be indexed")
            return self.record(expr, ast.ANY)
        if isinstance(expr, ast.Unary):
            t = self.check_expr(expr.operand, cls, scope, static)
            if not ast.types_compatible(t, ast.BOOL):
                self.error(expr, TYPE_MISMATCH, "operator '!' expects bool")
            return self.record(expr, ast.BOOL)
        if isinstance(expr, ast.Binary):
            return self.check_binary(expr, cls, scope, static)
        raise TypeError(f"unexpected expression {type(expr).__name__}")

    def check_name(
        self, expr: ast.Name, cls: ast.ClassDecl, scope: _Scope, static: bool
    ) -> ast.MiniType:
        t = scope.lookup(expr.ident)
        if t is not None:
            return self.record(expr, t)
        fld = self._field_of(cls, expr.ident)
        if fld is not None:
            if static and not fld.static:
                self.error(
                    expr,
                    TYPE_MISMATCH,
                    f"instance field '{expr.ident}' referenced from a static context",
                )
            self.info.field_refs[expr.nid] = (cls.name, expr.ident)
            return self.record(expr, fld.decl_type)
        self.error(expr, UNRESOLVED_SYMBOL, f"cannot find symbol '{expr.ident}'")
        return self.record(expr, ast.ANY)

    def _field_of(self, cls: ast.ClassDecl, name: str) -> ast.FieldDecl | None:
        for fld in cls.fields:
            if fld.name == name:
                return fld
        return None

    def _class_receiver(self, receiver: ast.Expr, scope: _Scope) -> ast.ClassDecl | None:
        """A bare Name that is a class (and not shadowed by a local) denotes it."""
        if (
            isinstance(receiver, ast.Name)
            and scope.lookup(receiver.ident) is None
            and receiver.ident in self.by_name
        ):
            return self.by_name[receiver.ident]
        return None

    def check_field_access(
        self, expr: ast.FieldAccess, cls: ast.ClassDecl, scope: _Scope, static: bool
    ) -> ast.MiniType:
        owner = self._class_receiver(expr.receiver, scope)
        if owner is not None:
            self.info.class_refs.add(expr.receiver.nid)
            self.info.expr_types[expr.receiver.nid] = ast.ANY
            fld = self._field_of(owner, expr.name)
            if fld is None:
                self.error(
                    expr, UNRESOLVED_SYMBOL, f"cannot find symbol '{expr.name}'"
                )
                return self.record(expr, ast.ANY)
            if not fld.static:
                self.error(
                    expr,
                    TYPE_MISMATCH,
                    f"instance field '{expr.name}' accessed via class name",
                )
            self.info.field_refs[expr.nid] = (owner.name, expr.name)
            return self.record(expr, fld.decl_type)
        recv_t = self.check_expr(expr.receiver, cls, scope, static)
        if isinstance(recv_t, ast.ClassType):
            target_cls = self.by_name.get(recv_t.name)
            fld = self._field_of(target_cls, expr.name) if target_cls else None
            if fld is None:
                self.error(
                    expr, UNRESOLVED_SYMBOL, f"cannot find symbol '{expr.name}'"
                )
                return self.record(expr, ast.ANY)
            self.info.field_refs[expr.nid] = (recv_t.name, expr.name)
            return self.record(expr, fld.decl_type)
        if isinstance(recv_t, ast.AnyType):
            return self.record(expr, ast.ANY)
        self.error(
            expr, TYPE_MISMATCH, f"type {recv_t.render()} has no field '{expr.name}'"
        )
        return self.record(expr, ast.ANY)

    # ── calls ──────────────────────────────────────────────────────────────

    def check_call(
        self, expr: ast.Call, cls: ast.ClassDecl, scope: _Scope, static: bool
    ) -> ast.MiniType:
        arg_types = []
        if expr.receiver is None:
            arg_types = [self.check_expr(a, cls, scope, static) for a in expr.args]
            if any(m.name == expr.name for m in cls.methods):
                return self._resolve_method_call(expr, cls, arg_types, static, cls)
            if expr.name in BUILTIN_NAMES:
                return self._check_builtin(expr, arg_types)
            self.error(expr, UNRESOLVED_SYMBOL, f"cannot find symbol '{expr.name}'")
            return self.record(expr, ast.ANY)
        owner = self._class_receiver(expr.receiver, scope)
        if owner is not None:
            self.info.class_refs.add(expr.receiver.nid)
            self.info.expr_types[expr.receiver.nid] = ast.ANY
            arg_types = [self.check_expr(a, cls, scope, static) for a in expr.args]
            return self._resolve_method_call(
                expr, owner, arg_types, static=True, caller_cls=cls, via_class_name=True
            )
        recv_t = self.check_expr(expr.receiver, cls, scope, static)
        arg_types = [self.check_expr(a, cls, scope, static) for a in expr.args]
        if isinstance(recv_t, ast.ClassType):
            target_cls = self.by_name.get(recv_t.name)
            if target_cls is None:
                return self.record(expr, ast.ANY)
            return self._resolve_method_call(expr, target_cls, arg_types, False, cls)
        if isinstance(recv_t, ast.AnyType):
            return self.record(expr, ast.ANY)
        self.error(
            expr, TYPE_MISMATCH, f"type {recv_t.render()} has no method '{expr.name}'"
        )
        return self.record(expr, ast.ANY)

    def _resolve_method_call(
        self,
        expr: ast.Call,
        target_cls: ast.ClassDecl,
        arg_types: list[ast.MiniType],
        static: bool,
        caller_cls: ast.ClassDecl,
        via_class_name: bool = False,
    ) -> ast.MiniType:
        candidates = [m for m in target_cls.methods if m.name == expr.name]
        if not candidates:
            self.error(expr, UNRESOLVED_SYMBOL, f"cannot find symbol '{expr.name}'")
            return self.record(expr, ast.ANY)
        viable = []
        for m in candidates:
            if len(m.params) != len(arg_types):
                continue
            if all(
                ast.types_compatible(a, p.decl_type)
                for a, p in zip(arg_types, m.params)
            ):
                viable.append(m)
        if not viable:
            rendered = ", ".join(t.render() for t in arg_types)
            self.error(
                expr,
                TYPE_MISMATCH,
                f"no overload of '{expr.name}' accepts ({rendered})",
            )
            return self.record(expr, ast.ANY)
        target = viable[0]  # overloads have distinct types; ties only via ANY args
        if via_class_name and not target.static:
            self.error(
                expr,
                TYPE_MISMATCH,
                f"instance method '{expr.name}' called via class name",
            )
        if expr.receiver is None and static and not target.static:
            self.error(
                expr,
                TYPE_MISMATCH,
                f"instance method '{expr.name}' called from a static context",
            )
        ref = ast.MethodRef.of(target_cls.name, target)
        self.info.call_targets[expr.nid] = CallTarget("method", expr.name, ref)
        return self.record(expr, target.return_type)

    def _check_builtin(self, expr: ast.Call, arg_types: list[ast.MiniType]) -> ast.MiniType:
        name = expr.name
        self.info.call_targets[expr.nid] = CallTarget("builtin", name)

        def fail(msg: str) -> ast.MiniType:
            self.error(expr, TYPE_MISMATCH, msg)
            return self.record(expr, ast.ANY)

        def want_arity(k: int) -> bool:
            if len(arg_types) != k:
                fail(f"builtin '{name}' expects {k} argument(s)")
                return False
            return True

        if name == "print":
            if want_arity(1):
                return self.record(expr, ast.UNIT)
            return self.record(expr, ast.UNIT)
        if name == "length":
            if want_arity(1):
                t = arg_types[0]
                if not (
                    isinstance(t, (ast.ListType, ast.AnyType)) or t == ast.STRING
                ):
                    return fail("builtin 'length' expects a string or list")
            return self.record(expr, ast.INT)
        if name == "charAt":
            if want_arity(2):
                if not ast.types_compatible(arg_types[0], ast.STRING):
                    return fail("builtin 'charAt' expects (string, int)")
                if not ast.types_compatible(arg_types[1], ast.INT):
                    return fail("builtin 'charAt' expects (string, int)")
            return self.record(expr, ast.STRING)
        if name == "indexOf":
            if want_arity(2):
                if not ast.types_compatible(
                    arg_types[0], ast.STRING
                ) or not ast.types_compatible(arg_types[1], ast.STRING):
                    return fail("builtin 'indexOf' expects (string, string)")
            return self.record(expr, ast.INT)
        if name == "substring":
            if want_arity(3):
                ok = ast.types_compatible(arg_types[0], ast.STRING) and all(
                    ast.types_compatible(t, ast.INT) for t in arg_types[1:]
                )
                if not ok:
                    return fail("builtin 'substring' expects (string, int, int)")
            return self.record(expr, ast.STRING)
        if name in ("append", "contains"):
            ret: ast.MiniType
            if want_arity(2):
                seq_t, elem_t = arg_types
                if isinstance(seq_t, ast.ListType):
                    if not ast.types_compatible(elem_t, seq_t.elem):
                        return fail(f"builtin '{name}' element type mismatch")
                    ret = seq_t if name == "append" else ast.BOOL
                elif isinstance(seq_t, ast.AnyType):
                    ret = (
                        ast.ListType(elem_t)
                        if name == "append" and not isinstance(elem_t, ast.AnyType)
                        else (ast.ANY if name == "append" else ast.BOOL)
                    )
                else:
                    return fail(f"builtin '{name}' expects a list first argument")
                return self.record(expr, ret)
            return self.record(expr, ast.ANY if name == "append" else ast.BOOL)
        if name in ("assertEquals", "assertNotEquals"):
            if want_arity(2):
                if not ast.types_compatible(arg_types[0], arg_types[1]):
                    return fail(
                        f"builtin '{name}' arguments have incomparable types "
                        f"({arg_types[0].render()} vs {arg_types[1].render()})"
                    )
            return self.record(expr, ast.UNIT)
        if name in ("assertTrue", "assertFalse"):
            if want_arity(1):
                if not ast.types_compatible(arg_types[0], ast.BOOL):
                    return fail(f"builtin '{name}' expects bool")
            return self.record(expr, ast.UNIT)
        raise AssertionError(f"unhandled builtin {name}")

    def check_binary(
        self, expr: ast.Binary, cls: ast.ClassDecl, scope: _Scope, static: bool
    ) -> ast.MiniType:
        lt = self.check_expr(expr.lhs, cls, scope, static)
        rt = self.check_expr(expr.rhs, cls, scope, static)
        op = expr.op
        if op == "+":
            if ast.types_compatible(lt, ast.STRING) and ast.types_compatible(
                rt, ast.STRING
            ):
                if lt == ast.STRING or rt == ast.STRING:
                    return self.record(expr, ast.STRING)
            if ast.types_compatible(lt, ast.INT) and ast.types_compatible(rt, ast.INT):
                return self.record(expr, ast.INT)
            self.error(
                expr, TYPE_MISMATCH, "operator '+' expects two ints or two strings"
            )
            return self.record(expr, ast.ANY)
        if op in ("-", "*", "/", "%"):
            if not (
                ast.types_compatible(lt, ast.INT) and ast.types_compatible(rt, ast.INT)
            ):
                self.error(expr, TYPE_MISMATCH, f"operator '{op}' expects ints")
            return self.record(expr, ast.INT)
        if op in ("<", "<=", ">", ">="):
            if not (
                ast.types_compatible(lt, ast.INT) and ast.types_compatible(rt, ast.INT)
            ):
                self.error(expr, TYPE_MISMATCH, f"operator '{op}' expects ints")
            return self.record(expr, ast.BOOL)
        if op in ("==", "!="):
            if not ast.types_compatible(lt, rt):
                self.error(
                    expr,
                    TYPE_MISMATCH,
                    f"operator '{op}' on incomparable types "
                    f"({lt.render()} vs {rt.render()})",
                )
            return self.record(expr, ast.BOOL)
        if op in ("&&", "||"):
            if not (
                ast.types_compatible(lt, ast.BOOL)
                and ast.types_compatible(rt, ast.BOOL)
            ):
                self.error(expr, TYPE_MISMATCH, f"operator '{op}' expects bools")
            return self.record(expr, ast.BOOL)
        raise AssertionError(f"unhandled operator {op}")


def typecheck(classes: list[ast.ClassDecl]) -> tuple[TypeInfo, DiagnosticList]:
    return _Checker(classes).check()
