"""Tree-walking interpreter and test runner for the Mini language.

Values are immutable Python values: int, bool, str, tuple (lists), plus
mutable Instance objects for class types and None for a never-assigned
class-typed field. Arithmetic is Java-style: division and remainder
truncate toward zero and raise a runtime error on a zero divisor.

Each @Test method executes in isolation: static fields are re-initialized
and a fresh instance of the test class is created, so the outcome map is
independent of test ordering. There is no ambient nondeterminism: no
clock, no randomness builtin; a wall-clock limit exists only as a guard
and is classified as TIMEOUT together with the step limit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import ast
from .diagnostics import DiagnosticList
from .printer import print_class
from .typecheck import TypeInfo, typecheck

PASS = "PASS"
ASSERT_FAIL = "ASSERT_FAIL"
RUNTIME_ERROR = "RUNTIME_ERROR"
TIMEOUT = "TIMEOUT"
COMPILE_ERROR = "COMPILE_ERROR"

CLASS_LEVEL_KEY = "<class>"

# Test-class node ids live far above any program's id space so that a merged
# TypeInfo never collides.
TEST_NID_BASE = 10_000_000


@dataclass(frozen=True)
class Limits:
    max_steps: int = 1_000_000
    per_test_timeout: float = 2.0  # seconds, wall clock


@dataclass(frozen=True)
class TestOutcome:
    kind: str
    message: str = ""
    failed_assertion: int | None = None  # node id of the violated assertion


@dataclass
class TestClass:
    """A parsed test class: a Mini class with one or more @Test methods."""

    __test__ = False  # not a pytest class

    decl: ast.ClassDecl
    source: str
    path: str | None = None

    @staticmethod
    def from_decl(decl: ast.ClassDecl, path: str | None = None) -> "TestClass":
        ast.assign_ids(decl, TEST_NID_BASE)
        return TestClass(decl, print_class(decl), path)

    def test_methods(self) -> list[ast.MethodDecl]:
        return [m for m in self.decl.methods if m.is_test()]


class Instance:
    __slots__ = ("class_name", "fields")

    def __init__(self, class_name: str, fields: dict[str, object]):
        self.class_name = class_name
        self.fields = fields

    def __repr__(self) -> str:
        return f"<{self.class_name}>"


class _Return(Exception):
    def __init__(self, value: object):
        self.value = value


class _Raised(Exception):
    """A Mini-level failure; `kind` selects the TestOutcome classification."""

    def __init__(self, kind: str, message: str, nid: int | None = None):
        self.kind = kind
        self.message = message
        self.nid = nid


def render_value(value: object) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, tuple):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, Instance):
        return repr(value)
    if value is UNIT_VALUE:
        return "unit"
    return repr(value)


class _Unit:
    def __repr__(self) -> str:
        return "unit"


UNIT_VALUE = _Unit()


def default_value(t: ast.MiniType) -> object:
    if t == ast.INT:
        return 0
    if t == ast.BOOL:
        return False
    if t == ast.STRING:
        return ""
    if isinstance(t, ast.ListType) or isinstance(t, ast.AnyType):
        return ()
    return None  # class types start null


class Interpreter:
    def __init__(
        self,
        classes: list[ast.ClassDecl],
        info: TypeInfo,
        limits: Limits,
    ):
        self.classes = {c.name: c for c in classes}
        self.info = info
        self.limits = limits
        self.steps = 0
        self.deadline = 0.0
        self.statics: dict[tuple[str, str], object] = {}
        self.printed: list[str] = []

    # ── bookkeeping ────────────────────────────────────────────────────────

    def reset_for_test(self) -> None:
        self.steps = 0
        self.deadline = time.monotonic() + self.limits.per_test_timeout
        self.printed = []
        self.statics = {}
        for cls in self.classes.values():
            for fld in cls.fields:
                if not fld.static:
                    continue
                if fld.init is not None:
                    value = self.eval_expr(fld.init, None, [{}])
                else:
                    value = default_value(fld.decl_type)
                self.statics[(cls.name, fld.name)] = value

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _Raised(TIMEOUT, f"step limit of {self.limits.max_steps} exceeded")
        if self.steps % 2048 == 0 and time.monotonic() > self.deadline:
            raise _Raised(TIMEOUT, "wall-clock limit exceeded")

    # ── test driving ───────────────────────────────────────────────────────

    def run_test_method(self, test_cls: ast.ClassDecl, method: ast.MethodDecl) -> TestOutcome:
        try:
            self.reset_for_test()
            receiver = None if method.static else self.instantiate(test_cls.name)
            self.invoke(test_cls.name, method, receiver, [])
            return TestOutcome(PASS)
        except _Raised as e:
            return TestOutcome(e.kind, e.message, e.nid)
        except RecursionError:
            return TestOutcome(RUNTIME_ERROR, "call stack exhausted")

    def instantiate(self, class_name: str) -> Instance:
        cls = self.classes[class_name]
        fields: dict[str, object] = {}
        for fld in cls.fields:
            if fld.static:
                continue
            if fld.init is not None:
                fields[fld.name] = self.eval_expr(fld.init, None, [{}])
            else:
                fields[fld.name] = default_value(fld.decl_type)
        return Instance(class_name, fields)

    def invoke(
        self,
        class_name: str,
        method: ast.MethodDecl,
        receiver: Instance | None,
        args: list[object],
    ) -> object:
        frame: dict[str, object] = {}
        for param, value in zip(method.params, args):
            frame[param.name] = value
        try:
            self.exec_block(method.body, receiver, class_name, [frame])
        except _Return as r:
            return r.value
        if method.return_type != ast.UNIT:
            raise _Raised(
                RUNTIME_ERROR,
                f"method '{method.name}' finished without returning a value",
            )
        return UNIT_VALUE

    # ── statements ─────────────────────────────────────────────────────────

    def exec_block(
        self,
        block: ast.Block,
        receiver: Instance | None,
        class_name: str | None,
        env: list[dict[str, object]],
    ) -> None:
        env.append({})
        try:
            for stmt in block.stmts:
                self.exec_stmt(stmt, receiver, class_name, env)
        finally:
            env.pop()

    def exec_stmt(
        self,
        stmt: ast.Stmt,
        receiver: Instance | None,
        class_name: str | None,
        env: list[dict[str, object]],
    ) -> None:
        self.tick()
        if isinstance(stmt, ast.VarDecl):
            env[-1][stmt.name] = self.eval_expr(stmt.init, receiver, env, class_name)
        elif isinstance(stmt, ast.Assign):
            value = self.eval_expr(stmt.value, receiver, env, class_name)
            self.assign(stmt.target, value, receiver, class_name, env)
        elif isinstance(stmt, ast.If):
            cond = self.eval_expr(stmt.cond, receiver, env, class_name)
            if cond is True:
                self.exec_block(stmt.then, receiver, class_name, env)
            elif stmt.orelse is not None:
                self.exec_block(stmt.orelse, receiver, class_name, env)
        elif isinstance(stmt, ast.While):
            while True:
                self.tick()
                cond = self.eval_expr(stmt.cond, receiver, env, class_name)
                if cond is not True:
                    break
                self.exec_block(stmt.body, receiver, class_name, env)
        elif isinstance(stmt, ast.Return):
            if stmt.value is None:
                raise _Return(UNIT_VALUE)
            raise _Return(self.eval_expr(stmt.value, receiver, env, class_name))
        elif isinstance(stmt, ast.Throw):
            message = self.eval_expr(stmt.value, receiver, env, class_name)
            raise _Raised(RUNTIME_ERROR, f"uncaught exception: {message}", stmt.nid)
        elif isinstance(stmt, ast.ExprStmt):
            self.eval_expr(stmt.expr, receiver, env, class_name)
        else:
            raise TypeError(f"unexpected statement {type(stmt).__name__}")

    def assign(
        self,
        target: ast.Expr,
        value: object,
        receiver: Instance | None,
        class_name: str | None,
        env: list[dict[str, object]],
    ) -> None:
        if isinstance(target, ast.Name):
            for layer in reversed(env):
                if target.ident in layer:
                    layer[target.ident] = value
                    return
            owner = self.info.field_refs.get(target.nid)
            if owner is not None:
                self.store_field_by_ref(owner, receiver, value, target.nid)
                return
            raise _Raised(RUNTIME_ERROR, f"unbound variable '{target.ident}'", target.nid)
        if isinstance(target, ast.FieldAccess):
            owner = self.info.field_refs.get(target.nid)
            if owner is None:
                raise _Raised(RUNTIME_ERROR, f"unresolved field '{target.name}'", target.nid)
            if target.receiver.nid in self.info.class_refs:
                self.statics[owner] = value
                return
            obj = self.eval_expr(target.receiver, receiver, env, class_name)
            if obj is None:
                raise _Raised(
                    RUNTIME_ERROR, f"null field access '{target.name}'", target.nid
                )
            assert isinstance(obj, Instance)
            obj.fields[target.name] = value
            return
        raise _Raised(RUNTIME_ERROR, "bad assignment target", target.nid)

    def store_field_by_ref(
        self,
        owner: tuple[str, str],
        receiver: Instance | None,
        value: object,
        nid: int,
    ) -> None:
        owner_class, field_name = owner
        cls = self.classes[owner_class]
        fld = next(f for f in cls.fields if f.name == field_name)
        if fld.static:
            self.statics[owner] = value
        else:
            if receiver is None:
                raise _Raised(RUNTIME_ERROR, f"no instance for field '{field_name}'", nid)
            receiver.fields[field_name] = value

    # ── expressions ────────────────────────────────────────────────────────

    def eval_expr(
        self,
        expr: ast.Expr,
        receiver: Instance | None,
        env: list[dict[str, object]],
        class_name: str | None = None,
    ) -> object:
        self.tick()
        if isinstance(expr, ast.IntLit):
            return expr.value
        if isinstance(expr, ast.BoolLit):
            return expr.value
        if isinstance(expr, ast.StringLit):
            return expr.value
        if isinstance(expr, ast.ListLit):
            return tuple(
                self.eval_expr(e, receiver, env, class_name) for e in expr.elements
            )
        if isinstance(expr, ast.Name):
            for layer in reversed(env):
                if expr.ident in layer:
                    return layer[expr.ident]
            owner = self.info.field_refs.get(expr.nid)
            if owner is not None:
                return self.load_field_by_ref(owner, receiver, expr.nid)
            raise _Raised(RUNTIME_ERROR, f"unbound variable '{expr.ident}'", expr.nid)
        if isinstance(expr, ast.FieldAccess):
            owner = self.info.field_refs.get(expr.nid)
            if owner is None:
                raise _Raised(RUNTIME_ERROR, f"unresolved field '{expr.name}'", expr.nid)
            if expr.receiver.nid in self.info.class_refs:
                return self.statics[owner]
            obj = self.eval_expr(expr.receiver, receiver, env, class_name)
            if obj is None:
                raise _Raised(
                    RUNTIME_ERROR, f"null field access '{expr.name}'", expr.nid
                )
            assert isinstance(obj, Instance)
            return obj.fields[expr.name]
        if isinstance(expr, ast.Call):
            return self.eval_call(expr, receiver, env, class_name)
        if isinstance(expr, ast.New):
            return self.instantiate(expr.class_name)
        if isinstance(expr, ast.Index):
            seq = self.eval_expr(expr.seq, receiver, env, class_name)
            idx = self.eval_expr(expr.index, receiver, env, class_name)
            if not isinstance(seq, tuple) or not isinstance(idx, int):
                raise _Raised(RUNTIME_ERROR, "indexing a non-list value", expr.nid)
            if idx < 0 or idx >= len(seq):
                raise _Raised(
                    RUNTIME_ERROR,
                    f"list index {idx} out of bounds for length {len(seq)}",
                    expr.nid,
                )
            return seq[idx]
        if isinstance(expr, ast.Unary):
            value = self.eval_expr(expr.operand, receiver, env, class_name)
            return not value
        if isinstance(expr, ast.Binary):
            return self.eval_binary(expr, receiver, env, class_name)
        raise TypeError(f"unexpected expression {type(expr).__name__}")

    def load_field_by_ref(
        self, owner: tuple[str, str], receiver: Instance | None, nid: int
    ) -> object:
        owner_class, field_name = owner
        cls = self.classes[owner_class]
        fld = next(f for f in cls.fields if f.name == field_name)
        if fld.static:
            return self.statics[owner]
        if receiver is None:
            raise _Raised(RUNTIME_ERROR, f"no instance for field '{field_name}'", nid)
        return receiver.fields[field_name]

    def eval_binary(
        self,
        expr: ast.Binary,
        receiver: Instance | None,
        env: list[dict[str, object]],
        class_name: str | None,
    ) -> object:
        op = expr.op
        if op == "&&":
            left = self.eval_expr(expr.lhs, receiver, env, class_name)
            if left is not True:
                return False
            return self.eval_expr(expr.rhs, receiver, env, class_name) is True
        if op == "||":
            left = self.eval_expr(expr.lhs, receiver, env, class_name)
            if left is True:
                return True
            return self.eval_expr(expr.rhs, receiver, env, class_name) is True
        left = self.eval_expr(expr.lhs, receiver, env, class_name)
        right = self.eval_expr(expr.rhs, receiver, env, class_name)
        if op == "==":
            return self.values_equal(left, right)
        if op == "!=":
            return not self.values_equal(left, right)
        if op == "+":
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            if (
                isinstance(left, int)
                and isinstance(right, int)
                and not isinstance(left, bool)
                and not isinstance(right, bool)
            ):
                return left + right
            raise _Raised(
                RUNTIME_ERROR,
                f"operator '+' on {render_value(left)} and {render_value(right)}",
                expr.nid,
            )
        # The empty-list wildcard can smuggle a non-int here; classify it.
        if not isinstance(left, int) or not isinstance(right, int):
            raise _Raised(
                RUNTIME_ERROR,
                f"operator '{op}' on {render_value(left)} and {render_value(right)}",
                expr.nid,
            )
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op in ("/", "%"):
            if right == 0:
                raise _Raised(RUNTIME_ERROR, "division by zero", expr.nid)
            quotient = abs(left) // abs(right)
            if (left < 0) != (right < 0):
                quotient = -quotient
            if op == "/":
                return quotient
            return left - right * quotient  # remainder carries the dividend's sign
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        raise AssertionError(f"unhandled operator {op}")

    @staticmethod
    def values_equal(a: object, b: object) -> bool:
        """Deep value equality; instances compare by reference."""
        if isinstance(a, Instance) or isinstance(b, Instance):
            return a is b
        if isinstance(a, bool) != isinstance(b, bool):
            return False  # bool and int are distinct Mini types
        return a == b

    # ── calls ──────────────────────────────────────────────────────────────

    def eval_call(
        self,
        expr: ast.Call,
        receiver: Instance | None,
        env: list[dict[str, object]],
        class_name: str | None,
    ) -> object:
        target = self.info.call_targets.get(expr.nid)
        if target is None:
            raise _Raised(RUNTIME_ERROR, f"unresolved call '{expr.name}'", expr.nid)
        if target.kind == "builtin":
            args = [self.eval_expr(a, receiver, env, class_name) for a in expr.args]
            return self.eval_builtin(expr, target.name, args)
        assert target.kind == "method" and target.ref is not None
        ref = target.ref
        method = self._lookup_method(ref)
        new_receiver: Instance | None = None
        if expr.receiver is not None and expr.receiver.nid not in self.info.class_refs:
            obj = self.eval_expr(expr.receiver, receiver, env, class_name)
            if not method.static:
                if obj is None:
                    raise _Raised(
                        RUNTIME_ERROR, f"null receiver for '{expr.name}'", expr.nid
                    )
                assert isinstance(obj, Instance)
                new_receiver = obj
        elif expr.receiver is None and not method.static:
            new_receiver = receiver  # implicit this
            if new_receiver is None:
                raise _Raised(
                    RUNTIME_ERROR, f"no instance for call '{expr.name}'", expr.nid
                )
        args = [self.eval_expr(a, receiver, env, class_name) for a in expr.args]
        return self.invoke(ref.class_name, method, new_receiver, args)

    def _lookup_method(self, ref: ast.MethodRef) -> ast.MethodDecl:
        cls = self.classes[ref.class_name]
        for m in cls.methods:
            if m.name == ref.name and ast.MethodRef.of(cls.name, m) == ref:
                return m
        raise AssertionError(f"checked call to missing method {ref.render()}")

    def eval_builtin(self, expr: ast.Call, name: str, args: list[object]) -> object:
        def shape(value: object, kinds: tuple[type, ...], what: str) -> None:
            # the empty-list wildcard can reach here with the wrong shape
            if not isinstance(value, kinds) or isinstance(value, bool):
                raise _Raised(
                    RUNTIME_ERROR,
                    f"builtin '{name}' expects {what}, got {render_value(value)}",
                    expr.nid,
                )

        if name == "print":
            self.printed.append(render_value(args[0]))
            return UNIT_VALUE
        if name == "length":
            value = args[0]
            shape(value, (str, tuple), "a string or list")
            return len(value)
        if name == "charAt":
            s, i = args
            shape(s, (str,), "a string")
            shape(i, (int,), "an int index")
            if i < 0 or i >= len(s):
                raise _Raised(
                    RUNTIME_ERROR,
                    f"charAt index {i} out of bounds for length {len(s)}",
                    expr.nid,
                )
            return s[i]
        if name == "indexOf":
            s, sub = args
            shape(s, (str,), "a string")
            shape(sub, (str,), "a string")
            return s.find(sub)
        if name == "substring":
            s, lo, hi = args
            shape(s, (str,), "a string")
            shape(lo, (int,), "an int bound")
            shape(hi, (int,), "an int bound")
            if lo < 0 or hi > len(s) or lo > hi:
                raise _Raised(
                    RUNTIME_ERROR,
                    f"substring bounds ({lo}, {hi}) invalid for length {len(s)}",
                    expr.nid,
                )
            return s[lo:hi]
        if name == "append":
            seq, item = args
            shape(seq, (tuple,), "a list")
            return seq + (item,)
        if name == "contains":
            seq, item = args
            shape(seq, (tuple,), "a list")
            return any(self.values_equal(v, item) for v in seq)
        if name == "assertEquals":
            a, b = args
            if not self.values_equal(a, b):
                raise _Raised(
                    ASSERT_FAIL,
                    f"assertEquals: {render_value(a)} != {render_value(b)}",
                    expr.nid,
                )
            return UNIT_VALUE
        if name == "assertNotEquals":
            a, b = args
            if self.values_equal(a, b):
                raise _Raised(
                    ASSERT_FAIL,
                    f"assertNotEquals: both sides are {render_value(a)}",
                    expr.nid,
                )
            return UNIT_VALUE
        if name == "assertTrue":
            if args[0] is not True:
                raise _Raised(ASSERT_FAIL, "assertTrue: condition is false", expr.nid)
            return UNIT_VALUE
        if name == "assertFalse":
            if args[0] is not False:
                raise _Raised(ASSERT_FAIL, "assertFalse: condition is true", expr.nid)
            return UNIT_VALUE
        raise AssertionError(f"unhandled builtin {name}")


def check_test_class(
    program: ast.Program, tests: TestClass
) -> tuple[TypeInfo | None, DiagnosticList]:
    """Type-check a test class against a program; None info on failure."""
    info, diags = typecheck(program.classes + [tests.decl])
    if diags:
        return None, diags
    return info, diags


def run_test_class(
    program: ast.Program,
    tests: TestClass,
    limits: Limits | None = None,
) -> dict[str, TestOutcome]:
    """Execute every @Test method of `tests` against `program` in isolation.

    On a class-level type error the map holds a single COMPILE_ERROR entry
    under CLASS_LEVEL_KEY; compile errors never attach to individual tests.
    """
    limits = limits or Limits()
    info, diags = check_test_class(program, tests)
    if info is None:
        return {
            CLASS_LEVEL_KEY: TestOutcome(COMPILE_ERROR, diags.render())
        }
    interp = Interpreter(program.classes + [tests.decl], info, limits)
    outcomes: dict[str, TestOutcome] = {}
    for method in tests.test_methods():
        outcomes[method.name] = interp.run_test_method(tests.decl, method)
    return outcomes
