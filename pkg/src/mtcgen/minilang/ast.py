"""AST and type representations for the Mini language.

Mini is a small Java-like language: programs are sets of classes holding
fields and methods, with `@Test`-annotated methods marking test cases.
Value types are int, bool, string, and list<T>; user classes are reference
types. Strings and lists are immutable values with deep equality; class
instances are mutable references.

Every AST node carries a numeric node id (`nid`) and a source `Span`.
Node ids are assigned sequentially by the parser and stay stable for the
lifetime of a Program, which is what the mutation engine uses to address
individual nodes. Structural equality (`ast_equal`) ignores ids and spans.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields
from typing import Iterator, Optional, Union


# ── Source locations ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Span:
    """Source position; line/col are 1-indexed, line 0 means synthetic."""

    path: str
    line: int
    col: int


SYNTHETIC = Span("<synthetic>", 0, 0)


# ── Types ─────────────────────────────────────────────────────────────────────


class MiniType:
    """Base for Mini types. Concrete types are singletons or frozen composites."""

    def render(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class PrimType(MiniType):
    name: str  # "int" | "bool" | "string" | "unit"

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class ListType(MiniType):
    elem: MiniType

    def render(self) -> str:
        return f"list<{self.elem.render()}>"


@dataclass(frozen=True)
class ClassType(MiniType):
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class AnyType(MiniType):
    """Checker-internal wildcard: the type of `[]` and of error recovery."""

    def render(self) -> str:
        return "any"


INT = PrimType("int")
BOOL = PrimType("bool")
STRING = PrimType("string")
UNIT = PrimType("unit")
ANY = AnyType()


def types_compatible(a: MiniType, b: MiniType) -> bool:
    """Type compatibility with the ANY wildcard; list types match recursively."""
    if isinstance(a, AnyType) or isinstance(b, AnyType):
        return True
    if isinstance(a, ListType) and isinstance(b, ListType):
        return types_compatible(a.elem, b.elem)
    return a == b


# ── AST nodes ─────────────────────────────────────────────────────────────────
#
# eq=False everywhere: node identity matters for annotation tables keyed by
# nid; structural comparison goes through ast_equal().


@dataclass(eq=False)
class Node:
    nid: int = field(default=-1, kw_only=True)
    span: Span = field(default=SYNTHETIC, kw_only=True)


class Expr(Node):
    pass


class Stmt(Node):
    pass


@dataclass(eq=False)
class IntLit(Expr):
    value: int


@dataclass(eq=False)
class BoolLit(Expr):
    value: bool


@dataclass(eq=False)
class StringLit(Expr):
    value: str


@dataclass(eq=False)
class ListLit(Expr):
    elements: list[Expr]


@dataclass(eq=False)
class Name(Expr):
    ident: str


@dataclass(eq=False)
class FieldAccess(Expr):
    receiver: Expr  # a Name may denote a class (static access); checker decides
    name: str


@dataclass(eq=False)
class Call(Expr):
    receiver: Optional[Expr]  # None = unqualified (builtin or own-class method)
    name: str
    args: list[Expr]


@dataclass(eq=False)
class New(Expr):
    class_name: str
    args: list[Expr]


@dataclass(eq=False)
class Index(Expr):
    seq: Expr
    index: Expr


@dataclass(eq=False)
class Unary(Expr):
    op: str  # "!"
    operand: Expr


@dataclass(eq=False)
class Binary(Expr):
    op: str  # + - * / % == != < <= > >= && ||
    lhs: Expr
    rhs: Expr


@dataclass(eq=False)
class Block(Node):
    stmts: list[Stmt]


@dataclass(eq=False)
class VarDecl(Stmt):
    decl_type: MiniType
    name: str
    init: Expr


@dataclass(eq=False)
class Assign(Stmt):
    target: Expr  # Name or FieldAccess
    value: Expr


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Block]


@dataclass(eq=False)
class While(Stmt):
    cond: Expr
    body: Block


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr]


@dataclass(eq=False)
class Throw(Stmt):
    value: Expr


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=False)
class Param(Node):
    name: str
    decl_type: MiniType


@dataclass(eq=False)
class FieldDecl(Node):
    name: str
    decl_type: MiniType
    static: bool
    init: Optional[Expr]


@dataclass(eq=False)
class MethodDecl(Node):
    name: str
    params: list[Param]
    return_type: MiniType  # UNIT for void
    static: bool
    annotations: tuple[str, ...]  # e.g. ("Test",), declaration order
    body: Block

    def param_types(self) -> tuple[MiniType, ...]:
        return tuple(p.decl_type for p in self.params)

    def is_test(self) -> bool:
        return "Test" in self.annotations


@dataclass(eq=False)
class ClassDecl(Node):
    name: str
    fields: list[FieldDecl]
    methods: list[MethodDecl]


# ── Method references ─────────────────────────────────────────────────────────


@dataclass(frozen=True, order=True)
class MethodRef:
    """Identity of a method: container class, name, and parameter types."""

    class_name: str
    name: str
    param_types: tuple[str, ...]  # rendered type names, for hashability

    def render(self) -> str:
        return f"{self.class_name}.{self.name}({','.join(self.param_types)})"

    @staticmethod
    def of(class_name: str, method: MethodDecl) -> "MethodRef":
        return MethodRef(
            class_name, method.name, tuple(t.render() for t in method.param_types())
        )


BUILTIN_CLASS = "<builtin>"
UNRESOLVED_CLASS = "<unresolved>"
CTOR_NAME = "<init>"


# ── Generic traversal and structural equality ─────────────────────────────────


def child_nodes(node: Node) -> Iterator[Node]:
    for f in dc_fields(node):
        if f.name in ("nid", "span"):
            continue
        value = getattr(node, f.name)
        if isinstance(value, Node):
            yield value
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, Node):
                    yield item


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal of the subtree rooted at node (inclusive)."""
    yield node
    for child in child_nodes(node):
        yield from walk(child)


def ast_equal(a: object, b: object) -> bool:
    """Structural equality ignoring node ids and spans."""
    if isinstance(a, Node) and isinstance(b, Node):
        if type(a) is not type(b):
            return False
        for f in dc_fields(a):
            if f.name in ("nid", "span"):
                continue
            if not ast_equal(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    return a == b


def assign_ids(root: Node, start: int = 0) -> int:
    """Renumber all node ids in the subtree; returns the next free id."""
    nid = start
    for node in walk(root):
        node.nid = nid
        nid += 1
    return nid


# ── Program ───────────────────────────────────────────────────────────────────


@dataclass(eq=False)
class Program:
    """A checked set of classes. Treated as immutable after construction."""

    classes: list[ClassDecl]
    paths: tuple[str, ...] = ()
    type_info: Optional["object"] = None  # TypeInfo, set by the checker

    def class_named(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def method_decl(self, ref: MethodRef) -> Optional[MethodDecl]:
        cls = self.class_named(ref.class_name)
        if cls is None:
            return None
        for m in cls.methods:
            if m.name == ref.name and MethodRef.of(cls.name, m) == ref:
                return m
        return None

    def methods_named(self, class_name: str, name: str) -> list[MethodDecl]:
        cls = self.class_named(class_name)
        if cls is None:
            return []
        return [m for m in cls.methods if m.name == name]

    def all_method_refs(self) -> list[MethodRef]:
        refs = []
        for c in self.classes:
            for m in c.methods:
                refs.append(MethodRef.of(c.name, m))
        return refs


ExprOrStmt = Union[Expr, Stmt]
