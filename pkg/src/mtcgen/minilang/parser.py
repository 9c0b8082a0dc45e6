"""Recursive-descent parser for the Mini language.

`parse_classes` turns one source file into raw (unchecked) ClassDecls and
assigns node ids in parse order. The checked entry point `parse_program`
lives in the package root of minilang and combines parsing with type
checking; this module never type-checks.
"""

from __future__ import annotations

from . import ast
from .lexer import LexError, Token, tokenize


class ParseFailure(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(message)
        self.message = message
        self.line = line


class _Parser:
    def __init__(self, tokens: list[Token], path: str, next_id: int):
        self.tokens = tokens
        self.pos = 0
        self.path = path
        self.next_id = next_id

    # ── token helpers ──────────────────────────────────────────────────────

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise ParseFailure(
                f"expected {want!r} but found {tok.value or tok.kind!r}", tok.line
            )
        return self.take()

    def span(self, tok: Token) -> ast.Span:
        return ast.Span(self.path, tok.line, tok.col)

    def mk(self, node: ast.Node, tok: Token) -> ast.Node:
        node.nid = self.next_id
        self.next_id += 1
        node.span = self.span(tok)
        return node

    # ── types ──────────────────────────────────────────────────────────────

    def at_type_start(self) -> bool:
        tok = self.peek()
        return (tok.kind == "KEYWORD" and tok.value in ("int", "bool", "string", "list")) or (
            tok.kind == "IDENT"
        )

    def parse_type(self) -> ast.MiniType:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value in ("int", "bool", "string"):
            self.take()
            return {"int": ast.INT, "bool": ast.BOOL, "string": ast.STRING}[tok.value]
        if tok.kind == "KEYWORD" and tok.value == "list":
            self.take()
            self.expect("PUNCT", "<")
            elem = self.parse_type()
            self.expect("PUNCT", ">")
            return ast.ListType(elem)
        if tok.kind == "IDENT":
            self.take()
            return ast.ClassType(tok.value)
        raise ParseFailure(f"expected a type but found {tok.value!r}", tok.line)

    # ── declarations ───────────────────────────────────────────────────────

    def parse_file(self) -> list[ast.ClassDecl]:
        classes = []
        while not self.at("EOF"):
            classes.append(self.parse_class())
        return classes

    def parse_class(self) -> ast.ClassDecl:
        start = self.expect("KEYWORD", "class")
        name = self.expect("IDENT").value
        self.expect("PUNCT", "{")
        fields: list[ast.FieldDecl] = []
        methods: list[ast.MethodDecl] = []
        while not self.at("PUNCT", "}"):
            member = self.parse_member()
            if isinstance(member, ast.FieldDecl):
                fields.append(member)
            else:
                methods.append(member)
        self.expect("PUNCT", "}")
        return self.mk(ast.ClassDecl(name, fields, methods), start)

    def parse_member(self) -> ast.FieldDecl | ast.MethodDecl:
        start = self.peek()
        annotations: list[str] = []
        while self.at("PUNCT", "@"):
            self.take()
            annotations.append(self.expect("IDENT").value)
        static = False
        if self.at("KEYWORD", "static"):
            self.take()
            static = True
        if self.at("KEYWORD", "void"):
            self.take()
            return_type: ast.MiniType = ast.UNIT
            return self.parse_method_rest(start, annotations, static, return_type)
        decl_type = self.parse_type()
        name_tok = self.expect("IDENT")
        if self.at("PUNCT", "("):
            self.pos -= 1  # rewind the name; parse_method_rest re-reads it
            return self.parse_method_rest(start, annotations, static, decl_type)
        if annotations:
            raise ParseFailure("annotations are only allowed on methods", start.line)
        init = None
        if self.at("PUNCT", "="):
            self.take()
            init = self.parse_expr()
        self.expect("PUNCT", ";")
        return self.mk(ast.FieldDecl(name_tok.value, decl_type, static, init), start)

    def parse_method_rest(
        self,
        start: Token,
        annotations: list[str],
        static: bool,
        return_type: ast.MiniType,
    ) -> ast.MethodDecl:
        name = self.expect("IDENT").value
        self.expect("PUNCT", "(")
        params: list[ast.Param] = []
        if not self.at("PUNCT", ")"):
            while True:
                ptok = self.peek()
                ptype = self.parse_type()
                pname = self.expect("IDENT").value
                params.append(self.mk(ast.Param(pname, ptype), ptok))
                if self.at("PUNCT", ","):
                    self.take()
                    continue
                break
        self.expect("PUNCT", ")")
        body = self.parse_block()
        return self.mk(
            ast.MethodDecl(name, params, return_type, static, tuple(annotations), body),
            start,
        )

    # ── statements ─────────────────────────────────────────────────────────

    def parse_block(self) -> ast.Block:
        start = self.expect("PUNCT", "{")
        stmts: list[ast.Stmt] = []
        while not self.at("PUNCT", "}"):
            stmts.append(self.parse_stmt())
        self.expect("PUNCT", "}")
        return self.mk(ast.Block(stmts), start)

    def at_var_decl(self) -> bool:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value in ("int", "bool", "string", "list"):
            return True
        # `Ident Ident =` is a declaration with a class type; anything else
        # starting with an identifier is an expression or assignment.
        return tok.kind == "IDENT" and self.peek(1).kind == "IDENT"

    def parse_stmt(self) -> ast.Stmt:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value == "if":
                return self.parse_if()
            if tok.value == "while":
                self.take()
                self.expect("PUNCT", "(")
                cond = self.parse_expr()
                self.expect("PUNCT", ")")
                body = self.parse_block()
                return self.mk(ast.While(cond, body), tok)
            if tok.value == "return":
                self.take()
                value = None
                if not self.at("PUNCT", ";"):
                    value = self.parse_expr()
                self.expect("PUNCT", ";")
                return self.mk(ast.Return(value), tok)
            if tok.value == "throw":
                self.take()
                value = self.parse_expr()
                self.expect("PUNCT", ";")
                return self.mk(ast.Throw(value), tok)
        if self.at_var_decl():
            decl_type = self.parse_type()
            name = self.expect("IDENT").value
            self.expect("PUNCT", "=")
            init = self.parse_expr()
            self.expect("PUNCT", ";")
            return self.mk(ast.VarDecl(decl_type, name, init), tok)
        expr = self.parse_expr()
        if self.at("PUNCT", "="):
            if not isinstance(expr, (ast.Name, ast.FieldAccess)):
                raise ParseFailure(
                    "assignment target must be a variable or field", tok.line
                )
            self.take()
            value = self.parse_expr()
            self.expect("PUNCT", ";")
            return self.mk(ast.Assign(expr, value), tok)
        self.expect("PUNCT", ";")
        return self.mk(ast.ExprStmt(expr), tok)

    def parse_if(self) -> ast.If:
        tok = self.expect("KEYWORD", "if")
        self.expect("PUNCT", "(")
        cond = self.parse_expr()
        self.expect("PUNCT", ")")
        then = self.parse_block()
        orelse = None
        if self.at("KEYWORD", "else"):
            self.take()
            orelse = self.parse_block()
        return self.mk(ast.If(cond, then, orelse), tok)

    # ── expressions ────────────────────────────────────────────────────────

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def _binary_level(self, ops: tuple[str, ...], next_level) -> ast.Expr:
        left = next_level()
        while self.peek().kind == "PUNCT" and self.peek().value in ops:
            tok = self.take()
            right = next_level()
            left = self.mk(ast.Binary(tok.value, left, right), tok)
        return left

    def parse_or(self) -> ast.Expr:
        return self._binary_level(("||",), self.parse_and)

    def parse_and(self) -> ast.Expr:
        return self._binary_level(("&&",), self.parse_equality)

    def parse_equality(self) -> ast.Expr:
        return self._binary_level(("==", "!="), self.parse_relational)

    def parse_relational(self) -> ast.Expr:
        return self._binary_level(("<", "<=", ">", ">="), self.parse_additive)

    def parse_additive(self) -> ast.Expr:
        return self._binary_level(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self) -> ast.Expr:
        return self._binary_level(("*", "/", "%"), self.parse_unary)

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.value == "!":
            self.take()
            operand = self.parse_unary()
            return self.mk(ast.Unary("!", operand), tok)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        expr = self.parse_primary()
        while True:
            tok = self.peek()
            if self.at("PUNCT", "."):
                self.take()
                name = self.expect("IDENT").value
                if self.at("PUNCT", "("):
                    args = self.parse_args()
                    expr = self.mk(ast.Call(expr, name, args), tok)
                else:
                    expr = self.mk(ast.FieldAccess(expr, name), tok)
                continue
            if self.at("PUNCT", "["):
                self.take()
                index = self.parse_expr()
                self.expect("PUNCT", "]")
                expr = self.mk(ast.Index(expr, index), tok)
                continue
            break
        return expr

    def parse_args(self) -> list[ast.Expr]:
        self.expect("PUNCT", "(")
        args: list[ast.Expr] = []
        if not self.at("PUNCT", ")"):
            while True:
                args.append(self.parse_expr())
                if self.at("PUNCT", ","):
                    self.take()
                    continue
                break
        self.expect("PUNCT", ")")
        return args

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.take()
            return self.mk(ast.IntLit(int(tok.value)), tok)
        if tok.kind == "PUNCT" and tok.value == "-" and self.peek(1).kind == "INT":
            self.take()
            num = self.take()
            return self.mk(ast.IntLit(-int(num.value)), tok)
        if tok.kind == "STRING":
            self.take()
            return self.mk(ast.StringLit(tok.value), tok)
        if tok.kind == "KEYWORD" and tok.value in ("true", "false"):
            self.take()
            return self.mk(ast.BoolLit(tok.value == "true"), tok)
        if tok.kind == "KEYWORD" and tok.value == "new":
            self.take()
            name = self.expect("IDENT").value
            args = self.parse_args()
            return self.mk(ast.New(name, args), tok)
        if tok.kind == "PUNCT" and tok.value == "[":
            self.take()
            elements: list[ast.Expr] = []
            if not self.at("PUNCT", "]"):
                while True:
                    elements.append(self.parse_expr())
                    if self.at("PUNCT", ","):
                        self.take()
                        continue
                    break
            self.expect("PUNCT", "]")
            return self.mk(ast.ListLit(elements), tok)
        if tok.kind == "PUNCT" and tok.value == "(":
            self.take()
            expr = self.parse_expr()
            self.expect("PUNCT", ")")
            return expr  # parentheses are purely syntactic
        if tok.kind == "IDENT":
            self.take()
            if self.at("PUNCT", "("):
                args = self.parse_args()
                return self.mk(ast.Call(None, tok.value, args), tok)
            return self.mk(ast.Name(tok.value), tok)
        raise ParseFailure(f"unexpected token {tok.value or tok.kind!r}", tok.line)


def parse_classes(
    text: str, path: str = "<string>", next_id: int = 0
) -> tuple[list[ast.ClassDecl], int]:
    """Parse one source file into raw ClassDecls.

    Raises ParseFailure or LexError; callers that must not abort wrap these
    into diagnostics. Returns the decls and the next free node id.
    """
    try:
        tokens = tokenize(text)
    except LexError as e:
        raise ParseFailure(e.message, e.line) from e
    parser = _Parser(tokens, path, next_id)
    classes = parser.parse_file()
    return classes, parser.next_id
