"""Single-edit mutant generation over the bodies of a method pair.

Operators:
  AOR  swap an arithmetic operator within {+ - * / %}
  ROR  swap a relational operator within {== != < <= > >=}
  COR  swap a logical operator within {&& ||}
  LVR  replace a literal: int k -> k+1, k-1, 0; bool b -> !b; string s -> ""
  SDL  delete one assignment or expression statement

Candidate edits are enumerated in deterministic AST order (target method
body first, then the candidate method body, pre-order within each), then
filtered so every surviving mutant still type-checks, then capped by
seeded sampling that preserves enumeration order. Each mutant shares all
unchanged subtrees with the original program; node ids are preserved, so
`target_nid` addresses the same location in both trees.
"""

from __future__ import annotations

import difflib
import random
from dataclasses import dataclass
from dataclasses import fields as dc_fields

from .minilang import ast
from .minilang.ast import MethodRef, Program
from .minilang.printer import pretty_print, print_expr
from .minilang.typecheck import typecheck

AOR = "AOR"
ROR = "ROR"
COR = "COR"
LVR = "LVR"
SDL = "SDL"

_ARITH_OPS = ("+", "-", "*", "/", "%")
_REL_OPS = ("==", "!=", "<", "<=", ">", ">=")
_LOGIC_OPS = ("&&", "||")


@dataclass(frozen=True)
class Mutant:
    id: str
    operator: str
    target_nid: int
    method: MethodRef
    program: Program
    diff_token: tuple[str, str]  # (before, after) rendering


@dataclass(frozen=True)
class _Edit:
    operator: str
    target_nid: int
    method: MethodRef
    diff_token: tuple[str, str]
    replacement: ast.Node | None  # None = delete (SDL)


def _stmt_token(stmt: ast.Stmt) -> str:
    if isinstance(stmt, ast.Assign):
        return f"{print_expr(stmt.target)} = {print_expr(stmt.value)};"
    if isinstance(stmt, ast.ExprStmt):
        return f"{print_expr(stmt.expr)};"
    raise TypeError("SDL only applies to assignments and expression statements")


def _literal_replacements(node: ast.Expr) -> list[tuple[ast.Expr, str, str]]:
    out: list[tuple[ast.Expr, str, str]] = []
    if isinstance(node, ast.IntLit):
        seen: set[int] = set()
        for value in (node.value + 1, node.value - 1, 0):
            if value == node.value or value in seen:
                continue
            seen.add(value)
            out.append(
                (
                    ast.IntLit(value, nid=node.nid, span=node.span),
                    str(node.value),
                    str(value),
                )
            )
    elif isinstance(node, ast.BoolLit):
        flipped = not node.value
        out.append(
            (
                ast.BoolLit(flipped, nid=node.nid, span=node.span),
                "true" if node.value else "false",
                "true" if flipped else "false",
            )
        )
    elif isinstance(node, ast.StringLit):
        if node.value != "":
            out.append(
                (
                    ast.StringLit("", nid=node.nid, span=node.span),
                    print_expr(node),
                    '""',
                )
            )
    return out


def _enumerate_edits(method_ref: MethodRef, body: ast.Block) -> list[_Edit]:
    edits: list[_Edit] = []
    deletable_nids = {
        s.nid
        for node in ast.walk(body)
        if isinstance(node, ast.Block)
        for s in node.stmts
        if isinstance(s, (ast.Assign, ast.ExprStmt))
    }
    for node in ast.walk(body):
        if isinstance(node, ast.Binary):
            if node.op in _ARITH_OPS:
                operator, table = AOR, _ARITH_OPS
            elif node.op in _REL_OPS:
                operator, table = ROR, _REL_OPS
            elif node.op in _LOGIC_OPS:
                operator, table = COR, _LOGIC_OPS
            else:
                continue
            for new_op in table:
                if new_op == node.op:
                    continue
                replacement = ast.Binary(
                    new_op, node.lhs, node.rhs, nid=node.nid, span=node.span
                )
                edits.append(
                    _Edit(operator, node.nid, method_ref, (node.op, new_op), replacement)
                )
        elif isinstance(node, (ast.IntLit, ast.BoolLit, ast.StringLit)):
            for replacement, before, after in _literal_replacements(node):
                edits.append(
                    _Edit(LVR, node.nid, method_ref, (before, after), replacement)
                )
        if node.nid in deletable_nids:
            assert isinstance(node, ast.Stmt)
            edits.append(_Edit(SDL, node.nid, method_ref, (_stmt_token(node), ""), None))
    return edits


def _rebuild(node: ast.Node, target_nid: int, replacement: ast.Node | None) -> ast.Node:
    """Path-copy: nodes off the edited path are shared with the original."""
    changed = False
    new_values: dict[str, object] = {}
    for f in dc_fields(node):
        if f.name in ("nid", "span"):
            continue
        value = getattr(node, f.name)
        if isinstance(value, ast.Node):
            if value.nid == target_nid:
                assert replacement is not None, "cannot delete a non-list child"
                new_values[f.name] = replacement
                changed = True
            else:
                rebuilt = _rebuild(value, target_nid, replacement)
                new_values[f.name] = rebuilt
                changed = changed or rebuilt is not value
        elif isinstance(value, list):
            new_list: list[object] = []
            list_changed = False
            for item in value:
                if isinstance(item, ast.Node):
                    if item.nid == target_nid:
                        list_changed = True
                        if replacement is not None:
                            new_list.append(replacement)
                        continue
                    rebuilt = _rebuild(item, target_nid, replacement)
                    list_changed = list_changed or rebuilt is not item
                    new_list.append(rebuilt)
                else:
                    new_list.append(item)
            new_values[f.name] = new_list if list_changed else value
            changed = changed or list_changed
        else:
            new_values[f.name] = value
    if not changed:
        return node
    return type(node)(**new_values, nid=node.nid, span=node.span)


def _apply_edit(program: Program, edit: _Edit) -> Program | None:
    classes = [
        _rebuild(cls, edit.target_nid, edit.replacement) for cls in program.classes
    ]
    info, diags = typecheck(classes)  # discard edits that break typing
    if diags:
        return None
    return Program(classes, program.paths, info)


def generate_mutants(
    program: Program,
    pair: tuple[MethodRef, MethodRef],
    cap: int = 20,
    seed: int = 0,
) -> list[Mutant]:
    """All well-typed single-edit mutants of the pair's bodies, capped by
    seeded sampling. Empty bodies simply produce no mutants.
    """
    target, candidate = pair
    edits: list[_Edit] = []
    for ref in (target, candidate):
        decl = program.method_decl(ref)
        if decl is None:
            raise KeyError(ref.render())
        edits.extend(_enumerate_edits(ref, decl.body))
    applied: list[tuple[_Edit, Program]] = []
    for edit in edits:
        mutated = _apply_edit(program, edit)
        if mutated is not None:
            applied.append((edit, mutated))
    if len(applied) > cap:
        rng = random.Random(seed)
        keep = sorted(rng.sample(range(len(applied)), cap))
        applied = [applied[i] for i in keep]
    mutants: list[Mutant] = []
    for index, (edit, mutated) in enumerate(applied, start=1):
        mutants.append(
            Mutant(
                id=f"m{index:03d}",
                operator=edit.operator,
                target_nid=edit.target_nid,
                method=edit.method,
                program=mutated,
                diff_token=edit.diff_token,
            )
        )
    return mutants


def mutant_diff(original: Program, mutant: Mutant) -> str:
    """Unified diff of the pretty-printed sources."""
    before = pretty_print(original).splitlines(keepends=True)
    after = pretty_print(mutant.program).splitlines(keepends=True)
    return "".join(
        difflib.unified_diff(before, after, fromfile="original", tofile=mutant.id)
    )
