"""MR-skeleton extraction and L1/L2 similarity.

A skeleton is the normalized triple (input relation, method pair, output
relation) behind a metamorphic test: the first pair-method call in the
straight-line body is the source execution, the second is the follow-up,
the input relation is the chain of call names that turn source-rooted
values into follow-up inputs, and the output relation is the last
assertion whose operands' def-use chains reach at least two distinct
pair-method invocations, normalized into a comparable form
(boolean-wrapped comparisons become EQ/NE/ORDER_* kinds).

Role assignment for assertion operands follows the nearest root: a
variable's role comes from its latest binding event, so a value that
served as both source output and follow-up input classifies as the
latter. Custom equality helpers normalize to TRUE_PRED, not EQ.
"""

from __future__ import annotations

from dataclasses import dataclass

from .minilang import ast
from .minilang.ast import MethodRef, Program
from .minilang.interp import TestClass, check_test_class
from .minilang.typecheck import ASSERTION_BUILTINS, TypeInfo

SOURCE_INPUT = "SOURCE_INPUT"
SOURCE_OUTPUT = "SOURCE_OUTPUT"
FOLLOWUP_INPUT = "FOLLOWUP_INPUT"
FOLLOWUP_OUTPUT = "FOLLOWUP_OUTPUT"
CONSTANT = "CONSTANT"
OTHER = "OTHER"

EQ = "EQ"
NE = "NE"
TRUE_PRED = "TRUE_PRED"
FALSE_PRED = "FALSE_PRED"
ORDER_LT = "ORDER_LT"
ORDER_LE = "ORDER_LE"


class NotExtractable(Exception):
    def __init__(self, cause: str):
        super().__init__(cause)
        self.cause = cause


class NotAnAssertion(Exception):
    pass


@dataclass(frozen=True)
class MRSkeleton:
    method_pair: frozenset[MethodRef]
    input_relation: tuple[str, ...]
    assertion_kind: str
    assertion_elements: tuple[str, ...]  # multiset, sorted
    notes: tuple[str, ...] = ()  # metadata; never compared


@dataclass(frozen=True)
class SimilarityResult:
    l1: bool
    l2: bool
    mismatches: tuple[str, ...]


# ── assertion normalization ───────────────────────────────────────────────────


@dataclass(frozen=True)
class NormalizedAssertion:
    kind: str
    operands: tuple[ast.Expr, ...]


def _predicate_operands(expr: ast.Expr) -> tuple[ast.Expr, ...]:
    if isinstance(expr, ast.Call):
        if expr.receiver is not None:
            return (expr.receiver, *expr.args)
        return tuple(expr.args)
    return (expr,)


def normalize_assertion(call: ast.Call) -> NormalizedAssertion:
    """Rewrite an assertion builtin call into a comparable form."""
    if call.receiver is not None or call.name not in ASSERTION_BUILTINS:
        raise NotAnAssertion(call.name)
    if call.name == "assertEquals":
        return NormalizedAssertion(EQ, tuple(call.args))
    if call.name == "assertNotEquals":
        return NormalizedAssertion(NE, tuple(call.args))
    positive = call.name == "assertTrue"
    (pred,) = call.args
    if isinstance(pred, ast.Binary):
        if pred.op == "==":
            return NormalizedAssertion(EQ if positive else NE, (pred.lhs, pred.rhs))
        if pred.op == "!=":
            return NormalizedAssertion(NE if positive else EQ, (pred.lhs, pred.rhs))
        if positive and pred.op == "<":
            return NormalizedAssertion(ORDER_LT, (pred.lhs, pred.rhs))
        if positive and pred.op == "<=":
            return NormalizedAssertion(ORDER_LE, (pred.lhs, pred.rhs))
        if positive and pred.op == ">":
            return NormalizedAssertion(ORDER_LT, (pred.rhs, pred.lhs))
        if positive and pred.op == ">=":
            return NormalizedAssertion(ORDER_LE, (pred.rhs, pred.lhs))
    kind = TRUE_PRED if positive else FALSE_PRED
    return NormalizedAssertion(kind, _predicate_operands(pred))


def render_normalized(norm: NormalizedAssertion) -> ast.Call:
    """Canonical assertion form; normalizing it again is the identity."""
    if norm.kind == EQ:
        return ast.Call(None, "assertEquals", list(norm.operands))
    if norm.kind == NE:
        return ast.Call(None, "assertNotEquals", list(norm.operands))
    if norm.kind in (ORDER_LT, ORDER_LE):
        op = "<" if norm.kind == ORDER_LT else "<="
        lhs, rhs = norm.operands
        return ast.Call(None, "assertTrue", [ast.Binary(op, lhs, rhs)])
    name = "assertTrue" if norm.kind == TRUE_PRED else "assertFalse"
    if len(norm.operands) == 1:
        return ast.Call(None, name, [norm.operands[0]])
    # Multi-operand predicates came from a call; any call shape keeps the kind.
    return ast.Call(
        None, name, [ast.Call(norm.operands[0], "pred", list(norm.operands[1:]))]
    )


# ── symbolic role and taint tracking ──────────────────────────────────────────


@dataclass(frozen=True)
class _SymVal:
    role: str | None = None  # nearest-root role
    transforms: tuple[str, ...] = ()
    traced: bool = False  # reaches a SOURCE_* root
    taints: frozenset[int] = frozenset()  # pair invocation ordinals reached


class _RoleScan:
    def __init__(self, info: TypeInfo, pair_nids: set[int]):
        self.info = info
        self.pair_nids = pair_nids
        self.var_roles: dict[str, str] = {}
        self.var_transforms: dict[str, tuple[str, ...]] = {}
        self.var_traced: dict[str, bool] = {}
        self.var_taints: dict[str, frozenset[int]] = {}
        self.call_roles: dict[int, str] = {}
        self.pair_calls_seen = 0
        self.input_relation: list[str] = []
        self.notes: list[str] = []

    def bind(self, name: str, value: _SymVal) -> None:
        if value.role is not None and value.role != OTHER:
            self.var_roles[name] = value.role
        else:
            self.var_roles.pop(name, None)
        self.var_transforms[name] = value.transforms
        self.var_traced[name] = value.traced
        self.var_taints[name] = value.taints

    def _mark_arg_vars(self, expr: ast.Expr, role: str, order: int) -> None:
        """Mark variables feeding a pair call, without descending into a
        nested pair call (those contribute their value, not their inputs)."""
        if isinstance(expr, ast.Call) and expr.nid in self.pair_nids:
            return
        if isinstance(expr, ast.Name) and expr.nid not in self.info.class_refs:
            self.var_roles[expr.ident] = role
            self.var_traced[expr.ident] = True
            self.var_taints[expr.ident] = self.var_taints.get(
                expr.ident, frozenset()
            ) | {order}
            return
        for child in ast.child_nodes(expr):
            if isinstance(child, ast.Expr):
                self._mark_arg_vars(child, role, order)

    def eval(self, expr: ast.Expr) -> _SymVal:
        if isinstance(expr, (ast.IntLit, ast.BoolLit, ast.StringLit)):
            return _SymVal(role=CONSTANT)
        if isinstance(expr, ast.ListLit):
            return self._combine([self.eval(e) for e in expr.elements])
        if isinstance(expr, ast.Name):
            if expr.nid in self.info.class_refs:
                return _SymVal()
            return _SymVal(
                role=self.var_roles.get(expr.ident),
                transforms=self.var_transforms.get(expr.ident, ()),
                traced=self.var_traced.get(expr.ident, False),
                taints=self.var_taints.get(expr.ident, frozenset()),
            )
        if isinstance(expr, ast.FieldAccess):
            if expr.receiver.nid in self.info.class_refs:
                return _SymVal()
            return self.eval(expr.receiver)
        if isinstance(expr, ast.Call):
            parts = []
            if expr.receiver is not None and expr.receiver.nid not in self.info.class_refs:
                parts.append(self.eval(expr.receiver))
            arg_vals = [self.eval(a) for a in expr.args]
            parts.extend(arg_vals)
            if expr.nid in self.pair_nids:
                return self._apply_pair_call(expr, parts)
            combined = self._combine(parts)
            if combined.traced:
                return _SymVal(
                    role=combined.role,
                    transforms=combined.transforms + (expr.name,),
                    traced=True,
                    taints=combined.taints,
                )
            return combined
        if isinstance(expr, ast.New):
            return self._combine([self.eval(a) for a in expr.args])
        if isinstance(expr, ast.Index):
            return self._combine([self.eval(expr.seq), self.eval(expr.index)])
        if isinstance(expr, ast.Unary):
            return self.eval(expr.operand)
        if isinstance(expr, ast.Binary):
            return self._combine([self.eval(expr.lhs), self.eval(expr.rhs)])
        return _SymVal()

    @staticmethod
    def _combine(parts: list[_SymVal]) -> _SymVal:
        role = None
        transforms: tuple[str, ...] = ()
        traced = False
        taints: frozenset[int] = frozenset()
        for part in parts:
            if role is None and part.role not in (None, CONSTANT):
                role = part.role
            transforms = transforms + part.transforms
            traced = traced or part.traced
            taints = taints | part.taints
        if role is None and parts and all(p.role == CONSTANT for p in parts):
            role = CONSTANT
        return _SymVal(role=role, transforms=transforms, traced=traced, taints=taints)

    def _input_exprs(self, expr: ast.Call) -> list[ast.Expr]:
        """An invocation's inputs: its arguments plus a non-class receiver
        (state-interaction MRs carry the relation through the receiver)."""
        inputs: list[ast.Expr] = []
        if expr.receiver is not None and expr.receiver.nid not in self.info.class_refs:
            inputs.append(expr.receiver)
        inputs.extend(expr.args)
        return inputs

    def _apply_pair_call(self, expr: ast.Call, input_vals: list[_SymVal]) -> _SymVal:
        self.pair_calls_seen += 1
        order = self.pair_calls_seen
        input_taints: frozenset[int] = frozenset()
        for val in input_vals:
            input_taints = input_taints | val.taints
        if order == 1:
            self.call_roles[expr.nid] = SOURCE_OUTPUT
            for inp in self._input_exprs(expr):
                self._mark_arg_vars(inp, SOURCE_INPUT, order)
            return _SymVal(
                role=SOURCE_OUTPUT, traced=True, taints=input_taints | {order}
            )
        if order == 2:
            self.call_roles[expr.nid] = FOLLOWUP_OUTPUT
            for val in input_vals:
                if val.traced:
                    self.input_relation.extend(val.transforms)
            for inp in self._input_exprs(expr):
                self._mark_arg_vars(inp, FOLLOWUP_INPUT, order)
            return _SymVal(
                role=FOLLOWUP_OUTPUT, traced=True, taints=input_taints | {order}
            )
        self.notes.append(
            f"pair method invoked {order} times; invocations beyond the second are ignored"
        )
        self.call_roles[expr.nid] = OTHER
        return _SymVal(role=OTHER, taints=input_taints | {order})

    # classification never mutates state; roles are final when it runs
    def classify(self, expr: ast.Expr) -> str:
        if isinstance(expr, (ast.IntLit, ast.BoolLit, ast.StringLit)):
            return CONSTANT
        if isinstance(expr, ast.Name):
            if expr.nid in self.info.class_refs:
                return OTHER
            return self.var_roles.get(expr.ident, OTHER)
        if isinstance(expr, ast.Call) and expr.nid in self.call_roles:
            return self.call_roles[expr.nid]
        children = [c for c in ast.child_nodes(expr) if isinstance(c, ast.Expr)]
        if not children:
            return OTHER
        roles = [self.classify(c) for c in children]
        for role in roles:
            if role not in (OTHER, CONSTANT):
                return role
        if all(role == CONSTANT for role in roles):
            return CONSTANT
        return OTHER


# ── extraction ────────────────────────────────────────────────────────────────


def _pair_call_nids(
    body: ast.Block, info: TypeInfo, members: set[MethodRef]
) -> set[int]:
    nids = set()
    for node in ast.walk(body):
        if isinstance(node, ast.Call):
            target = info.call_targets.get(node.nid)
            if target is not None and target.kind == "method" and target.ref in members:
                nids.add(node.nid)
    return nids


def _branch_hides_pair_call(body: ast.Block, pair_nids: set[int]) -> bool:
    for stmt in body.stmts:
        for node in ast.walk(stmt):
            if isinstance(node, (ast.If, ast.While)):
                for inner in ast.walk(node):
                    if inner.nid in pair_nids:
                        return True
    return False


def extract_skeleton(
    test: TestClass,
    pair: tuple[MethodRef, MethodRef],
    program: Program,
    method_name: str | None = None,
) -> MRSkeleton:
    """Extract the MR-skeleton from one test method (the first @Test method
    unless named). Raises NotExtractable for branchy or non-MTC shapes."""
    info, _ = check_test_class(program, test)
    if info is None:
        raise NotExtractable("test class does not type-check against the program")
    methods = test.test_methods()
    if method_name is not None:
        methods = [m for m in methods if m.name == method_name]
    if not methods:
        raise NotExtractable("no matching @Test method")
    method = methods[0]
    members = set(pair)
    pair_nids = _pair_call_nids(method.body, info, members)
    if _branch_hides_pair_call(method.body, pair_nids):
        raise NotExtractable("pair-method call inside a branch or loop")
    if len(pair_nids) < 2:
        raise NotExtractable("fewer than two pair-method invocations")

    scan = _RoleScan(info, pair_nids)
    last_relating: ast.Call | None = None
    for stmt in method.body.stmts:
        if isinstance(stmt, ast.VarDecl):
            scan.bind(stmt.name, scan.eval(stmt.init))
        elif isinstance(stmt, ast.Assign):
            value = scan.eval(stmt.value)
            if isinstance(stmt.target, ast.Name):
                scan.bind(stmt.target.ident, value)
        elif isinstance(stmt, ast.ExprStmt):
            expr = stmt.expr
            if (
                isinstance(expr, ast.Call)
                and expr.receiver is None
                and expr.name in ASSERTION_BUILTINS
            ):
                taints: frozenset[int] = frozenset()
                for arg in expr.args:
                    taints = taints | scan.eval(arg).taints
                if len(taints) >= 2:
                    last_relating = expr
            else:
                scan.eval(expr)
        elif isinstance(stmt, (ast.Return, ast.Throw)) and stmt.value is not None:
            scan.eval(stmt.value)

    if last_relating is None:
        raise NotExtractable("no assertion relates the two executions")
    normalized = normalize_assertion(last_relating)
    elements = tuple(sorted(scan.classify(op) for op in normalized.operands))
    return MRSkeleton(
        method_pair=frozenset(pair),
        input_relation=tuple(scan.input_relation),
        assertion_kind=normalized.kind,
        assertion_elements=elements,
        notes=tuple(scan.notes),
    )


def _calls_in_eval_order(node: ast.Node, info: TypeInfo, out: list[MethodRef]) -> None:
    for child in ast.child_nodes(node):
        _calls_in_eval_order(child, info, out)
    if isinstance(node, ast.Call):
        target_info = info.call_targets.get(node.nid)
        if (
            target_info is not None
            and target_info.kind == "method"
            and target_info.ref is not None
        ):
            out.append(target_info.ref)


def infer_pair_from_test(
    test: TestClass, target: MethodRef, program: Program, method_name: str | None = None
) -> tuple[MethodRef, MethodRef] | None:
    """For a reference test, the pair member is the first distinct program
    method invoked after the target in evaluation order (the follow-up of
    the reference MR); setup calls before the target are the fallback."""
    info, _ = check_test_class(program, test)
    if info is None:
        return None
    methods = test.test_methods()
    if method_name is not None:
        methods = [m for m in methods if m.name == method_name]
    for method in methods:
        refs: list[MethodRef] = []
        _calls_in_eval_order(method.body, info, refs)
        if target not in refs:
            continue
        first_target = refs.index(target)
        for ref in refs[first_target + 1 :]:
            if ref != target:
                return (target, ref)
        for ref in refs:
            if ref != target:
                return (target, ref)
    return None


def compare(generated: MRSkeleton, reference: MRSkeleton) -> SimilarityResult:
    """L1 = same method pair; L2 = L1 plus input relation, assertion kind,
    and assertion elements all equal."""
    mismatches: list[str] = []
    if generated.method_pair != reference.method_pair:
        mismatches.append("methodPair")
    if generated.input_relation != reference.input_relation:
        mismatches.append("inputRelation")
    if generated.assertion_kind != reference.assertion_kind:
        mismatches.append("assertionKind")
    if generated.assertion_elements != reference.assertion_elements:
        mismatches.append("assertionElements")
    l1 = "methodPair" not in mismatches
    l2 = not mismatches
    return SimilarityResult(l1=l1, l2=l2, mismatches=tuple(mismatches))


def skeleton_to_json(skeleton: MRSkeleton) -> dict:
    return {
        "methodPair": sorted(ref.render() for ref in skeleton.method_pair),
        "inputRelation": list(skeleton.input_relation),
        "assertionKind": skeleton.assertion_kind,
        "assertionElements": list(skeleton.assertion_elements),
    }
