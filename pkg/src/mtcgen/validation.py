"""MTC property checking, pass rates, and mutation-based filtering.

The retain/filter rule, applied per mutant j with pass rate p' on that
mutant and p on the original program:

    retain_j  <=>  p > p'_j  or  p = p'_j = 100%

A test class is RETAINED only when retain_j holds for every mutant; any
counter-evidence filters it. With no mutants the class is conservatively
retained (RETAINED_NO_MUTANTS). Equal sub-100% rates (p = p' < 1) fail the
retain clause: that is the strictest sound reading of the rule and is kept
behind the pure `decide` function so the policy is easy to revisit.

The "relating assertion" property is a def-use taint check on the
straight-line slice of each test body: an assertion relates the pair's
invocations when its operands reach values derived from at least two
distinct pair-method calls (their inputs or outputs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .minilang import ast
from .minilang.ast import MethodRef, Program
from .minilang.interp import (
    CLASS_LEVEL_KEY,
    Limits,
    PASS,
    TestClass,
    TestOutcome,
    check_test_class,
    run_test_class,
)
from .minilang.typecheck import ASSERTION_BUILTINS, TypeInfo
from .mutation import Mutant

RETAINED = "RETAINED"
FILTERED = "FILTERED"
RETAINED_NO_MUTANTS = "RETAINED_NO_MUTANTS"


@dataclass(frozen=True)
class MtcPropertyReport:
    invocation_count: int
    has_relating_assertion: bool
    is_mtc: bool


@dataclass(frozen=True)
class ValidationVerdict:
    p: float
    per_mutant: tuple[tuple[str, float], ...]  # (mutant id, p')
    decision: str
    reason: str


# ── MTC necessary properties ──────────────────────────────────────────────────


def _pair_call_nids(body: ast.Block, info: TypeInfo, members: set[MethodRef]) -> set[int]:
    nids = set()
    for node in ast.walk(body):
        if isinstance(node, ast.Call):
            target = info.call_targets.get(node.nid)
            if target is not None and target.kind == "method" and target.ref in members:
                nids.add(node.nid)
    return nids


class _TaintScan:
    """Def-use taints over one straight-line test body."""

    def __init__(self, info: TypeInfo, pair_nids: set[int]):
        self.info = info
        self.pair_nids = pair_nids
        self.env: dict[str, set[int]] = {}
        self.next_invocation = 0
        self.relating_assertion_found = False

    def _vars_in(self, expr: ast.Expr) -> set[str]:
        names = set()
        for node in ast.walk(expr):
            if isinstance(node, ast.Name) and node.nid not in self.info.class_refs:
                names.add(node.ident)
        return names

    def eval(self, expr: ast.Expr) -> set[int]:
        if isinstance(expr, (ast.IntLit, ast.BoolLit, ast.StringLit)):
            return set()
        if isinstance(expr, ast.ListLit):
            taints: set[int] = set()
            for e in expr.elements:
                taints |= self.eval(e)
            return taints
        if isinstance(expr, ast.Name):
            return set(self.env.get(expr.ident, set()))
        if isinstance(expr, ast.FieldAccess):
            if expr.receiver.nid in self.info.class_refs:
                return set()
            return self.eval(expr.receiver)
        if isinstance(expr, ast.Call):
            taints = set()
            inputs: list[ast.Expr] = []
            if expr.receiver is not None and expr.receiver.nid not in self.info.class_refs:
                taints |= self.eval(expr.receiver)
                inputs.append(expr.receiver)
            for arg in expr.args:
                taints |= self.eval(arg)
            inputs.extend(expr.args)
            if expr.nid in self.pair_nids:
                invocation = self.next_invocation
                self.next_invocation += 1
                # Inputs of a pair call (arguments and any receiver object)
                # become associated with that invocation.
                for inp in inputs:
                    for var in self._vars_in(inp):
                        self.env.setdefault(var, set()).add(invocation)
                taints = taints | {invocation}
            return taints
        if isinstance(expr, ast.New):
            taints = set()
            for arg in expr.args:
                taints |= self.eval(arg)
            return taints
        if isinstance(expr, ast.Index):
            return self.eval(expr.seq) | self.eval(expr.index)
        if isinstance(expr, ast.Unary):
            return self.eval(expr.operand)
        if isinstance(expr, ast.Binary):
            return self.eval(expr.lhs) | self.eval(expr.rhs)
        return set()

    def run(self, body: ast.Block) -> None:
        for stmt in body.stmts:  # top-level slice only; branches are opaque
            if isinstance(stmt, ast.VarDecl):
                self.env[stmt.name] = self.eval(stmt.init)
            elif isinstance(stmt, ast.Assign):
                taints = self.eval(stmt.value)
                if isinstance(stmt.target, ast.Name):
                    self.env[stmt.target.ident] = taints
            elif isinstance(stmt, ast.ExprStmt):
                expr = stmt.expr
                if (
                    isinstance(expr, ast.Call)
                    and expr.receiver is None
                    and expr.name in ASSERTION_BUILTINS
                ):
                    taints = set()
                    for arg in expr.args:
                        taints |= self.eval(arg)
                    if len(taints) >= 2:
                        self.relating_assertion_found = True
                else:
                    self.eval(expr)
            elif isinstance(stmt, (ast.Return, ast.Throw)):
                if getattr(stmt, "value", None) is not None:
                    self.eval(stmt.value)


def check_mtc_properties(
    test: TestClass, pair: tuple[MethodRef, MethodRef], program: Program
) -> MtcPropertyReport:
    """The two necessary properties: >= 2 pair-method invocations and one
    assertion relating those invocations' inputs and outputs."""
    info, _ = check_test_class(program, test)
    if info is None:
        return MtcPropertyReport(0, False, False)
    members = set(pair)
    invocation_count = 0
    relating = False
    for method in test.test_methods():
        pair_nids = _pair_call_nids(method.body, info, members)
        invocation_count += len(pair_nids)
        scan = _TaintScan(info, pair_nids)
        scan.run(method.body)
        relating = relating or scan.relating_assertion_found
    is_mtc = invocation_count >= 2 and relating
    return MtcPropertyReport(invocation_count, relating, is_mtc)


# ── pass rates ────────────────────────────────────────────────────────────────


def outcomes_pass_rate(outcomes: dict[str, TestOutcome], test_count: int) -> float:
    if CLASS_LEVEL_KEY in outcomes or test_count == 0:
        return 0.0
    passed = sum(1 for o in outcomes.values() if o.kind == PASS)
    return passed / test_count


def pass_rate(
    program: Program, test_class: TestClass, limits: Limits | None = None
) -> float:
    """Fraction of @Test methods that PASS; assertion failures, runtime
    errors, and timeouts all count against, and a class-level compile error
    scores 0.0."""
    outcomes = run_test_class(program, test_class, limits)
    return outcomes_pass_rate(outcomes, len(test_class.test_methods()))


# ── the retain/filter rule ────────────────────────────────────────────────────


def retain_against(p: float, p_prime: float) -> bool:
    return p > p_prime or (p == p_prime == 1.0)


def decide(p: float, p_primes: Sequence[float]) -> str:
    """Pure decision rule; total over all rate combinations."""
    if not p_primes:
        return RETAINED_NO_MUTANTS
    if all(retain_against(p, pp) for pp in p_primes):
        return RETAINED
    return FILTERED


def _reason(
    p: float,
    per_mutant: Sequence[tuple[str, float]],
    mutants: Sequence[Mutant],
    decision: str,
) -> str:
    by_id = {m.id: m for m in mutants}
    if decision == RETAINED_NO_MUTANTS:
        return "no mutants available; conservatively retained"
    if decision == RETAINED:
        killed = sum(1 for _, pp in per_mutant if pp < p)
        if killed == 0:
            return f"p = p' = 100% on all {len(per_mutant)} mutants; conservatively retained"
        return f"p > p' (p={p:.2f}; killed {killed}/{len(per_mutant)} mutants)"
    # FILTERED: cite the strongest counter-evidence — the first mutant that
    # outright contradicts validity (p < p'), falling back to the first
    # equal-sub-100% tie.
    for mutant_id, pp in per_mutant:
        if pp > p:
            mutant = by_id[mutant_id]
            before, after = mutant.diff_token
            edit = f"{before} -> {after}" if after else f"deleted `{before}`"
            return (
                f"p < p' on mutant {mutant_id} ({mutant.operator}: {edit}; "
                f"p={p:.2f}, p'={pp:.2f})"
            )
    for mutant_id, pp in per_mutant:
        if not retain_against(p, pp):
            return f"p = p' < 100% on mutant {mutant_id} (p={p:.2f})"
    raise AssertionError("FILTERED decision without a violating mutant")


def validate(
    amplified_tests: TestClass,
    program: Program,
    mutants: Sequence[Mutant],
    limits: Limits | None = None,
) -> ValidationVerdict:
    """Run the amplified class on the original and on every mutant, then
    apply the retain/filter rule."""
    p = pass_rate(program, amplified_tests, limits)
    per_mutant = tuple(
        (m.id, pass_rate(m.program, amplified_tests, limits)) for m in mutants
    )
    decision = decide(p, [pp for _, pp in per_mutant])
    reason = _reason(p, per_mutant, mutants, decision)
    return ValidationVerdict(p, per_mutant, decision, reason)
