"""Per-method static facts and invocation-example retrieval.

Facts are intra-procedural and purely syntactic: the call set and the
field read/write sets are exactly the occurrences in the method body, with
no transitive closure. Name tokens come from splitting the method name on
camelCase boundaries, underscores, and digit runs (digits are separators
and are dropped), lowercasing, then dropping one-character tokens and a
configurable stoplist. Everything here is a pure function of the checked
program, so facts for all methods can be computed in parallel.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .minilang import ast
from .minilang.ast import BUILTIN_CLASS, CTOR_NAME, MethodRef, Program
from .minilang.corpus import Corpus
from .minilang.printer import print_method
from .minilang.typecheck import TypeInfo

DEFAULT_STOPLIST = frozenset({"get", "set", "is", "to", "a", "the"})


class UnknownMethodError(KeyError):
    pass


@dataclass(frozen=True)
class FactsConfig:
    stoplist: frozenset[str] = DEFAULT_STOPLIST


@dataclass(frozen=True)
class MethodFacts:
    method_ref: MethodRef
    name_tokens: frozenset[str]
    para_ret_types: frozenset[str]  # rendered type names, unit excluded
    calls: frozenset[tuple[str, str]]  # (owner class | <builtin>, name)
    read_fields: frozenset[tuple[str, str]]
    write_fields: frozenset[tuple[str, str]]


@dataclass(frozen=True)
class InvocationExample:
    test_method_source: str
    invoked_ref: MethodRef
    origin_path: str


_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+")


def tokenize_name(name: str, stoplist: frozenset[str] = DEFAULT_STOPLIST) -> frozenset[str]:
    tokens: set[str] = set()
    for part in re.split(r"[_0-9]+", name):
        for word in _CAMEL_RE.findall(part):
            token = word.lower()
            if len(token) <= 1 or token in stoplist:
                continue
            tokens.add(token)
    return frozenset(tokens)


def _resolve_method(program: Program, ref: MethodRef) -> ast.MethodDecl:
    decl = program.method_decl(ref)
    if decl is None:
        raise UnknownMethodError(ref.render())
    return decl


def _collect_body_facts(
    body: ast.Block, info: TypeInfo
) -> tuple[frozenset[tuple[str, str]], frozenset[tuple[str, str]], frozenset[tuple[str, str]]]:
    calls: set[tuple[str, str]] = set()
    reads: set[tuple[str, str]] = set()
    writes: set[tuple[str, str]] = set()
    write_nids: set[int] = set()
    for node in ast.walk(body):
        if isinstance(node, ast.Assign):
            write_nids.add(node.target.nid)
    for node in ast.walk(body):
        if isinstance(node, ast.Call):
            target = info.call_targets.get(node.nid)
            if target is None:
                calls.add((ast.UNRESOLVED_CLASS, node.name))
            elif target.kind == "builtin":
                calls.add((BUILTIN_CLASS, target.name))
            else:
                assert target.ref is not None
                calls.add((target.ref.class_name, target.ref.name))
        elif isinstance(node, ast.New):
            calls.add((node.class_name, CTOR_NAME))
        ref = info.field_refs.get(node.nid)
        if ref is not None:
            if node.nid in write_nids:
                writes.add(ref)
            else:
                reads.add(ref)
    return frozenset(calls), frozenset(reads), frozenset(writes)


def extract_facts(
    program: Program,
    method: MethodRef,
    config: FactsConfig | None = None,
) -> MethodFacts:
    """Static facts for one method of a checked program."""
    config = config or FactsConfig()
    decl = _resolve_method(program, method)
    info = program.type_info
    assert isinstance(info, TypeInfo), "extract_facts requires a checked program"
    types = {t.render() for t in decl.param_types()}
    if decl.return_type != ast.UNIT:
        types.add(decl.return_type.render())
    calls, reads, writes = _collect_body_facts(decl.body, info)
    return MethodFacts(
        method_ref=method,
        name_tokens=tokenize_name(decl.name, config.stoplist),
        para_ret_types=frozenset(types),
        calls=calls,
        read_fields=reads,
        write_fields=writes,
    )


def all_facts(program: Program, config: FactsConfig | None = None) -> list[MethodFacts]:
    return [extract_facts(program, ref, config) for ref in program.all_method_refs()]


def render_callee(callee: tuple[str, str]) -> str:
    owner, name = callee
    return name if owner == BUILTIN_CLASS else f"{owner}.{name}"


def facts_to_json(facts: MethodFacts) -> dict:
    return {
        "class": facts.method_ref.class_name,
        "method": facts.method_ref.name,
        "paramTypes": list(facts.method_ref.param_types),
        "nameTokens": sorted(facts.name_tokens),
        "paraRetTypes": sorted(facts.para_ret_types),
        "calls": sorted(render_callee(c) for c in facts.calls),
        "readFields": sorted(f"{c}.{f}" for c, f in facts.read_fields),
        "writeFields": sorted(f"{c}.{f}" for c, f in facts.write_fields),
    }


def _method_calls(method: ast.MethodDecl, info: TypeInfo) -> set[MethodRef]:
    refs: set[MethodRef] = set()
    for node in ast.walk(method.body):
        if isinstance(node, ast.Call):
            target = info.call_targets.get(node.nid)
            if target is not None and target.kind == "method" and target.ref is not None:
                refs.add(target.ref)
    return refs


def retrieve_invocation_examples(
    corpus: Corpus,
    pair: tuple[MethodRef, MethodRef],
    max_per_method: int = 3,
    exclude_paths: tuple[str, ...] = (),
) -> list[InvocationExample]:
    """First-found @Test methods from the corpus test files that invoke a
    pair member, capped per member. Test files are scanned in sorted path
    order; an empty result simply means no examples exist.
    """
    target, candidate = pair
    excluded = set(exclude_paths)
    taken: dict[MethodRef, int] = {target: 0, candidate: 0}
    examples: list[InvocationExample] = []
    for entry in corpus.tests:
        path = entry.test_class.path or ""
        if path in excluded:
            continue
        for method in entry.test_class.test_methods():
            called = _method_calls(method, entry.info)
            member = None
            if target in called:
                member = target
            elif candidate in called:
                member = candidate
            if member is None or taken[member] >= max_per_method:
                continue
            taken[member] += 1
            examples.append(
                InvocationExample(
                    test_method_source=print_method(method, depth=0),
                    invoked_ref=member,
                    origin_path=path,
                )
            )
    return examples
