"""Independent brute-force oracle for the six coupling predicates.

Deliberately written against the generated-class naming discipline
(single class `Subject`, fields `fN`) with its own AST walks, so it shares
no code path with the production analyzer.
"""

from __future__ import annotations

import re

from mtcgen.minilang import ast

ORACLE_BUILTINS = {
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
ORACLE_IGNORED_CALLEES = {
    "print",
    "length",
    "assertEquals",
    "assertNotEquals",
    "assertTrue",
    "assertFalse",
}
ORACLE_STOPLIST = {"get", "set", "is", "to", "a", "the"}

_FIELD_NAME = re.compile(r"^f[0-9]+$")


def oracle_tokens(name: str) -> frozenset[str]:
    words: list[str] = []
    for part in re.split(r"[_0-9]+", name):
        words.extend(re.findall(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+", part))
    return frozenset(
        w.lower() for w in words if len(w) > 1 and w.lower() not in ORACLE_STOPLIST
    )


def oracle_types(method: ast.MethodDecl) -> frozenset[str]:
    types = {p.decl_type.render() for p in method.params}
    if method.return_type != ast.UNIT:
        types.add(method.return_type.render())
    return frozenset(types)


def oracle_calls(cls: ast.ClassDecl, method: ast.MethodDecl) -> frozenset[str]:
    method_names = {m.name for m in cls.methods}
    calls: set[str] = set()
    for node in ast.walk(method.body):
        if isinstance(node, ast.Call):
            if node.receiver is None:
                if node.name in method_names:
                    calls.add(f"{cls.name}.{node.name}")
                elif node.name in ORACLE_BUILTINS:
                    calls.add(node.name)
            elif isinstance(node.receiver, ast.Name) and node.receiver.ident == cls.name:
                calls.add(f"{cls.name}.{node.name}")
    return frozenset(calls)


def oracle_fields(
    cls: ast.ClassDecl, method: ast.MethodDecl
) -> tuple[frozenset[str], frozenset[str]]:
    reads: set[str] = set()
    writes: set[str] = set()
    write_nids = set()
    for node in ast.walk(method.body):
        if isinstance(node, ast.Assign):
            write_nids.add(node.target.nid)

    def record(name: str, nid: int) -> None:
        bucket = writes if nid in write_nids else reads
        bucket.add(f"{cls.name}.{name}")

    for node in ast.walk(method.body):
        if isinstance(node, ast.Name) and _FIELD_NAME.match(node.ident):
            record(node.ident, node.nid)
        elif (
            isinstance(node, ast.FieldAccess)
            and isinstance(node.receiver, ast.Name)
            and node.receiver.ident == cls.name
        ):
            record(node.name, node.nid)
    return frozenset(reads), frozenset(writes)


def oracle_coupling(
    cls: ast.ClassDecl, target: ast.MethodDecl
) -> dict[tuple[str, tuple[str, ...]], dict[str, dict]]:
    """Expected features per candidate, keyed by (name, param renders):
    {key: {label: evidence-dict}}."""
    t_tokens = oracle_tokens(target.name)
    t_types = oracle_types(target)
    t_calls = oracle_calls(cls, target)
    t_reads, t_writes = oracle_fields(cls, target)
    t_key = (target.name, tuple(t.render() for t in target.param_types()))

    expected: dict[tuple[str, tuple[str, ...]], dict[str, dict]] = {}
    for cand in cls.methods:
        c_key = (cand.name, tuple(t.render() for t in cand.param_types()))
        if c_key == t_key:
            continue
        c_tokens = oracle_tokens(cand.name)
        c_types = oracle_types(cand)
        c_calls = oracle_calls(cls, cand)
        c_reads, c_writes = oracle_fields(cls, cand)
        features: dict[str, dict] = {}

        if cand.name == target.name:
            features["OVERLOADING"] = {"sharedName": {target.name}}
        elif (t_tokens & c_tokens) and (t_types & c_types):
            features["SHARED_SIG_TOKENS_AND_TYPES"] = {
                "sharedTokens": t_tokens & c_tokens,
                "sharedTypes": t_types & c_types,
            }

        t_called_by_c = f"{cls.name}.{target.name}" in c_calls
        c_called_by_t = f"{cls.name}.{cand.name}" in t_calls
        if t_called_by_c or c_called_by_t:
            directions = set()
            if c_called_by_t:
                directions.add((target.name, cand.name))
            if t_called_by_c:
                directions.add((cand.name, target.name))
            features["DIRECT_CALL"] = {"callDirection": directions}
        else:
            shared = {
                callee
                for callee in t_calls & c_calls
                if callee.split(".")[-1] not in ORACLE_IGNORED_CALLEES
            }
            if shared:
                features["SHARED_CALLS"] = {"sharedCallees": shared}

        c_writes_t_reads = c_writes & t_reads
        t_writes_c_reads = t_writes & c_reads
        if c_writes_t_reads or t_writes_c_reads:
            directions = set()
            fields = set()
            if c_writes_t_reads:
                directions.add((cand.name, target.name))
                fields |= c_writes_t_reads
            if t_writes_c_reads:
                directions.add((target.name, cand.name))
                fields |= t_writes_c_reads
            features["DIRECT_DATA_DEP"] = {
                "dataFlow": directions,
                "sharedFields": fields,
            }
        else:
            shared = (t_reads & c_reads) | (t_writes & c_writes)
            if shared:
                features["SHARED_STATE"] = {"sharedFields": shared}

        if features:
            expected[c_key] = features
    return expected


def _parse_direction(text: str) -> tuple[str, str]:
    left, _, right = text.partition(" -> ")
    return (
        left.removesuffix(" writes").strip(),
        right.removesuffix(" reads").strip(),
    )


def normalize_analyzer_output(pairs) -> dict[tuple[str, tuple[str, ...]], dict[str, dict]]:
    """Convert CoupledPair objects into the oracle's comparison shape."""
    result: dict[tuple[str, tuple[str, ...]], dict[str, dict]] = {}
    for pair in pairs:
        key = (pair.candidate.name, pair.candidate.param_types)
        features: dict[str, dict] = {}
        for feature in pair.features:
            evidence: dict[str, object] = {}
            for kind, items in feature.evidence:
                if kind in ("callDirection", "dataFlow"):
                    evidence[kind] = {_parse_direction(d) for d in items}
                else:
                    evidence[kind] = set(items)
            features[feature.label] = evidence
        result[key] = features
    return result
