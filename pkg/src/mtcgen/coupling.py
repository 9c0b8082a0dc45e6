"""Functionally-coupled method pair identification.

For a target method, every other method in its container class is tested
against three feature groups, each with a strong case that suppresses the
weak one (if/elif):

  Intention  OVERLOADING                 same method name
             SHARED_SIG_TOKENS_AND_TYPES shared name tokens AND shared
                                         parameter/return types
  Behavior   DIRECT_CALL                 one method invokes the other
             SHARED_CALLS                call sets intersect (minus an
                                         ignore-list of ubiquitous builtins)
  State      DIRECT_DATA_DEP             one writes a field the other reads
             SHARED_STATE                read or write sets intersect

Pairs with at least one matched feature are returned sorted by feature
count (descending), then candidate name, then parameter list, so prompt
construction downstream is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .facts import FactsConfig, MethodFacts, extract_facts, render_callee
from .minilang.ast import MethodRef, Program

INTENTION = "INTENTION"
BEHAVIOR = "BEHAVIOR"
STATE = "STATE"

OVERLOADING = "OVERLOADING"
SHARED_SIG_TOKENS_AND_TYPES = "SHARED_SIG_TOKENS_AND_TYPES"
DIRECT_CALL = "DIRECT_CALL"
SHARED_CALLS = "SHARED_CALLS"
DIRECT_DATA_DEP = "DIRECT_DATA_DEP"
SHARED_STATE = "SHARED_STATE"

CATEGORY_OF = {
    OVERLOADING: INTENTION,
    SHARED_SIG_TOKENS_AND_TYPES: INTENTION,
    DIRECT_CALL: BEHAVIOR,
    SHARED_CALLS: BEHAVIOR,
    DIRECT_DATA_DEP: STATE,
    SHARED_STATE: STATE,
}

# Human-readable phrasing used by feature_summary.
LABEL_TEXT = {
    OVERLOADING: "Overloading method",
    SHARED_SIG_TOKENS_AND_TYPES: "Consuming/producing the same types of data",
    DIRECT_CALL: "Direct call dependency",
    SHARED_CALLS: "Invoking the same APIs",
    DIRECT_DATA_DEP: "Direct data dependency",
    SHARED_STATE: "Sharing the same state",
}

DEFAULT_CALL_IGNORE = frozenset(
    {"print", "length", "assertEquals", "assertNotEquals", "assertTrue", "assertFalse"}
)


@dataclass(frozen=True)
class CouplingConfig:
    # Alg-line reading: the signature feature requires both the token overlap
    # and the type overlap to be nonempty; flip to match on tokens alone.
    signature_requires_type_overlap: bool = True
    shared_call_ignore: frozenset[str] = DEFAULT_CALL_IGNORE
    facts: FactsConfig = field(default_factory=FactsConfig)


@dataclass(frozen=True)
class CouplingFeature:
    category: str
    label: str
    evidence: tuple[tuple[str, tuple[str, ...]], ...]  # (kind, sorted items)

    def evidence_dict(self) -> dict[str, list[str]]:
        return {kind: list(items) for kind, items in self.evidence}


@dataclass(frozen=True)
class CoupledPair:
    target: MethodRef
    candidate: MethodRef
    features: tuple[CouplingFeature, ...]

    def labels(self) -> frozenset[str]:
        return frozenset(f.label for f in self.features)


def _evidence(*groups: tuple[str, set[str] | list[str]]) -> tuple:
    return tuple((kind, tuple(sorted(items))) for kind, items in groups if items)


def _signature_feature(
    target: MethodFacts, cand: MethodFacts, config: CouplingConfig
) -> CouplingFeature | None:
    if target.method_ref.name == cand.method_ref.name:
        return CouplingFeature(
            INTENTION, OVERLOADING, _evidence(("sharedName", [target.method_ref.name]))
        )
    shared_tokens = target.name_tokens & cand.name_tokens
    shared_types = target.para_ret_types & cand.para_ret_types
    if shared_tokens and (shared_types or not config.signature_requires_type_overlap):
        return CouplingFeature(
            INTENTION,
            SHARED_SIG_TOKENS_AND_TYPES,
            _evidence(("sharedTokens", shared_tokens), ("sharedTypes", shared_types)),
        )
    return None


def _call_feature(
    target: MethodFacts, cand: MethodFacts, config: CouplingConfig
) -> CouplingFeature | None:
    t_ref, c_ref = target.method_ref, cand.method_ref
    directions = []
    if (c_ref.class_name, c_ref.name) in target.calls:
        directions.append(f"{t_ref.name} -> {c_ref.name}")
    if (t_ref.class_name, t_ref.name) in cand.calls:
        directions.append(f"{c_ref.name} -> {t_ref.name}")
    if directions:
        return CouplingFeature(
            BEHAVIOR, DIRECT_CALL, _evidence(("callDirection", directions))
        )
    shared = {
        render_callee(c)
        for c in target.calls & cand.calls
        if c[1] not in config.shared_call_ignore
    }
    if shared:
        return CouplingFeature(BEHAVIOR, SHARED_CALLS, _evidence(("sharedCallees", shared)))
    return None


def _state_feature(target: MethodFacts, cand: MethodFacts) -> CouplingFeature | None:
    t_ref, c_ref = target.method_ref, cand.method_ref
    directions = []
    fields: set[str] = set()
    cand_writes_target_reads = cand.write_fields & target.read_fields
    target_writes_cand_reads = target.write_fields & cand.read_fields
    if cand_writes_target_reads:
        directions.append(f"{c_ref.name} writes -> {t_ref.name} reads")
        fields.update(f"{c}.{f}" for c, f in cand_writes_target_reads)
    if target_writes_cand_reads:
        directions.append(f"{t_ref.name} writes -> {c_ref.name} reads")
        fields.update(f"{c}.{f}" for c, f in target_writes_cand_reads)
    if directions:
        return CouplingFeature(
            STATE,
            DIRECT_DATA_DEP,
            _evidence(("dataFlow", directions), ("sharedFields", fields)),
        )
    shared = (target.read_fields & cand.read_fields) | (
        target.write_fields & cand.write_fields
    )
    if shared:
        return CouplingFeature(
            STATE,
            SHARED_STATE,
            _evidence(("sharedFields", {f"{c}.{f}" for c, f in shared})),
        )
    return None


def couple_from_facts(
    target: MethodFacts, cand: MethodFacts, config: CouplingConfig | None = None
) -> CoupledPair | None:
    """Evaluate the three feature groups on precomputed facts."""
    config = config or CouplingConfig()
    features = []
    for feature in (
        _signature_feature(target, cand, config),
        _call_feature(target, cand, config),
        _state_feature(target, cand),
    ):
        if feature is not None:
            features.append(feature)
    if not features:
        return None
    return CoupledPair(target.method_ref, cand.method_ref, tuple(features))


def analyze_coupling(
    program: Program,
    target: MethodRef,
    config: CouplingConfig | None = None,
) -> list[CoupledPair]:
    """All coupled pairs for `target` within its container class."""
    config = config or CouplingConfig()
    target_facts = extract_facts(program, target, config.facts)
    cls = program.class_named(target.class_name)
    assert cls is not None  # extract_facts above would have raised
    pairs: list[CoupledPair] = []
    for method in cls.methods:
        cand_ref = MethodRef.of(cls.name, method)
        if cand_ref == target:
            continue
        cand_facts = extract_facts(program, cand_ref, config.facts)
        pair = couple_from_facts(target_facts, cand_facts, config)
        if pair is not None:
            pairs.append(pair)
    pairs.sort(
        key=lambda p: (-len(p.features), p.candidate.name, p.candidate.param_types)
    )
    return pairs


def feature_summary(pair: CoupledPair) -> str:
    """Deterministic, byte-stable rendering grouped by category."""
    lines = [
        f"Coupled methods: {pair.target.render()} and {pair.candidate.render()}"
    ]
    for category, heading in ((INTENTION, "Intention"), (BEHAVIOR, "Behavior"), (STATE, "State")):
        features = [f for f in pair.features if f.category == category]
        if not features:
            continue
        lines.append(f"{heading}:")
        for feature in features:
            lines.append(f"  * {LABEL_TEXT[feature.label]} [{feature.label}]")
            for kind, items in feature.evidence:
                lines.append(f"      {kind}: {', '.join(items)}")
    return "\n".join(lines) + "\n"


def pair_to_json(pair: CoupledPair) -> dict:
    return {
        "target": pair.target.render(),
        "candidate": pair.candidate.render(),
        "features": [
            {
                "category": f.category,
                "label": f.label,
                "evidence": f.evidence_dict(),
            }
            for f in pair.features
        ],
    }
