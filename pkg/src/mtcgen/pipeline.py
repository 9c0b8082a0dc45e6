"""Full pipeline: analyze -> generate -> refine -> amplify -> validate ->
report, plus reference-skeleton comparison.

Metric definitions per target:
  executable MTC   compiles, runs without a class-level error, and satisfies
                   both MTC necessary properties
  valid MTC        executable and passes on the corpus as committed (the
                   corpus stands in for the latest project version)
  false alarm      executable but failing on the corpus version
  successful task  at least one valid MTC
  pctFalseAlarm    false alarms over executable MTCs

Per-pair problems (unparseable replies, filtered candidates) are recorded,
never fatal; only an unreadable corpus or unusable configuration aborts a
run. Pair tasks run on a bounded worker pool; the default of one worker
keeps replay-mode runs byte-for-byte reproducible.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .coupling import CoupledPair, CouplingConfig, analyze_coupling, pair_to_json
from .gateway import Provider, ProviderConfig, make_provider
from .generation import (
    CandidateMTC,
    GenerationConfig,
    GenerationResult,
    amplify,
    generate_for_pair,
)
from .minilang.ast import MethodRef, Program
from .minilang.corpus import Corpus, load_corpus
from .minilang.diagnostics import DiagnosticList
from .minilang.interp import CLASS_LEVEL_KEY, PASS, Limits, run_test_class
from .mutation import Mutant, generate_mutants
from .skeleton import (
    MRSkeleton,
    NotExtractable,
    compare,
    extract_skeleton,
    infer_pair_from_test,
    skeleton_to_json,
)
from .validation import RETAINED, check_mtc_properties, validate

SCHEMA_VERSION = 1


class PipelineError(Exception):
    """Fatal: unusable configuration or corpus."""


@dataclass
class PipelineConfig:
    corpus_path: str
    targets: list[str] | str = "all-public"  # specs like "Class.method(...)"
    provider: ProviderConfig = field(default_factory=lambda: ProviderConfig(
        kind="replay", fixture_path="fixtures.jsonl"
    ))
    k: int = 5
    m: int = 10
    mutant_cap: int = 20
    seed: int = 0
    limits: Limits = field(default_factory=Limits)
    output_dir: str = "out"
    max_workers: int = 1
    coupling: CouplingConfig = field(default_factory=CouplingConfig)

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1:
            raise PipelineError("k and m must be at least 1")

    @staticmethod
    def from_json_file(path: str | Path) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise PipelineError(f"cannot read config {path}: {e}") from e
        return PipelineConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "PipelineConfig":
        try:
            provider_raw = raw.get("provider", {})
            provider = ProviderConfig(
                kind=provider_raw.get("kind", "replay"),
                endpoint=provider_raw.get("endpoint", ""),
                model=provider_raw.get("model", "mini-chat"),
                temperature=provider_raw.get("temperature", 0.2),
                max_tokens=provider_raw.get("max_tokens"),
                api_key_env=provider_raw.get("api_key_env", "MTCGEN_API_KEY"),
                fixture_path=provider_raw.get("fixture_path"),
            )
            limits_raw = raw.get("limits", {})
            limits = Limits(
                max_steps=limits_raw.get("max_steps", 1_000_000),
                per_test_timeout=limits_raw.get("per_test_timeout_s", 2.0),
            )
            return PipelineConfig(
                corpus_path=raw["corpus_path"],
                targets=raw.get("targets", "all-public"),
                provider=provider,
                k=raw.get("k", 5),
                m=raw.get("m", 10),
                mutant_cap=raw.get("mutant_cap", 20),
                seed=raw.get("seed", 0),
                limits=limits,
                output_dir=raw.get("output_dir", "out"),
                max_workers=raw.get("max_workers", 1),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise PipelineError(f"unusable config: {e}") from e


# ── target resolution ─────────────────────────────────────────────────────────

_TARGET_RE = re.compile(r"^(\w+)\.(\w+)(?:\(([^)]*)\))?$")


def resolve_target(program: Program, spec: str) -> MethodRef:
    match = _TARGET_RE.match(spec.strip())
    if not match:
        raise PipelineError(f"bad target spec {spec!r}")
    class_name, method_name, params = match.groups()
    candidates = program.methods_named(class_name, method_name)
    if not candidates:
        raise PipelineError(f"target {spec!r} not found in corpus")
    if params is not None:
        wanted = tuple(p.strip() for p in params.split(",") if p.strip())
        for decl in candidates:
            ref = MethodRef.of(class_name, decl)
            if ref.param_types == wanted:
                return ref
        raise PipelineError(f"target {spec!r} does not match any overload")
    if len(candidates) > 1:
        raise PipelineError(
            f"target {spec!r} is overloaded; specify parameter types"
        )
    return MethodRef.of(class_name, candidates[0])


def resolve_targets(program: Program, targets: list[str] | str) -> list[MethodRef]:
    if targets == "all-public":
        return program.all_method_refs()
    assert isinstance(targets, list)
    return [resolve_target(program, spec) for spec in targets]


# ── per-candidate record ──────────────────────────────────────────────────────


@dataclass
class CandidateRecord:
    attempt: int
    executable: bool
    is_mtc: bool
    invocation_count: int
    passes_on_original: bool
    refinement_log: tuple
    class_text: str | None
    p: float | None = None
    per_mutant: list[dict] = field(default_factory=list)
    decision: str | None = None
    reason: str | None = None
    skeleton: MRSkeleton | None = None
    skeleton_note: str | None = None
    amplified_degraded: bool | None = None
    m_effective: int | None = None
    amplified_text: str | None = None
    retained_path: str | None = None

    def to_json(self) -> dict:
        return {
            "attempt": self.attempt,
            "executable": self.executable,
            "isMtc": self.is_mtc,
            "invocationCount": self.invocation_count,
            "passesOnOriginal": self.passes_on_original,
            "refinementLog": [
                {"stage": entry.stage, "diagnostics": list(entry.diagnostics)}
                for entry in self.refinement_log
            ],
            "classText": self.class_text,
            "p": self.p,
            "perMutant": self.per_mutant,
            "decision": self.decision,
            "reason": self.reason,
            "skeleton": skeleton_to_json(self.skeleton) if self.skeleton else None,
            "skeletonNote": self.skeleton_note,
            "amplifiedDegraded": self.amplified_degraded,
            "mEffective": self.m_effective,
            "retainedPath": self.retained_path,
        }


@dataclass
class PairRecord:
    pair: CoupledPair
    candidates: list[CandidateRecord]
    provider_errors: list[tuple[int, str]]

    def to_json(self) -> dict:
        return {
            **pair_to_json(self.pair),
            "attempts": [c.to_json() for c in self.candidates],
            "providerErrors": [
                {"attempt": a, "error": e} for a, e in self.provider_errors
            ],
        }


@dataclass
class TaskReport:
    target: MethodRef
    pairs: list[PairRecord]
    metrics: dict

    def to_json(self) -> dict:
        return {
            "target": self.target.render(),
            "pairs": [p.to_json() for p in self.pairs],
            "metrics": self.metrics,
        }


@dataclass
class PipelineRun:
    config: PipelineConfig
    reports: list[TaskReport]
    had_provider_errors: bool

    def report_json(self) -> dict:
        return {
            "schemaVersion": SCHEMA_VERSION,
            "config": {
                "corpusPath": self.config.corpus_path,
                "targets": self.config.targets,
                "provider": {
                    "kind": self.config.provider.kind,
                    "model": self.config.provider.model,
                    "temperature": self.config.provider.temperature,
                },
                "k": self.config.k,
                "m": self.config.m,
                "mutantCap": self.config.mutant_cap,
                "seed": self.config.seed,
            },
            "tasks": [t.to_json() for t in self.reports],
        }

    def render_report(self) -> str:
        return json.dumps(self.report_json(), indent=2, sort_keys=True) + "\n"


def compute_metrics(records: list[CandidateRecord]) -> dict:
    num_generated = len(records)
    executable = [r for r in records if r.executable]
    valid = [r for r in executable if r.passes_on_original]
    false_alarms = [r for r in executable if not r.passes_on_original]
    return {
        "numGenerated": num_generated,
        "pctExecutableMtc": len(executable) / num_generated if num_generated else 0.0,
        "pctValidMtc": len(valid) / num_generated if num_generated else 0.0,
        "taskSuccessful": bool(valid),
        "pctFalseAlarm": len(false_alarms) / len(executable) if executable else 0.0,
    }


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_")


# ── the pipeline ──────────────────────────────────────────────────────────────


def _process_candidate(
    candidate: CandidateMTC,
    pair: CoupledPair,
    program: Program,
    provider: Provider,
    config: PipelineConfig,
    mutants: list[Mutant],
) -> CandidateRecord:
    record = CandidateRecord(
        attempt=candidate.attempt,
        executable=False,
        is_mtc=False,
        invocation_count=0,
        passes_on_original=False,
        refinement_log=candidate.refinement_log,
        class_text=candidate.test_class.source if candidate.test_class else candidate.code_text,
    )
    if candidate.test_class is None:
        return record
    pair_refs = (pair.target, pair.candidate)
    outcomes = run_test_class(program, candidate.test_class, config.limits)
    class_level_error = CLASS_LEVEL_KEY in outcomes
    properties = check_mtc_properties(candidate.test_class, pair_refs, program)
    record.is_mtc = properties.is_mtc
    record.invocation_count = properties.invocation_count
    record.executable = not class_level_error and properties.is_mtc
    record.passes_on_original = (
        not class_level_error
        and bool(outcomes)
        and all(o.kind == PASS for o in outcomes.values())
    )
    if not (record.executable and record.passes_on_original):
        return record

    amplified = amplify(
        candidate, candidate.session, provider, program, config.m
    )
    record.amplified_degraded = amplified.degraded
    record.m_effective = amplified.m_effective
    record.amplified_text = amplified.test_class.source
    verdict = validate(amplified.test_class, program, mutants, config.limits)
    record.p = verdict.p
    record.per_mutant = [
        {
            "id": mutant_id,
            "operator": next(m.operator for m in mutants if m.id == mutant_id),
            "pPrime": p_prime,
        }
        for mutant_id, p_prime in verdict.per_mutant
    ]
    record.decision = verdict.decision
    record.reason = verdict.reason
    try:
        record.skeleton = extract_skeleton(
            amplified.test_class, pair_refs, program
        )
    except NotExtractable as e:
        record.skeleton_note = e.cause
    return record


def _process_pair(
    pair: CoupledPair,
    corpus: Corpus,
    provider: Provider,
    config: PipelineConfig,
    gen_config: GenerationConfig,
) -> PairRecord:
    program = corpus.program
    result: GenerationResult = generate_for_pair(
        pair, corpus, provider, config.provider, gen_config
    )
    mutants: list[Mutant] | None = None
    records = []
    for candidate in result.candidates:
        if mutants is None:
            mutants = generate_mutants(
                program,
                (pair.target, pair.candidate),
                cap=config.mutant_cap,
                seed=config.seed,
            )
        records.append(
            _process_candidate(candidate, pair, program, provider, config, mutants)
        )
    return PairRecord(pair, records, result.provider_errors)


def _write_outputs(
    target: MethodRef, pair_record: PairRecord, out_dir: Path
) -> None:
    pair_dir = (
        out_dir / _slug(target.render()) / _slug(pair_record.pair.candidate.render())
    )
    index = []
    for record in pair_record.candidates:
        attempt_dir = pair_dir / f"attempt{record.attempt}"
        attempt_dir.mkdir(parents=True, exist_ok=True)
        if record.class_text:
            (attempt_dir / "candidate.mini").write_text(
                record.class_text, encoding="utf-8"
            )
        if record.amplified_text:
            amplified_path = attempt_dir / "amplified.mini"
            amplified_path.write_text(record.amplified_text, encoding="utf-8")
            if record.decision == RETAINED:
                record.retained_path = str(
                    amplified_path.relative_to(out_dir)
                )
        index.append(record.to_json())
    pair_dir.mkdir(parents=True, exist_ok=True)
    (pair_dir / "candidates.json").write_text(
        json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def run_pipeline(config: PipelineConfig, provider: Provider | None = None) -> PipelineRun:
    """Run the full pipeline; fatal only on corpus/config problems.

    `provider` overrides the configured one (tests and fixture tooling)."""
    corpus = load_corpus(config.corpus_path)
    if isinstance(corpus, DiagnosticList):
        raise PipelineError(f"corpus failed to load:\n{corpus.render()}")
    program = corpus.program
    targets = resolve_targets(program, config.targets)
    provider = provider or make_provider(config.provider)
    gen_config = GenerationConfig(k=config.k, m=config.m, limits=config.limits)
    out_dir = Path(config.output_dir)

    reports: list[TaskReport] = []
    had_errors = False
    for target in targets:
        pairs = analyze_coupling(program, target, config.coupling)
        if config.max_workers > 1:
            with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
                pair_records = list(
                    pool.map(
                        lambda p: _process_pair(p, corpus, provider, config, gen_config),
                        pairs,
                    )
                )
        else:
            pair_records = [
                _process_pair(p, corpus, provider, config, gen_config) for p in pairs
            ]
        for pair_record in pair_records:
            had_errors = had_errors or bool(pair_record.provider_errors)
            _write_outputs(target, pair_record, out_dir)
        all_records = [r for pr in pair_records for r in pr.candidates]
        reports.append(TaskReport(target, pair_records, compute_metrics(all_records)))

    run = PipelineRun(config, reports, had_provider_errors=had_errors)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(run.render_report(), encoding="utf-8")
    return run


# ── reference comparison ──────────────────────────────────────────────────────


def find_reference_skeleton(
    corpus: Corpus, target: MethodRef
) -> tuple[MRSkeleton, tuple[MethodRef, MethodRef]] | None:
    """First extractable human MTC skeleton for the target from the corpus
    test files."""
    for entry in corpus.tests:
        for method in entry.test_class.test_methods():
            pair = infer_pair_from_test(
                entry.test_class, target, corpus.program, method_name=method.name
            )
            if pair is None:
                continue
            try:
                skeleton = extract_skeleton(
                    entry.test_class, pair, corpus.program, method_name=method.name
                )
                return skeleton, pair
            except NotExtractable:
                continue
    return None


def compare_against_reference(run: PipelineRun, corpus: Corpus) -> list[dict]:
    """Per target: does ANY retained generated MTC match the human reference
    skeleton at L1 / at L2? Unextractable references are reported, not fatal."""
    results = []
    for task in run.reports:
        reference = find_reference_skeleton(corpus, task.target)
        if reference is None:
            results.append(
                {
                    "target": task.target.render(),
                    "reference": None,
                    "note": "no extractable reference MTC in corpus tests",
                    "l1Consistency": False,
                    "l2Consistency": False,
                }
            )
            continue
        ref_skeleton, _ = reference
        l1 = False
        l2 = False
        for pair_record in task.pairs:
            for record in pair_record.candidates:
                if record.decision != RETAINED or record.skeleton is None:
                    continue
                similarity = compare(record.skeleton, ref_skeleton)
                l1 = l1 or similarity.l1
                l2 = l2 or similarity.l2
        results.append(
            {
                "target": task.target.render(),
                "reference": skeleton_to_json(ref_skeleton),
                "l1Consistency": l1,
                "l2Consistency": l2,
            }
        )
    return results
