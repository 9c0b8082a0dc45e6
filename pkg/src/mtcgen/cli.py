"""Command-line interface.

Subcommands: analyze, facts, generate, mutate, validate, skeleton-compare,
run, report. Exit codes: 0 success, 1 fatal configuration/corpus error,
2 completed with per-pair provider failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .coupling import analyze_coupling, pair_to_json
from .facts import all_facts, facts_to_json
from .gateway import make_provider
from .generation import GenerationConfig, generate_for_pair
from .minilang.corpus import Corpus, load_corpus
from .minilang.diagnostics import DiagnosticList
from .minilang.interp import Limits, TestClass
from .minilang.parser import ParseFailure, parse_classes
from .mutation import generate_mutants, mutant_diff
from .pipeline import (
    PipelineConfig,
    PipelineError,
    compare_against_reference,
    resolve_target,
    run_pipeline,
)
from .skeleton import (
    MRSkeleton,
    NotExtractable,
    compare,
    extract_skeleton,
    skeleton_to_json,
)
from .minilang.ast import MethodRef
from .validation import validate

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _emit(payload: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


def _load_corpus_or_fail(path: str) -> Corpus:
    corpus = load_corpus(path)
    if isinstance(corpus, DiagnosticList):
        raise PipelineError(f"corpus failed to load:\n{corpus.render()}")
    return corpus


def _corpus_path(args: argparse.Namespace) -> str:
    if getattr(args, "corpus", None):
        return args.corpus
    if args.config:
        return PipelineConfig.from_json_file(args.config).corpus_path
    raise PipelineError("no corpus given: pass --corpus or --config")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    if not args.config:
        raise PipelineError("this subcommand requires --config")
    config = PipelineConfig.from_json_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out:
        config.output_dir = args.out
    provider_kind = getattr(args, "provider", None)
    fixtures = getattr(args, "fixtures", None)
    if provider_kind or fixtures:
        from dataclasses import replace

        config.provider = replace(
            config.provider,
            kind=provider_kind or config.provider.kind,
            fixture_path=fixtures or config.provider.fixture_path,
        )
    return config


def _parse_pair(corpus: Corpus, spec: str) -> tuple[MethodRef, MethodRef]:
    parts = spec.split(",")
    if len(parts) != 2:
        raise PipelineError("--pair expects 'Class.method,Class.method'")
    return (
        resolve_target(corpus.program, parts[0]),
        resolve_target(corpus.program, parts[1]),
    )


def _load_test_file(path: str, corpus: Corpus) -> TestClass:
    try:
        decls, _ = parse_classes(Path(path).read_text(encoding="utf-8"), path)
    except (OSError, ParseFailure) as e:
        raise PipelineError(f"cannot load test file {path}: {e}")
    for decl in decls:
        if any(m.is_test() for m in decl.methods):
            return TestClass.from_decl(decl, path)
    raise PipelineError(f"{path} contains no @Test class")


# ── subcommand handlers ───────────────────────────────────────────────────────


def cmd_analyze(args: argparse.Namespace) -> int:
    corpus = _load_corpus_or_fail(_corpus_path(args))
    target = resolve_target(corpus.program, args.target)
    pairs = analyze_coupling(corpus.program, target)
    payload = json.dumps(
        [pair_to_json(p) for p in pairs], indent=2, sort_keys=True
    ) + "\n"
    _emit(payload, args.out)
    return EXIT_OK


def cmd_facts(args: argparse.Namespace) -> int:
    corpus = _load_corpus_or_fail(_corpus_path(args))
    records = [facts_to_json(f) for f in all_facts(corpus.program)]
    if args.class_name:
        records = [r for r in records if r["class"] == args.class_name]
    _emit(json.dumps(records, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    corpus = _load_corpus_or_fail(config.corpus_path)
    provider = make_provider(config.provider)
    gen_config = GenerationConfig(k=config.k, m=config.m, limits=config.limits)
    had_errors = False
    output = []
    from .pipeline import resolve_targets

    for target in resolve_targets(corpus.program, config.targets):
        for pair in analyze_coupling(corpus.program, target, config.coupling):
            result = generate_for_pair(
                pair, corpus, provider, config.provider, gen_config
            )
            had_errors = had_errors or bool(result.provider_errors)
            output.append(
                {
                    "target": pair.target.render(),
                    "candidate": pair.candidate.render(),
                    "candidates": [
                        {
                            "attempt": c.attempt,
                            "parsed": c.test_class is not None,
                            "refinementLog": [
                                {"stage": e.stage, "diagnostics": list(e.diagnostics)}
                                for e in c.refinement_log
                            ],
                            "classText": c.test_class.source
                            if c.test_class
                            else c.code_text,
                        }
                        for c in result.candidates
                    ],
                    "providerErrors": [
                        {"attempt": a, "error": e} for a, e in result.provider_errors
                    ],
                }
            )
    _emit(json.dumps(output, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_PARTIAL if had_errors else EXIT_OK


def cmd_mutate(args: argparse.Namespace) -> int:
    corpus = _load_corpus_or_fail(_corpus_path(args))
    pair = _parse_pair(corpus, args.pair)
    mutants = generate_mutants(
        corpus.program, pair, cap=args.cap, seed=args.seed or 0
    )
    chunks = [
        f"// {m.id} {m.operator} on node {m.target_nid} in {m.method.render()}\n"
        + mutant_diff(corpus.program, m)
        for m in mutants
    ]
    _emit("\n".join(chunks) + ("\n" if chunks else ""), args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    corpus = _load_corpus_or_fail(_corpus_path(args))
    pair = _parse_pair(corpus, args.pair)
    amplified = _load_test_file(args.amplified, corpus)
    mutants = generate_mutants(
        corpus.program, pair, cap=args.cap, seed=args.seed or 0
    )
    limits = Limits(max_steps=args.max_steps)
    verdict = validate(amplified, corpus.program, mutants, limits)
    by_id = {m.id: m for m in mutants}
    payload = {
        "candidate": amplified.decl.name,
        "p": verdict.p,
        "perMutant": [
            {"id": mid, "operator": by_id[mid].operator, "pPrime": pp}
            for mid, pp in verdict.per_mutant
        ],
        "decision": verdict.decision,
        "reason": verdict.reason,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _reference_skeleton(
    args: argparse.Namespace, corpus: Corpus, pair: tuple[MethodRef, MethodRef]
) -> MRSkeleton:
    path = Path(args.reference)
    if path.suffix == ".json":
        raw = json.loads(path.read_text(encoding="utf-8"))
        refs = []
        for spec in raw["methodPair"]:
            name_part, _, params = spec.partition("(")
            class_name, _, method_name = name_part.partition(".")
            types = tuple(t for t in params.rstrip(")").split(",") if t)
            refs.append(MethodRef(class_name, method_name, types))
        return MRSkeleton(
            method_pair=frozenset(refs),
            input_relation=tuple(raw["inputRelation"]),
            assertion_kind=raw["assertionKind"],
            assertion_elements=tuple(raw["assertionElements"]),
        )
    test = _load_test_file(args.reference, corpus)
    return extract_skeleton(test, pair, corpus.program)


def cmd_skeleton_compare(args: argparse.Namespace) -> int:
    corpus = _load_corpus_or_fail(_corpus_path(args))
    pair = _parse_pair(corpus, args.pair)
    generated_test = _load_test_file(args.test, corpus)
    try:
        generated = extract_skeleton(generated_test, pair, corpus.program)
        reference = _reference_skeleton(args, corpus, pair)
    except NotExtractable as e:
        _emit(json.dumps({"error": f"NOT_EXTRACTABLE: {e.cause}"}) + "\n", args.out)
        return EXIT_PARTIAL
    result = compare(generated, reference)
    payload = {
        "generated": skeleton_to_json(generated),
        "reference": skeleton_to_json(reference),
        "l1": result.l1,
        "l2": result.l2,
        "mismatches": list(result.mismatches),
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _print_metrics(tasks: list[dict]) -> None:
    for task in tasks:
        metrics = task["metrics"]
        print(
            f"{task['target']}: generated={metrics['numGenerated']} "
            f"executable={metrics['pctExecutableMtc']:.2f} "
            f"valid={metrics['pctValidMtc']:.2f} "
            f"falseAlarm={metrics['pctFalseAlarm']:.2f} "
            f"successful={metrics['taskSuccessful']}"
        )


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    run = run_pipeline(config)
    _print_metrics(run.report_json()["tasks"])
    if args.compare_reference:
        corpus = _load_corpus_or_fail(config.corpus_path)
        comparison = compare_against_reference(run, corpus)
        comparison_path = Path(config.output_dir) / "reference_comparison.json"
        comparison_path.write_text(
            json.dumps(comparison, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        for row in comparison:
            print(
                f"{row['target']}: L1={row['l1Consistency']} L2={row['l2Consistency']}"
            )
    print(f"report written to {Path(config.output_dir) / 'report.json'}")
    return EXIT_PARTIAL if run.had_provider_errors else EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report_path = Path(args.run_dir) / "report.json"
    try:
        report = json.loads(report_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise PipelineError(f"cannot read {report_path}: {e}")
    _print_metrics(report["tasks"])
    return EXIT_OK


# ── argument parsing ──────────────────────────────────────────────────────────


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtcgen",
        description="Metamorphic test case generation over Mini corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="emit coupled pairs for a target")
    p.add_argument("--corpus")
    p.add_argument("--target", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("facts", help="emit per-method static facts")
    p.add_argument("--corpus")
    p.add_argument("--class", dest="class_name")
    _add_common(p)
    p.set_defaults(func=cmd_facts)

    p = sub.add_parser("generate", help="generate and refine candidates only")
    p.add_argument("--provider", choices=["replay", "record", "http-chat"])
    p.add_argument("--fixtures", help="fixture path for replay/record providers")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("mutate", help="emit mutant diffs for a pair")
    p.add_argument("--corpus")
    p.add_argument("--pair", required=True)
    p.add_argument("--cap", type=int, default=20)
    _add_common(p)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("validate", help="validate an amplified test class")
    p.add_argument("--corpus")
    p.add_argument("--pair", required=True)
    p.add_argument("--amplified", required=True)
    p.add_argument("--cap", type=int, default=20)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("skeleton-compare", help="compare MR skeletons")
    p.add_argument("--corpus")
    p.add_argument("--pair", required=True)
    p.add_argument("--test", required=True, help="generated test .mini file")
    p.add_argument("--reference", required=True, help=".mini test or skeleton .json")
    _add_common(p)
    p.set_defaults(func=cmd_skeleton_compare)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument(
        "--compare-reference",
        action="store_true",
        help="also compare retained MTCs against corpus reference tests",
    )
    p.add_argument("--provider", choices=["replay", "record", "http-chat"])
    p.add_argument("--fixtures", help="fixture path for replay/record providers")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-render metrics from a prior run")
    p.add_argument("--run-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
