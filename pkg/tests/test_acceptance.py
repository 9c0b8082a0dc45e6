"""Acceptance suite: every criterion runs at its stated tolerance and
prints one pass/fail line (run with `pytest tests/test_acceptance.py -v -s`).
"""

from __future__ import annotations

import json
import random
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import pytest

from _generators import random_class_source, random_program
from _oracle import normalize_analyzer_output, oracle_coupling
from build_replay_fixtures import e2e_config
from conftest import DEC, ENC, ENC_WA, load_fixture_test_class
from mtcgen import bundled_corpus_path
from mtcgen.cli import main as cli_main
from mtcgen.coupling import analyze_coupling
from mtcgen.minilang import DiagnosticList, TestClass, parse_program, parse_raw_program, pretty_print
from mtcgen.minilang.ast import MethodRef, ast_equal
from mtcgen.minilang.corpus import load_corpus
from mtcgen.minilang.parser import parse_classes
from mtcgen.mutation import generate_mutants
from mtcgen.pipeline import run_pipeline
from mtcgen.skeleton import (
    EQ,
    FOLLOWUP_OUTPUT,
    MRSkeleton,
    NE,
    ORDER_LE,
    ORDER_LT,
    SOURCE_INPUT,
    compare,
    normalize_assertion,
)
from mtcgen.validation import (
    FILTERED,
    RETAINED,
    check_mtc_properties,
    decide,
    pass_rate,
    validate,
)
from test_minilang_interp import mirror_encrypt
from test_mutation import brute_force_count
from test_skeleton import random_skeleton

GOLDEN = Path(__file__).parent / "golden"


@contextmanager
def criterion(number: int, label: str):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {number:2d}: FAIL  {label}")
        raise
    elapsed = time.perf_counter() - started
    print(f"criterion {number:2d}: PASS  {label} ({elapsed:.1f}s)")


@pytest.fixture(scope="module")
def double_run(tmp_path_factory):
    """Two full replay-mode pipeline runs plus wall-clock, shared by the
    determinism and seeded-bug criteria."""
    out1 = tmp_path_factory.mktemp("run1")
    out2 = tmp_path_factory.mktemp("run2")
    started = time.perf_counter()
    run1 = run_pipeline(e2e_config(str(out1)))
    run2 = run_pipeline(e2e_config(str(out2)))
    elapsed = time.perf_counter() - started
    return run1, run2, elapsed, out1


def test_criterion_1_coupling_oracle_equivalence():
    with criterion(1, "coupling analysis matches brute-force oracle on 1000 classes"):
        started = time.perf_counter()
        mismatches = 0
        for seed in range(1000):
            source = random_class_source(seed, max_methods=12, max_fields=6)
            program = parse_program([("<gen>", source)])
            assert not isinstance(program, DiagnosticList), source
            cls = program.classes[0]
            for decl in cls.methods:
                target = MethodRef.of(cls.name, decl)
                got = normalize_analyzer_output(analyze_coupling(program, target))
                want = oracle_coupling(cls, decl)
                if got != want:
                    mismatches += 1
        elapsed = time.perf_counter() - started
        assert mismatches == 0
        assert elapsed < 30.0, f"oracle suite took {elapsed:.1f}s"


def test_criterion_2_paper_example_coupling(tmp_path):
    with criterion(2, "AES pair carries INTENTION('text') + SHARED_CALLS, golden match"):
        out = tmp_path / "analyze.json"
        code = cli_main(
            [
                "analyze",
                "--corpus",
                str(bundled_corpus_path("aes")),
                "--target",
                "AESCodec.encryptText",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        produced = out.read_text(encoding="utf-8")
        golden = (GOLDEN / "analyze_encryptText.json").read_text(encoding="utf-8")
        assert produced == golden  # exact golden-file match
        pairs = json.loads(produced)
        decrypt_pair = next(
            p for p in pairs if p["candidate"].startswith("AESCodec.decryptText(")
        )
        intention = next(
            f for f in decrypt_pair["features"] if f["category"] == "INTENTION"
        )
        assert "text" in intention["evidence"]["sharedTokens"]
        assert any(
            f["label"] == "SHARED_CALLS" and f["category"] == "BEHAVIOR"
            for f in decrypt_pair["features"]
        )


def test_criterion_3_filter_rule_truth_table():
    with criterion(3, "retain/filter rule: worked examples + exhaustive grid"):
        assert decide(0.8, [0.2]) == RETAINED
        assert decide(0.2, [1.0]) == FILTERED
        assert decide(1.0, [1.0]) == RETAINED
        for p_frac in [Fraction(i, 5) for i in range(6)]:
            for q_frac in [Fraction(j, 5) for j in range(6)]:
                p, q = float(p_frac), float(q_frac)
                expected = RETAINED if (p > q or (p == q == 1.0)) else FILTERED
                assert decide(p, [q]) == expected, (p, q)


def test_criterion_4_end_to_end_deterministic(double_run):
    with criterion(4, "replay pipeline: byte-identical double run, retained round trip"):
        run1, run2, elapsed, _ = double_run
        assert run1.render_report() == run2.render_report()
        assert elapsed < 60.0, f"double run took {elapsed:.1f}s"
        expected = MRSkeleton(
            method_pair=frozenset({ENC, DEC}),
            input_relation=(),
            assertion_kind=EQ,
            assertion_elements=tuple(sorted((SOURCE_INPUT, FOLLOWUP_OUTPUT))),
        )
        retained = [
            record
            for task in run1.reports
            for pair in task.pairs
            for record in pair.candidates
            if record.decision == RETAINED and record.skeleton is not None
        ]
        matching = [r for r in retained if compare(r.skeleton, expected).l2]
        assert matching, "no retained MTC matches the round-trip skeleton"
        assert any("p > p'" in r.reason for r in matching)


def test_criterion_5_seeded_bug_detection(double_run):
    with criterion(5, "retained round trip reveals the wrong-key fault"):
        _, _, _, out_dir = double_run
        amplified_path = next(
            p
            for p in out_dir.rglob("amplified.mini")
            if "decryptText_list_int_string" in str(p.parent.parent)
        )
        decls, _ = parse_classes(amplified_path.read_text(encoding="utf-8"), str(amplified_path))
        amplified = TestClass.from_decl(decls[0], str(amplified_path))
        buggy = load_corpus(bundled_corpus_path("aes_wrong_key"))
        fixed = load_corpus(bundled_corpus_path("aes"))
        assert not isinstance(buggy, DiagnosticList)
        assert not isinstance(fixed, DiagnosticList)
        p_buggy = pass_rate(buggy.program, amplified)
        p_fixed = pass_rate(fixed.program, amplified)
        assert p_buggy < 1.0, "bug not revealed"
        assert p_fixed == 1.0, "round trip must pass on the fixed version"


def test_criterion_6_invalid_mr_filtered(aes_corpus):
    with criterion(6, "invalid equivalence MR filtered, citing the abecedarium mutant"):
        amplified = load_fixture_test_class("invalid_equivalence_amplified.mini")
        mutants = generate_mutants(aes_corpus.program, (ENC, ENC_WA), cap=200, seed=7)
        from mtcgen.minilang import Limits

        verdict = validate(
            amplified, aes_corpus.program, mutants, Limits(max_steps=60_000)
        )
        assert verdict.p == pytest.approx(0.2)
        assert verdict.decision == FILTERED
        assert "p < p'" in verdict.reason
        assert "book = abecedarium;" in verdict.reason
        cited = verdict.reason.split("mutant ")[1].split(" ")[0]
        mutant = next(m for m in mutants if m.id == cited)
        assert mutant.operator == "SDL"
        assert "abecedarium" in mutant.diff_token[0]


def test_criterion_7_mutation_enumeration_oracle():
    with criterion(7, "mutant enumeration matches brute force on reference bodies"):
        bodies = [
            "int x = a + b; x = x * 2; print(x); return x - 1;",
            "int y = 0; while (y < b) { y = y + a; } return y;",
            "if (a >= b && a != 0) { print(a); } return a % 7;",
        ]
        from collections import Counter

        for body in bodies:
            program = parse_program(
                [
                    (
                        "<ref>",
                        f"class A {{ static int fa(int a, int b) {{ {body} }} "
                        f"static int fb(int a, int b) {{ return 0; }} }}",
                    )
                ]
            )
            assert not isinstance(program, DiagnosticList)
            pair = (
                MethodRef("A", "fa", ("int", "int")),
                MethodRef("A", "fb", ("int", "int")),
            )
            mutants = generate_mutants(program, pair, cap=1000, seed=0)
            got = Counter(m.operator for m in mutants if m.method.name == "fa")
            assert got == brute_force_count(body), body


def test_criterion_8_mtc_property_check(aes_corpus):
    with criterion(8, "MTC necessary properties on committed fixtures"):
        from conftest import B64_LONG, B64_SHORT, BOX_GET, BOX_INSERT

        positive = [
            ("mtc_properties/positive_roundtrip.mini", (ENC, DEC)),
            ("mtc_properties/positive_equivalence.mini", (B64_SHORT, B64_LONG)),
            ("mtc_properties/positive_box.mini", (BOX_INSERT, BOX_GET)),
        ]
        negative = [
            ("mtc_properties/negative_single_call.mini", (ENC, DEC)),
            ("mtc_properties/negative_constant_assertion.mini", (ENC, DEC)),
            ("mtc_properties/negative_unrelated_assertion.mini", (ENC, DEC)),
        ]
        for name, pair in positive:
            report = check_mtc_properties(
                load_fixture_test_class(name), pair, aes_corpus.program
            )
            assert report.is_mtc, name
        for name, pair in negative:
            report = check_mtc_properties(
                load_fixture_test_class(name), pair, aes_corpus.program
            )
            assert not report.is_mtc, name


def test_criterion_9_skeleton_laws():
    with criterion(9, "skeleton laws: L2=>L1, normalization table, compare laws"):
        started = time.perf_counter()
        rng = random.Random(7)
        skeletons = [random_skeleton(rng) for _ in range(500)]
        for a, b in zip(skeletons, reversed(skeletons)):
            result = compare(a, b)
            assert not (result.l2 and not result.l1)
            backward = compare(b, a)
            assert result.l1 == backward.l1 and result.l2 == backward.l2
        for skeleton in skeletons[:50]:
            self_compare = compare(skeleton, skeleton)
            assert self_compare.l1 and self_compare.l2

        def assertion_of(src: str):
            decls, _ = parse_classes(
                f"class T {{ @Test void t() {{ {src}; }} }}", "<t>"
            )
            return decls[0].methods[0].body.stmts[0].expr

        table = [
            ("assertTrue(x == y)", EQ),
            ("assertFalse(x == y)", NE),
            ("assertEquals(x, y)", EQ),
            ("assertNotEquals(x, y)", NE),
            ("assertTrue(x != y)", NE),
            ("assertFalse(x != y)", EQ),
            ("assertTrue(x < y)", ORDER_LT),
            ("assertTrue(x <= y)", ORDER_LE),
        ]
        for src, kind in table:
            assert normalize_assertion(assertion_of(src)).kind == kind, src
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"skeleton suite took {elapsed:.1f}s"


def test_criterion_10_interpreter_parser_soundness(aes_corpus):
    with criterion(10, "round trip on 1000 random ASTs + corpus oracle values"):
        started = time.perf_counter()
        for seed in range(1000):
            program = random_program(seed)
            text = pretty_print(program)
            reparsed = parse_raw_program([("<gen>", text)])
            assert not isinstance(reparsed, DiagnosticList), f"seed {seed}"
            assert ast_equal(reparsed.classes, program.classes), f"seed {seed}"

        cls = aes_corpus.program.class_named("AESCodec")
        abecedarium = next(
            f.init.value for f in cls.fields if f.name == "defaultAbecedarium"
        )
        for text, key in [("Hello AES!", "s3cretWord"), ("~!@", "K3y"), ("", "K3y")]:
            expected = mirror_encrypt(text, key, abecedarium)
            literal = "[" + ", ".join(str(v) for v in expected) + "]"
            decls, _ = parse_classes(
                f'class T {{ @Test void t() {{ assertEquals(AESCodec.encryptText("{text}", "{key}"), {literal}); }} }}',
                "<t>",
            )
            from mtcgen.minilang import run_test_class

            outcomes = run_test_class(
                aes_corpus.program, TestClass.from_decl(decls[0])
            )
            assert outcomes["t"].kind == "PASS", (text, key)
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0, f"soundness suite took {elapsed:.1f}s"
