"""MTC generation: prompt assembly, reply extraction, refinement, and
input amplification.

The prompt is a fixed six-section bundle (system role, paired-method code,
coupling features, invocation examples, class skeleton, deliverable
template); identical inputs produce byte-identical bundles. Repeated
generation forks one session holding the system message so all attempts
share the same context prefix.

Refinement is bounded: one LLM revision round driven by the diagnostics,
then one static repair pass that rebinds unresolved identifiers when
exactly one corpus declaration matches case-insensitively (the
ambiguous-or-absent case stays failed). The static pass replaces import
injection, which has no analog here: the corpus is a closed world, so a
unique case-insensitive match is the strongest safe rebinding.

Amplification appends to the same conversation and keeps only reply tests
that follow the MTC_input<k> naming convention (k within 1..M, distinct)
and invoke both pair methods; if fewer than two survive, the original
single test is wrapped as MTC_input1 and the result is marked degraded so
validation always receives the same shape.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field

from .coupling import CoupledPair, feature_summary
from .facts import retrieve_invocation_examples
from .gateway import (
    ChatSession,
    FixtureMiss,
    Provider,
    ProviderConfig,
    ProviderUnavailable,
    fork,
    new_session,
    send,
)
from .minilang import ast
from .minilang.ast import MethodRef, Program
from .minilang.corpus import Corpus
from .minilang.diagnostics import DiagnosticList, UNRESOLVED_SYMBOL
from .minilang.interp import (
    CLASS_LEVEL_KEY,
    RUNTIME_ERROR,
    Limits,
    TestClass,
    check_test_class,
    run_test_class,
)
from .minilang.parser import ParseFailure, parse_classes
from .minilang.printer import print_class_skeleton, print_method

NO_CODE_BLOCK = "NO_CODE_BLOCK"
PARSE_FAILED = "PARSE_FAILED"
NO_TEST_METHODS = "NO_TEST_METHODS"

STAGE_INITIAL = "initial"
STAGE_LLM_REVISION = "llm-revision"
STAGE_STATIC_REPAIR = "static-repair"

_TEST_NAME_RE = re.compile(r"^MTC_input([0-9]+)$")
_FENCE_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)
_SYMBOL_RE = re.compile(r"cannot find symbol '([^']+)'")


class ExtractionError(Exception):
    def __init__(self, kind: str, message: str, diagnostics: DiagnosticList | None = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.diagnostics = diagnostics or DiagnosticList()


@dataclass(frozen=True)
class GenerationConfig:
    k: int = 5  # generation attempts per pair
    m: int = 10  # amplification inputs
    max_examples_per_method: int = 3
    skeleton_byte_budget: int = 8192
    exclude_test_paths: tuple[str, ...] = ()
    limits: Limits = field(default_factory=Limits)


@dataclass(frozen=True)
class PromptBundle:
    system_message: str
    pair_code: str
    feature_text: str
    invocation_examples: str
    class_skeleton: str
    mtc_template: str
    skeleton_truncated: bool = False

    def render_user_prompt(self) -> str:
        return (
            "# Code of the paired methods\n"
            f"```\n{self.pair_code}```\n\n"
            "# Coupling features on the paired methods\n"
            f"{self.feature_text}\n"
            "# Invocation examples\n"
            f"{self.invocation_examples}\n\n"
            "# Skeleton of the container class\n"
            f"```\n{self.class_skeleton}```\n\n"
            "# Deliverable\n"
            f"{self.mtc_template}\n"
        )


@dataclass(frozen=True)
class RefinementEntry:
    stage: str  # initial | llm-revision | static-repair
    diagnostics: tuple[str, ...]  # empty means the stage left it executable


@dataclass
class CandidateMTC:
    pair: CoupledPair
    test_class: TestClass | None
    attempt: int
    refinement_log: tuple[RefinementEntry, ...]
    session: ChatSession
    code_text: str | None = None  # last extracted fenced block, for repair

    @property
    def executable_candidate(self) -> bool:
        return self.test_class is not None


@dataclass
class AmplifiedMTC:
    base: CandidateMTC
    test_class: TestClass
    m_requested: int
    degraded: bool = False

    @property
    def m_effective(self) -> int:
        return len(self.test_class.test_methods())


@dataclass
class GenerationResult:
    candidates: list[CandidateMTC]
    provider_errors: list[tuple[int, str]]  # (attempt, error)


SYSTEM_MESSAGE = (
    "You are an expert in Mini programming and metamorphic testing. Given a "
    "pair of functionally coupled methods from the class under test, reason "
    "about a metamorphic relation over their behaviors and write one concrete "
    "metamorphic test case for it: construct a source input, invoke the first "
    "method, derive the follow-up input, invoke the second method, and assert "
    "the expected relation over the inputs and outputs. Reply with exactly one "
    "complete Mini test class inside a fenced code block. Use the builtins "
    "assertEquals, assertNotEquals, assertTrue, assertFalse for the relation."
)

MTC_TEMPLATE = (
    "```\n"
    "class PairMTC {\n"
    "    @Test\n"
    "    void MTC() {\n"
    "        // 1. construct the source input\n"
    "        // 2. invoke the first paired method\n"
    "        // 3. derive the follow-up input\n"
    "        // 4. invoke the second paired method\n"
    "        // 5. assert the output relation\n"
    "    }\n"
    "}\n"
    "```"
)

NO_EXAMPLES_TEXT = "(no invocation examples available in the corpus tests)"


def build_prompt(
    pair: CoupledPair, corpus: Corpus, config: GenerationConfig | None = None
) -> PromptBundle:
    """Deterministic six-section bundle for one coupled pair."""
    config = config or GenerationConfig()
    program = corpus.program
    target_decl = program.method_decl(pair.target)
    candidate_decl = program.method_decl(pair.candidate)
    assert target_decl is not None and candidate_decl is not None
    pair_code = print_method(target_decl, depth=0) + "\n" + print_method(
        candidate_decl, depth=0
    ) + "\n"

    examples = retrieve_invocation_examples(
        corpus,
        (pair.target, pair.candidate),
        max_per_method=config.max_examples_per_method,
        exclude_paths=config.exclude_test_paths,
    )
    if examples:
        blocks = []
        for i, example in enumerate(examples, start=1):
            blocks.append(
                f"## Example {i} (invokes {example.invoked_ref.name})\n"
                f"```\n{example.test_method_source}\n```"
            )
        examples_text = "\n".join(blocks)
    else:
        examples_text = NO_EXAMPLES_TEXT

    container = program.class_named(pair.target.class_name)
    assert container is not None
    skeleton = print_class_skeleton(container)
    truncated = False
    budget = config.skeleton_byte_budget
    if len(skeleton.encode("utf-8")) > budget:
        truncated = True
        skeleton = skeleton.encode("utf-8")[:budget].decode("utf-8", errors="ignore")
        skeleton += "\n// [skeleton truncated]\n"

    return PromptBundle(
        system_message=SYSTEM_MESSAGE,
        pair_code=pair_code,
        feature_text=feature_summary(pair),
        invocation_examples=examples_text,
        class_skeleton=skeleton,
        mtc_template=MTC_TEMPLATE,
        skeleton_truncated=truncated,
    )


# ── reply extraction ──────────────────────────────────────────────────────────


def first_code_block(reply: str) -> str:
    match = _FENCE_RE.search(reply)
    if match:
        return match.group(1)
    stripped = reply.strip()
    if stripped.startswith("class "):
        return stripped  # whole-reply code without fences
    raise ExtractionError(NO_CODE_BLOCK, "reply contains no fenced code block")


def extract_test_class(reply: str, program: Program) -> TestClass:
    """Parse the first fenced code block as a standalone Mini test class and
    type-check it against the program."""
    code = first_code_block(reply)
    try:
        decls, _ = parse_classes(code, "<reply>")
    except ParseFailure as e:
        diags = DiagnosticList()
        diags.add("<reply>", e.line, "PARSE_ERROR", e.message)
        raise ExtractionError(PARSE_FAILED, e.message, diags) from e
    if not decls:
        raise ExtractionError(PARSE_FAILED, "code block declares no class")
    decl = decls[0]
    if not any(m.is_test() for m in decl.methods):
        raise ExtractionError(NO_TEST_METHODS, "class has no @Test methods")
    test_class = TestClass.from_decl(decl, path="<reply>")
    info, diags = check_test_class(program, test_class)
    if info is None:
        raise ExtractionError(PARSE_FAILED, "class does not type-check", diags)
    return test_class


# ── refinement ────────────────────────────────────────────────────────────────


def _diag_strings(diags: DiagnosticList) -> tuple[str, ...]:
    return tuple(d.render() for d in diags)


def _runs_only_runtime_errors(
    test_class: TestClass, program: Program, limits: Limits
) -> tuple[bool, tuple[str, ...]]:
    outcomes = run_test_class(program, test_class, limits)
    if CLASS_LEVEL_KEY in outcomes:
        return True, (outcomes[CLASS_LEVEL_KEY].message,)
    kinds = {o.kind for o in outcomes.values()}
    if kinds == {RUNTIME_ERROR}:
        return True, tuple(
            f"{name}: {o.message}" for name, o in sorted(outcomes.items())
        )
    return False, ()


def needs_refinement(
    candidate: CandidateMTC, program: Program, limits: Limits
) -> tuple[bool, tuple[str, ...]]:
    """Refine when compilation failed or every test hits a runtime error;
    assertion failures are signal, not breakage, and are left alone."""
    if candidate.test_class is None:
        last = candidate.refinement_log[-1] if candidate.refinement_log else None
        return True, last.diagnostics if last else ()
    return _runs_only_runtime_errors(candidate.test_class, program, limits)


def _declaration_index(program: Program) -> dict[str, set[str]]:
    """lowercased name -> declared spellings (classes, methods, fields)."""
    index: dict[str, set[str]] = {}
    for cls in program.classes:
        index.setdefault(cls.name.lower(), set()).add(cls.name)
        for method in cls.methods:
            index.setdefault(method.name.lower(), set()).add(method.name)
        for fld in cls.fields:
            index.setdefault(fld.name.lower(), set()).add(fld.name)
    return index


def static_symbol_repair(
    code_text: str, diagnostics: tuple[str, ...], program: Program
) -> str | None:
    """Rebind unresolved identifiers with a unique case-insensitive corpus
    match; returns the repaired source or None when nothing could change."""
    unresolved = set()
    for diag in diagnostics:
        unresolved.update(_SYMBOL_RE.findall(diag))
    if not unresolved:
        return None
    index = _declaration_index(program)
    repaired = code_text
    changed = False
    for name in sorted(unresolved):
        spellings = index.get(name.lower(), set())
        if len(spellings) != 1:
            continue  # absent or ambiguous: leave it failed
        (spelling,) = spellings
        if spelling == name:
            continue
        repaired = re.sub(rf"\b{re.escape(name)}\b", spelling, repaired)
        changed = True
    return repaired if changed else None


def refine(
    candidate: CandidateMTC,
    session: ChatSession,
    provider: Provider,
    program: Program,
    limits: Limits | None = None,
) -> CandidateMTC:
    """One LLM revision round, then one static repair round; a candidate
    that still fails is returned as-is, marked by its log."""
    limits = limits or Limits()
    log = list(candidate.refinement_log)
    if any(entry.stage != STAGE_INITIAL for entry in log):
        return candidate  # the refinement budget is already spent
    failing, diagnostics = needs_refinement(candidate, program, limits)
    if not failing:
        return candidate

    test_class = candidate.test_class
    code_text = candidate.code_text

    # Stage 1: hand the diagnostics back for a revision.
    revision_diags: tuple[str, ...] = diagnostics
    try:
        message = (
            "The test class failed to execute. Diagnostics:\n"
            + "\n".join(diagnostics or ("(no diagnostics were produced)",))
            + "\nReturn a corrected complete Mini test class in a fenced code block."
        )
        reply = send(session, provider, message)
        try:
            code_text = first_code_block(reply)
        except ExtractionError:
            pass  # keep the previous text for the static stage
        try:
            test_class = extract_test_class(reply, program)
            still_failing, run_diags = _runs_only_runtime_errors(
                test_class, program, limits
            )
            revision_diags = run_diags if still_failing else ()
        except ExtractionError as e:
            test_class = None
            revision_diags = _diag_strings(e.diagnostics) or (e.message,)
        log.append(RefinementEntry(STAGE_LLM_REVISION, revision_diags))
    except (FixtureMiss, ProviderUnavailable) as e:
        log.append(RefinementEntry(STAGE_LLM_REVISION, (f"provider error: {e}",)))
        revision_diags = diagnostics

    resolved = test_class is not None and not revision_diags
    # Stage 2: static repair, only for unresolved-symbol failures.
    if not resolved and any(UNRESOLVED_SYMBOL in d for d in revision_diags) and code_text:
        repaired = static_symbol_repair(code_text, revision_diags, program)
        if repaired is not None:
            try:
                repaired_class = extract_test_class(f"```\n{repaired}\n```", program)
                test_class = repaired_class
                code_text = repaired
                log.append(RefinementEntry(STAGE_STATIC_REPAIR, ()))
                resolved = True
            except ExtractionError as e:
                log.append(
                    RefinementEntry(
                        STAGE_STATIC_REPAIR, _diag_strings(e.diagnostics) or (e.message,)
                    )
                )
        else:
            log.append(
                RefinementEntry(
                    STAGE_STATIC_REPAIR, ("no unique case-insensitive rebinding",)
                )
            )

    return CandidateMTC(
        pair=candidate.pair,
        test_class=test_class,
        attempt=candidate.attempt,
        refinement_log=tuple(log),
        session=session,
        code_text=code_text,
    )


# ── amplification ─────────────────────────────────────────────────────────────


def _amplify_instruction(m: int) -> str:
    return (
        "Review this conversation and the metamorphic test case you produced. "
        f"Apply the same metamorphic relation to {m} new inputs, replacing the "
        "original input: use boundary values, random-looking data, and special "
        "characters. Reply with one complete Mini test class containing the new "
        f"test cases, named MTC_input1() through MTC_input{m}(), one input per "
        "test, each invoking both paired methods."
    )


def _invokes_both(
    method: ast.MethodDecl, info, members: set[MethodRef]
) -> bool:
    called = set()
    for node in ast.walk(method.body):
        if isinstance(node, ast.Call):
            target = info.call_targets.get(node.nid)
            if target is not None and target.kind == "method":
                called.add(target.ref)
    return members <= called


def _wrap_original_as_input1(candidate: CandidateMTC) -> TestClass:
    assert candidate.test_class is not None
    decl = copy.deepcopy(candidate.test_class.decl)
    first_test = next(m for m in decl.methods if m.is_test())
    first_test.name = "MTC_input1"
    wrapped = ast.ClassDecl(decl.name, decl.fields, [first_test])
    return TestClass.from_decl(wrapped, path="<amplified>")


def amplify(
    candidate: CandidateMTC,
    session: ChatSession,
    provider: Provider,
    program: Program,
    m: int = 10,
) -> AmplifiedMTC:
    """Amplify a passing candidate with M new inputs on the same session.

    Never fails: unusable replies degrade to wrapping the original test as
    MTC_input1.
    """
    members = {candidate.pair.target, candidate.pair.candidate}
    try:
        reply = send(session, provider, _amplify_instruction(m))
        amplified = extract_test_class(reply, program)
    except (FixtureMiss, ProviderUnavailable, ExtractionError):
        return AmplifiedMTC(candidate, _wrap_original_as_input1(candidate), m, degraded=True)

    info, _ = check_test_class(program, amplified)
    assert info is not None  # extract_test_class already checked
    kept: dict[int, ast.MethodDecl] = {}
    for method in amplified.test_methods():
        match = _TEST_NAME_RE.match(method.name)
        if not match:
            continue
        k = int(match.group(1))
        if not 1 <= k <= m or k in kept:
            continue
        if not _invokes_both(method, info, members):
            continue
        kept[k] = method
    if len(kept) < 2:
        return AmplifiedMTC(candidate, _wrap_original_as_input1(candidate), m, degraded=True)
    ordered = [copy.deepcopy(kept[k]) for k in sorted(kept)]
    decl = ast.ClassDecl(amplified.decl.name, copy.deepcopy(amplified.decl.fields), ordered)
    test_class = TestClass.from_decl(decl, path="<amplified>")
    return AmplifiedMTC(candidate, test_class, m, degraded=False)


# ── repeated generation ───────────────────────────────────────────────────────


def generate_for_pair(
    pair: CoupledPair,
    corpus: Corpus,
    provider: Provider,
    provider_config: ProviderConfig,
    config: GenerationConfig | None = None,
) -> GenerationResult:
    """K attempts over forked sessions sharing the system-message prefix."""
    config = config or GenerationConfig()
    bundle = build_prompt(pair, corpus, config)
    user_prompt = bundle.render_user_prompt()
    base = new_session(provider_config, bundle.system_message)
    program = corpus.program

    candidates: list[CandidateMTC] = []
    errors: list[tuple[int, str]] = []
    for attempt in range(1, config.k + 1):
        session = fork(base)
        try:
            reply = send(session, provider, user_prompt)
        except (FixtureMiss, ProviderUnavailable) as e:
            errors.append((attempt, str(e)))
            continue
        try:
            code_text = None
            try:
                code_text = first_code_block(reply)
            except ExtractionError:
                pass
            test_class = extract_test_class(reply, program)
            candidate = CandidateMTC(
                pair, test_class, attempt, (RefinementEntry(STAGE_INITIAL, ()),),
                session, code_text,
            )
        except ExtractionError as e:
            candidate = CandidateMTC(
                pair,
                None,
                attempt,
                (RefinementEntry(STAGE_INITIAL, _diag_strings(e.diagnostics) or (e.message,)),),
                session,
                code_text,
            )
        failing, _ = needs_refinement(candidate, program, config.limits)
        if failing:
            candidate = refine(candidate, session, provider, program, config.limits)
        candidates.append(candidate)
    return GenerationResult(candidates, errors)
