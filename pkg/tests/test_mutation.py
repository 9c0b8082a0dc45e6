"""Mutation engine: operator tables, typing filter, single-edit property,
deterministic capping, and enumeration counts against brute force."""

from __future__ import annotations

from collections import Counter

import pytest

from conftest import DEC, ENC
from mtcgen.minilang import DiagnosticList, parse_program, pretty_print
from mtcgen.minilang.ast import MethodRef
from mtcgen.minilang.lexer import tokenize
from mtcgen.mutation import generate_mutants, mutant_diff


def program_of(text: str):
    program = parse_program([("<s>", text)])
    assert not isinstance(program, DiagnosticList), program.render()
    return program


def pair_program(body_a: str, body_b: str = "return 0;"):
    return program_of(
        f"class A {{ static int fa(int a, int b) {{ {body_a} }} "
        f"static int fb(int a, int b) {{ {body_b} }} }}"
    )


PAIR = (MethodRef("A", "fa", ("int", "int")), MethodRef("A", "fb", ("int", "int")))


# ── operator tables ───────────────────────────────────────────────────────────


def test_aor_on_plus_yields_four_mutants():
    program = pair_program("return a + b;")
    mutants = generate_mutants(program, PAIR, cap=100, seed=0)
    aor = [m for m in mutants if m.operator == "AOR"]
    assert len(aor) == 4
    assert {m.diff_token for m in aor} == {
        ("+", "-"), ("+", "*"), ("+", "/"), ("+", "%")
    }


def test_empty_bodies_yield_no_mutants():
    program = program_of(
        "class A { static void fa() { } static void fb() { } }"
    )
    pair = (MethodRef("A", "fa", ()), MethodRef("A", "fb", ()))
    assert generate_mutants(program, pair, cap=100, seed=0) == []


def test_ror_table_full_on_ints():
    program = pair_program("if (a < b) { return 1; } return 0;")
    rors = [m for m in generate_mutants(program, PAIR, cap=100, seed=0) if m.operator == "ROR"]
    assert {m.diff_token[1] for m in rors} == {"==", "!=", "<=", ">", ">="}


def test_ror_on_strings_keeps_only_typed_replacements():
    program = program_of(
        'class A { static bool fa(string s) { return s == "x"; } '
        "static bool fb(string s) { return false; } }"
    )
    pair = (MethodRef("A", "fa", ("string",)), MethodRef("A", "fb", ("string",)))
    rors = [m for m in generate_mutants(program, pair, cap=100, seed=0) if m.operator == "ROR"]
    # string relationals do not type-check, so only != survives
    assert {m.diff_token[1] for m in rors} == {"!="}


def test_cor_swaps_logical_operators():
    program = program_of(
        "class A { static bool fa(bool p, bool q) { return p && q; } "
        "static bool fb(bool p, bool q) { return p || q; } }"
    )
    pair = (MethodRef("A", "fa", ("bool", "bool")), MethodRef("A", "fb", ("bool", "bool")))
    cors = [m for m in generate_mutants(program, pair, cap=100, seed=0) if m.operator == "COR"]
    assert {m.diff_token for m in cors} == {("&&", "||"), ("||", "&&")}


def test_lvr_int_bool_string_rules():
    program = program_of(
        'class A { static int fa() { int k = 5; bool flag = true; string s = "hi"; return k; } '
        "static int fb() { int z = 0; return z; } }"
    )
    pair = (MethodRef("A", "fa", ()), MethodRef("A", "fb", ()))
    lvrs = [m for m in generate_mutants(program, pair, cap=100, seed=0) if m.operator == "LVR"]
    diffs = {m.diff_token for m in lvrs}
    assert {("5", "6"), ("5", "4"), ("5", "0")} <= diffs
    assert ("true", "false") in diffs
    assert ('"hi"', '""') in diffs
    # 0 only mutates to 1 and -1; "" has no replacement
    zero_targets = {after for before, after in diffs if before == "0"}
    assert zero_targets == {"1", "-1"}
    assert not any(before == '""' for before, _ in diffs)


def test_sdl_deletes_assignments_and_expression_statements_only():
    program = program_of(
        """
class A {
    static int fa(int a) {
        int x = a;
        x = x + 1;
        print(x);
        if (x > 0) {
            return x;
        }
        return 0;
    }
    static int fb(int a) { return a; }
}
"""
    )
    pair = (MethodRef("A", "fa", ("int",)), MethodRef("A", "fb", ("int",)))
    sdls = [m for m in generate_mutants(program, pair, cap=100, seed=0) if m.operator == "SDL"]
    deleted = {m.diff_token[0] for m in sdls}
    assert deleted == {"x = (x + 1);", "print(x);"}  # not the var-decl/if/return


# ── structural properties ─────────────────────────────────────────────────────


def _token_values(text: str):
    return [t.value for t in tokenize(text)]


def one_token_span_diff(before: str, after: str) -> bool:
    """Exactly one contiguous differing token span, and a small one: an
    operator or literal swap (a couple of tokens; `-1` prints as two) or a
    whole deleted statement."""
    a, b = _token_values(before), _token_values(after)
    prefix = 0
    while prefix < len(a) and prefix < len(b) and a[prefix] == b[prefix]:
        prefix += 1
    suffix = 0
    while (
        suffix < len(a) - prefix
        and suffix < len(b) - prefix
        and a[len(a) - 1 - suffix] == b[len(b) - 1 - suffix]
    ):
        suffix += 1
    a_span = len(a) - prefix - suffix
    b_span = len(b) - prefix - suffix
    if a_span == 0 and b_span == 0:
        return False  # identical: not a mutant at all
    if b_span == 0:
        return True  # SDL: one deleted statement span
    return a_span <= 2 and b_span <= 2


def test_mutants_differ_in_one_token_span(aes_corpus):
    original = pretty_print(aes_corpus.program)
    mutants = generate_mutants(aes_corpus.program, (ENC, DEC), cap=200, seed=0)
    assert mutants, "expected mutants for the AES pair"
    for mutant in mutants:
        assert one_token_span_diff(original, pretty_print(mutant.program)), mutant.id


def test_mutants_type_check(aes_corpus):
    for mutant in generate_mutants(aes_corpus.program, (ENC, DEC), cap=50, seed=3):
        assert mutant.program.type_info is not None


def test_seeded_sampling_deterministic(aes_corpus):
    first = generate_mutants(aes_corpus.program, (ENC, DEC), cap=10, seed=42)
    second = generate_mutants(aes_corpus.program, (ENC, DEC), cap=10, seed=42)
    assert [(m.operator, m.target_nid, m.diff_token) for m in first] == [
        (m.operator, m.target_nid, m.diff_token) for m in second
    ]
    other = generate_mutants(aes_corpus.program, (ENC, DEC), cap=10, seed=43)
    assert [(m.target_nid, m.diff_token) for m in first] != [
        (m.target_nid, m.diff_token) for m in other
    ]


def test_cap_limits_count(aes_corpus):
    assert len(generate_mutants(aes_corpus.program, (ENC, DEC), cap=5, seed=0)) == 5


def test_ids_sequential_in_enumeration_order(aes_corpus):
    mutants = generate_mutants(aes_corpus.program, (ENC, DEC), cap=15, seed=1)
    assert [m.id for m in mutants] == [f"m{i:03d}" for i in range(1, 16)]


def test_mutant_diff_shows_single_line_change(aes_corpus):
    mutant = generate_mutants(aes_corpus.program, (ENC, DEC), cap=1, seed=0)[0]
    diff = mutant_diff(aes_corpus.program, mutant)
    removed = [l for l in diff.splitlines() if l.startswith("-") and not l.startswith("---")]
    added = [l for l in diff.splitlines() if l.startswith("+") and not l.startswith("+++")]
    assert len(removed) <= 1 and len(added) <= 1


# ── brute-force enumeration counts ────────────────────────────────────────────

ARITH_OPS = {"+", "-", "*", "/", "%"}
REL_INT_OPS = {"<", "<=", ">", ">="}
EQ_OPS = {"==", "!="}
LOGIC_OPS = {"&&", "||"}


def brute_force_count(body: str, helper: str = "return 0;") -> Counter:
    """Count expected mutants per operator straight from the token stream of
    a body with int-typed data only (every swap type-checks)."""
    counts: Counter = Counter()
    tokens = _token_values(body)
    for value in tokens:
        if value in ARITH_OPS:
            counts["AOR"] += 4
        elif value in REL_INT_OPS or value in EQ_OPS:
            counts["ROR"] += 5
        elif value in LOGIC_OPS:
            counts["COR"] += 1
    for i, value in enumerate(tokens):
        if value.isdigit():
            k = int(value)
            counts["LVR"] += 2 if k in (0, 1) else 3  # 0->{1,-1}; 1->{2,0}
    counts["SDL"] += body.count(";") - body.count("return") - body.count("int ")
    return counts


@pytest.mark.parametrize(
    "body",
    [
        "int x = a + b; x = x * 2; print(x); return x - 1;",
        "int y = 0; while (y < b) { y = y + a; } return y;",
        "if (a >= b && a != 0) { print(a); } return a % 7;",
    ],
)
def test_enumeration_matches_brute_force(body):
    program = pair_program(body)
    mutants = generate_mutants(program, PAIR, cap=1000, seed=0)
    got = Counter(m.operator for m in mutants if m.method.name == "fa")
    assert got == brute_force_count(body)


def test_aes_pair_count_matches_hand_enumeration(aes_corpus):
    # Hand count over the two bodies (string '+' swaps are type-rejected):
    #   encryptText:  AOR 3x4, ROR 2x5, LVR 2+2+2+1(throw msg), SDL 2
    #   decryptText:  AOR 5x4, ROR 1x5, LVR 2+2,                SDL 2
    mutants = generate_mutants(aes_corpus.program, (ENC, DEC), cap=1000, seed=0)
    got = Counter(m.operator for m in mutants)
    assert got == Counter({"AOR": 32, "ROR": 15, "LVR": 11, "SDL": 4})
    assert len(mutants) == 62
