from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO_ROOT / "tools"))

from mtcgen import bundled_corpus_path, bundled_fixture_path
from mtcgen.minilang.ast import MethodRef
from mtcgen.minilang.corpus import Corpus, load_corpus
from mtcgen.minilang.diagnostics import DiagnosticList
from mtcgen.minilang.interp import TestClass
from mtcgen.minilang.parser import parse_classes


@pytest.fixture(scope="session")
def aes_corpus() -> Corpus:
    corpus = load_corpus(bundled_corpus_path("aes"))
    assert not isinstance(corpus, DiagnosticList), corpus.render()
    return corpus


@pytest.fixture(scope="session")
def buggy_corpus() -> Corpus:
    corpus = load_corpus(bundled_corpus_path("aes_wrong_key"))
    assert not isinstance(corpus, DiagnosticList), corpus.render()
    return corpus


ENC = MethodRef("AESCodec", "encryptText", ("string", "string"))
DEC = MethodRef("AESCodec", "decryptText", ("list<int>", "string"))
ENC_WA = MethodRef(
    "AESCodec", "encryptTextWithAbecedarium", ("string", "string", "string")
)
DEC_WA = MethodRef(
    "AESCodec", "decryptTextWithAbecedarium", ("list<int>", "string", "string")
)
B64_SHORT = MethodRef("Transcoder", "base642bytes", ("string",))
B64_LONG = MethodRef("Transcoder", "base642bytes", ("string", "string"))
BOX_INSERT = MethodRef("Box", "insertElement", ("string",))
BOX_GET = MethodRef("Box", "getElements", ())


def load_fixture_test_class(name: str) -> TestClass:
    path = bundled_fixture_path(name)
    decls, _ = parse_classes(path.read_text(encoding="utf-8"), str(path))
    return TestClass.from_decl(decls[0], str(path))
