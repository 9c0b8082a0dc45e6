"""Corpus loading.

A corpus directory holds production classes under `src/*.mini` and test
classes under `test/*.mini`, both UTF-8. Files are read in sorted path
order so that everything downstream (facts, example retrieval, prompts)
is a deterministic function of the corpus bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import parse_program
from .ast import Program
from .diagnostics import DiagnosticList
from .interp import TestClass, check_test_class
from .parser import ParseFailure, parse_classes
from .typecheck import TypeInfo


@dataclass
class CorpusTest:
    test_class: TestClass
    info: TypeInfo  # resolutions for the test class checked against the program


@dataclass
class Corpus:
    root: Path
    program: Program
    tests: list[CorpusTest] = field(default_factory=list)

    def test_paths(self) -> list[str]:
        return [t.test_class.path or "" for t in self.tests]


def _read_sources(directory: Path) -> list[tuple[str, str]]:
    if not directory.is_dir():
        return []
    return [
        (str(p), p.read_text(encoding="utf-8"))
        for p in sorted(directory.glob("*.mini"))
    ]


def load_corpus(root: Path | str) -> Corpus | DiagnosticList:
    """Load and check a corpus directory; all failures become diagnostics."""
    root = Path(root)
    src_sources = _read_sources(root / "src")
    if not src_sources:
        diags = DiagnosticList()
        diags.add(str(root / "src"), 0, "PARSE_ERROR", "no .mini sources found")
        return diags
    program = parse_program(src_sources)
    if isinstance(program, DiagnosticList):
        return program

    corpus = Corpus(root=root, program=program)
    diags = DiagnosticList()
    for path, text in _read_sources(root / "test"):
        try:
            decls, _ = parse_classes(text, path)
        except ParseFailure as e:
            diags.add(path, e.line, "PARSE_ERROR", e.message)
            continue
        for decl in decls:
            if not any(m.is_test() for m in decl.methods):
                continue  # helper classes in test files are not test classes
            test_class = TestClass.from_decl(decl, path)
            info, class_diags = check_test_class(program, test_class)
            if info is None:
                diags.extend(class_diags)
                continue
            corpus.tests.append(CorpusTest(test_class, info))
    if diags:
        return diags
    return corpus
