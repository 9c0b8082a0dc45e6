"""mtcgen: metamorphic test case generation for Mini corpora.

Pipeline: identify functionally coupled method pairs, prompt an LLM to
construct metamorphic test cases over them, refine non-executable
candidates, amplify accepted candidates with additional inputs, and
validate them with mutation analysis.
"""

from __future__ import annotations

from pathlib import Path

__version__ = "0.1.0"

_DATA_DIR = Path(__file__).parent / "_data"


def bundled_corpus_path(name: str = "aes") -> Path:
    """Path of a bundled corpus directory (e.g. "aes", "aes_wrong_key")."""
    return _DATA_DIR / "corpus" / name


def bundled_fixture_path(name: str) -> Path:
    """Path of a bundled fixture file under the package data directory."""
    return _DATA_DIR / "fixtures" / name
