"""Diagnostics for parsing and type checking.

All front-end failures are reported as Diagnostic values with a stable
error code; nothing in the front end raises for bad input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

PARSE_ERROR = "PARSE_ERROR"
UNRESOLVED_SYMBOL = "UNRESOLVED_SYMBOL"
TYPE_MISMATCH = "TYPE_MISMATCH"
DUPLICATE_DECL = "DUPLICATE_DECL"


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    code: str
    message: str

    def render(self) -> str:
        return f"{self.path}:{self.line}: {self.code}: {self.message}"


@dataclass
class DiagnosticList:
    items: list[Diagnostic] = field(default_factory=list)

    def add(self, path: str, line: int, code: str, message: str) -> None:
        self.items.append(Diagnostic(path, line, code, message))

    def extend(self, other: "DiagnosticList") -> None:
        self.items.extend(other.items)

    def codes(self) -> set[str]:
        return {d.code for d in self.items}

    def render(self) -> str:
        return "\n".join(d.render() for d in self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)
