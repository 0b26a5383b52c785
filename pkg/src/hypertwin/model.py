"""Shared data model: source files, spans, name sorts, occurrences, diagnostics.

Everything here is immutable after construction and safe to share between
concurrent tasks. Offsets are character offsets into the decoded file text,
so they always fall on UTF-8 character boundaries.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class NameSort(Enum):
    """The four name categories. Each sort has its own flat namespace, its
    own highlight class, and its own anchor-fragment prefix."""

    FUNCON = "funcon"
    SYNTAX = "syntax"
    SEMANTICS = "semantics"
    METAVAR = "var"


#: CSS class used to highlight occurrences of each sort.
HIGHLIGHT_CLASS: Mapping[NameSort, str] = {
    NameSort.FUNCON: "cbs-funcon",
    NameSort.SYNTAX: "cbs-syntax",
    NameSort.SEMANTICS: "cbs-semantics",
    NameSort.METAVAR: "cbs-var",
}

#: CSS class for references that did not resolve to any declaration.
UNRESOLVED_CLASS = "cbs-unresolved"

#: Human-readable label per sort, used in diagnostic messages.
SORT_LABEL: Mapping[NameSort, str] = {
    NameSort.FUNCON: "funcon",
    NameSort.SYNTAX: "syntax sort",
    NameSort.SEMANTICS: "semantic function",
    NameSort.METAVAR: "meta-variable",
}


class Role(Enum):
    DECLARATION = "declaration"
    REFERENCE = "reference"


class Context(Enum):
    FORMAL = "formal"
    EMBEDDED_IN_COMMENT = "embedded-in-comment"


@dataclass(frozen=True)
class SourceFile:
    """One input file: normalized project-relative path plus decoded text.

    ``path`` uses ``/`` separators and contains no ``.``/``..`` segments.
    ``id`` is a dense integer handle unique within one project load.
    """

    path: str
    text: str
    id: int
    line_starts: tuple[int, ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self) -> None:
        starts = [0]
        pos = self.text.find("\n")
        while pos != -1:
            starts.append(pos + 1)
            pos = self.text.find("\n", pos + 1)
        object.__setattr__(self, "line_starts", tuple(starts))


@dataclass(frozen=True, order=True)
class Span:
    """Half-open character range ``[start, end)`` within one source file."""

    file: int
    start: int
    end: int

    def slice(self, source: SourceFile) -> str:
        return source.text[self.start : self.end]


def line_col_of(source: SourceFile, offset: int) -> tuple[int, int]:
    """Map a character offset to a 1-based (line, column) pair.

    Lines are delimited by ``\\n``; the column counts characters from the
    last line start. ``offset == len(text)`` is allowed (end of file).
    """
    if not 0 <= offset <= len(source.text):
        raise ValueError(
            f"offset {offset} out of range for {source.path!r} "
            f"(length {len(source.text)})"
        )
    line = bisect.bisect_right(source.line_starts, offset) - 1
    return line + 1, offset - source.line_starts[line] + 1


@dataclass(frozen=True)
class NameOccurrence:
    """A single occurrence of a name in a file, classified by sort and role."""

    sort: NameSort
    name: str
    span: Span
    role: Role
    context: Context = Context.FORMAL


#: Fragment prefix per sort (also the sort token accepted by the CLI).
FRAGMENT_PREFIX: Mapping[NameSort, str] = {sort: sort.value for sort in NameSort}


def sanitize_fragment(sort: NameSort, name: str) -> str:
    """Build the anchor fragment identifying a declaration of ``name``.

    The result matches ``[a-z]+-[a-z0-9_-]+`` and is injective over names
    drawn from the mini-CBS lexical classes: lowercase letters, digits and
    ``-`` pass through, uppercase letters become ``_`` plus the lowercase
    letter, and any other character becomes ``_u`` plus its lowercase hex
    code point plus a closing ``_`` (the closing delimiter keeps e.g.
    ``T'`` and ``TU0027`` apart).
    """
    if not name:
        raise ValueError("name must be nonempty")
    out = [FRAGMENT_PREFIX[sort], "-"]
    for ch in name:
        if ch.islower() and ch.isascii() or ch.isdigit() and ch.isascii() or ch == "-":
            out.append(ch)
        elif ch.isupper() and ch.isascii():
            out.append("_" + ch.lower())
        else:
            out.append("_u%04x_" % ord(ch))
    return "".join(out)


@dataclass(frozen=True)
class Anchor:
    """Addressable location in the generated site: output file + fragment."""

    file: str
    fragment: str


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


#: Known diagnostic codes and their meanings.
DIAGNOSTIC_CODES: Mapping[str, str] = {
    "E001": "unresolved reference",
    "E002": "duplicate declaration",
    "E003": "arity mismatch",
    "E004": "sort mismatch",
    "E005": "parse error",
    "W001": "unused declaration",
}


@dataclass(frozen=True)
class Diagnostic:
    """Coded, span-located problem report. Severity is derived from the code."""

    code: str
    message: str
    span: Span
    related: Span | None = None

    def __post_init__(self) -> None:
        if self.code not in DIAGNOSTIC_CODES:
            raise ValueError(f"unknown diagnostic code {self.code!r}")

    @property
    def severity(self) -> Severity:
        return Severity.ERROR if self.code.startswith("E") else Severity.WARNING


def render_diagnostic(diag: Diagnostic, sources: Mapping[int, SourceFile]) -> str:
    """Render one diagnostic in the stable line format."""
    source = sources[diag.span.file]
    line, col = line_col_of(source, diag.span.start)
    return (
        f"{source.path}:{line}:{col}: "
        f"{diag.severity.value}[{diag.code}]: {diag.message}"
    )


def sort_diagnostics(
    diags: Iterable[Diagnostic], sources: Mapping[int, SourceFile]
) -> list[Diagnostic]:
    """Deterministic diagnostic order: by (file path, span start, code)."""
    return sorted(
        diags, key=lambda d: (sources[d.span.file].path, d.span.start, d.code)
    )
