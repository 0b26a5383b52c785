"""Lexer and parser for mini-CBS source files.

The grammar is deterministic and newline-insensitive except that comments
are kept in the AST (including back-ticked embedded references) and every
name token becomes a :class:`NameOccurrence` with full span information.
Parse errors never abort: each failure produces an E005 diagnostic and the
parser resynchronizes at the next top-level keyword, comment, or EOF, so a
malformed block cannot suppress later blocks.

Lexical classes:

* funcon / type names       ``[a-z][a-z0-9]*(-[a-z0-9]+)*``
* syntax sort names         ``[A-Z][A-Za-z0-9]*``       (in syntax positions)
* semantic function names   same class as funcon names, distinguished by
                            the ``name[[ ... ]]`` application form
* meta-variables            ``[A-Z][A-Za-z0-9]*'*``     (in term positions)

``Funcon``, ``Alias``, ``Type``, ``Syntax``, ``Semantics``, ``Rule`` and
``Meta-variables`` are reserved keywords. Identifiers are ASCII-only;
non-ASCII characters outside comments and string literals are E005.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

from .model import (
    Context,
    Diagnostic,
    NameOccurrence,
    NameSort,
    Role,
    SourceFile,
    Span,
)

KEYWORDS = {
    "Funcon": "FUNCON",
    "Alias": "ALIAS",
    "Type": "TYPE",
    "Syntax": "SYNTAX",
    "Semantics": "SEMANTICS",
    "Rule": "RULE",
    "Meta-variables": "METAVARIABLES",
}

_KEYWORD_KINDS = frozenset(KEYWORDS.values())


class TokKind(Enum):
    LNAME = "LNAME"
    UNAME = "UNAME"
    INT = "INT"
    STRING = "STRING"
    FUNCON = "FUNCON"
    ALIAS = "ALIAS"
    TYPE = "TYPE"
    SYNTAX = "SYNTAX"
    SEMANTICS = "SEMANTICS"
    RULE = "RULE"
    METAVARIABLES = "METAVARIABLES"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    COLON = ":"
    EQ = "="
    BAR = "|"
    UNDERSCORE = "_"
    SQUIG = "~>"
    SUBSORT = "<:"
    PRODUCES = "::="
    COMPUTES = "=>"
    DASH2 = "--"
    ARROW = "->"
    DASHLINE = "----"
    LBRACKET2 = "[["
    RBRACKET2 = "]]"
    COMMENT = "COMMENT"
    EOF = "EOF"


@dataclass(frozen=True)
class CommentText:
    span: Span


@dataclass(frozen=True)
class CommentRef:
    """A back-ticked embedded reference; ``span`` covers the whole
    `` `...` `` group while ``occ.span`` covers just the name."""

    occ: NameOccurrence
    span: Span


CommentSegment = Union[CommentText, CommentRef]


@dataclass(frozen=True)
class Token:
    kind: TokKind
    span: Span
    text: str
    segments: tuple[CommentSegment, ...] = ()


def _is_lname_char(ch: str) -> bool:
    return ch.isascii() and (ch.islower() or ch.isdigit())


def _is_uname_char(ch: str) -> bool:
    return ch.isascii() and (ch.isalpha() or ch.isdigit())


_EMBEDDED_PREFIXES = {"Syntax": NameSort.SYNTAX, "Semantics": NameSort.SEMANTICS}


def _match_lname(text: str, pos: int) -> int:
    """End offset of an LNAME starting at ``pos``, or ``pos`` if none.

    A ``-`` is consumed only when followed by another name character, so
    ``--``/``->`` operators never glue onto a preceding name.
    """
    if pos >= len(text) or not (text[pos].isascii() and text[pos].islower()):
        return pos
    i = pos + 1
    while i < len(text):
        ch = text[i]
        if _is_lname_char(ch):
            i += 1
        elif ch == "-" and i + 1 < len(text) and _is_lname_char(text[i + 1]):
            i += 2
        else:
            break
    return i


def _match_uname(text: str, pos: int) -> int:
    """End offset of a UNAME (with trailing primes) starting at ``pos``."""
    if pos >= len(text) or not (text[pos].isascii() and text[pos].isupper()):
        return pos
    i = pos + 1
    while i < len(text) and _is_uname_char(text[i]):
        i += 1
    while i < len(text) and text[i] == "'":
        i += 1
    return i


def _full_name_match(text: str, sort: NameSort) -> bool:
    if not text:
        return False
    matcher = _match_uname if sort in (NameSort.SYNTAX, NameSort.METAVAR) else _match_lname
    return matcher(text, 0) == len(text)


class Lexer:
    """Single-pass tokenizer. Bad characters produce E005 and are skipped,
    so lexing always terminates after at most len(text) steps."""

    def __init__(self, source: SourceFile):
        self.source = source
        self.text = source.text
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []

    def _error(self, start: int, end: int, message: str) -> None:
        self.diagnostics.append(
            Diagnostic("E005", message, Span(self.source.id, start, end))
        )

    def tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind is TokKind.EOF:
                return out

    def _tok(self, kind: TokKind, start: int, end: int, segments=()) -> Token:
        return Token(kind, Span(self.source.id, start, end), self.text[start:end], segments)

    def _next(self) -> Token:
        text, n = self.text, len(self.text)
        while True:
            while self.pos < n and text[self.pos] in " \t\r\n":
                self.pos += 1
            if self.pos >= n:
                return self._tok(TokKind.EOF, n, n)
            start = self.pos
            ch = text[start]

            if ch == "/" and text.startswith("/*", start):
                return self._comment(start)

            if ch.isascii() and ch.islower():
                end = _match_lname(text, start)
                self.pos = end
                return self._tok(TokKind.LNAME, start, end)

            if ch.isascii() and ch.isupper():
                # "Meta-variables" is the one hyphenated keyword.
                if text.startswith("Meta-variables", start):
                    self.pos = start + len("Meta-variables")
                    return self._tok(TokKind.METAVARIABLES, start, self.pos)
                end = _match_uname(text, start)
                self.pos = end
                word = text[start:end]
                if word in KEYWORDS:
                    return self._tok(TokKind[KEYWORDS[word]], start, end)
                return self._tok(TokKind.UNAME, start, end)

            if ch.isdigit():
                end = start
                while end < n and text[end].isdigit():
                    end += 1
                self.pos = end
                return self._tok(TokKind.INT, start, end)

            if ch == '"':
                end = start + 1
                while end < n and text[end] not in '"\n':
                    end += 1
                if end >= n or text[end] == "\n":
                    self.pos = end
                    self._error(start, end, "unterminated string literal")
                    continue
                self.pos = end + 1
                return self._tok(TokKind.STRING, start, end + 1)

            two = text[start : start + 2]
            three = text[start : start + 3]
            if three == "::=":
                self.pos = start + 3
                return self._tok(TokKind.PRODUCES, start, start + 3)
            if two in ("~>", "<:", "=>", "[[", "]]"):
                kind = {
                    "~>": TokKind.SQUIG,
                    "<:": TokKind.SUBSORT,
                    "=>": TokKind.COMPUTES,
                    "[[": TokKind.LBRACKET2,
                    "]]": TokKind.RBRACKET2,
                }[two]
                self.pos = start + 2
                return self._tok(kind, start, start + 2)
            if ch == "-":
                end = start
                while end < n and text[end] == "-":
                    end += 1
                run = end - start
                if run >= 4:
                    self.pos = end
                    return self._tok(TokKind.DASHLINE, start, end)
                if run == 2:
                    self.pos = end
                    return self._tok(TokKind.DASH2, start, end)
                if run == 1 and end < n and text[end] == ">":
                    self.pos = end + 1
                    return self._tok(TokKind.ARROW, start, end + 1)
                self.pos = end
                self._error(start, end, "stray dash sequence")
                continue
            simple = {
                "(": TokKind.LPAREN,
                ")": TokKind.RPAREN,
                ",": TokKind.COMMA,
                ":": TokKind.COLON,
                "=": TokKind.EQ,
                "|": TokKind.BAR,
                "_": TokKind.UNDERSCORE,
            }
            if ch in simple:
                self.pos = start + 1
                return self._tok(simple[ch], start, start + 1)

            self.pos = start + 1
            self._error(start, start + 1, f"unexpected character {ch!r}")

    def _comment(self, start: int) -> Token:
        text, n = self.text, len(self.text)
        close = text.find("*/", start + 2)
        if close == -1:
            inner_end = n
            end = n
            self._error(start, start + 2, "unterminated comment")
        else:
            inner_end = close
            end = close + 2
        self.pos = end
        segments = self._comment_segments(start + 2, inner_end)
        return self._tok(TokKind.COMMENT, start, end, tuple(segments))

    def _comment_segments(self, begin: int, end: int) -> list[CommentSegment]:
        """Split comment body into text and back-ticked embedded references.

        A back-tick group only becomes a reference when its content is a
        legal name, optionally prefixed ``Syntax:`` or ``Semantics:``;
        anything else (including unclosed back-ticks) stays plain text.
        """
        text = self.text
        segments: list[CommentSegment] = []
        text_start = begin
        pos = begin
        while pos < end:
            tick = text.find("`", pos, end)
            if tick == -1:
                break
            close = text.find("`", tick + 1, end)
            if close == -1:
                break
            content = text[tick + 1 : close]
            sort = NameSort.FUNCON
            name_start = tick + 1
            for prefix, psort in _EMBEDDED_PREFIXES.items():
                if content.startswith(prefix + ":"):
                    sort = psort
                    name_start = tick + 1 + len(prefix) + 1
                    content = content[len(prefix) + 1 :]
                    break
            if "\n" not in content and _full_name_match(content, sort):
                if text_start < tick:
                    segments.append(
                        CommentText(Span(self.source.id, text_start, tick))
                    )
                occ = NameOccurrence(
                    sort,
                    content,
                    Span(self.source.id, name_start, name_start + len(content)),
                    Role.REFERENCE,
                    Context.EMBEDDED_IN_COMMENT,
                )
                segments.append(CommentRef(occ, Span(self.source.id, tick, close + 1)))
                text_start = close + 1
                pos = close + 1
            else:
                pos = tick + 1
        if text_start < end:
            segments.append(CommentText(Span(self.source.id, text_start, end)))
        return segments


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Apply:
    """Funcon or type application; a bare name is an Apply with no args."""

    head: NameOccurrence
    args: tuple["Term", ...]
    span: Span


@dataclass(frozen=True)
class Var:
    occ: NameOccurrence

    @property
    def span(self) -> Span:
        return self.occ.span


@dataclass(frozen=True)
class SemApply:
    """Semantic function application ``fun[[ arg ]]``."""

    fun: NameOccurrence
    arg: "Term"
    span: Span


@dataclass(frozen=True)
class Literal:
    span: Span
    kind: str  # "string" | "int"


Term = Union[Apply, Var, SemApply, Literal]


@dataclass(frozen=True)
class TypeTerm:
    """Apply/Var term, optionally prefixed by the ``=>`` computation marker."""

    computes: bool
    term: Term
    span: Span


class FormulaKind(Enum):
    PLAIN = "plain"  # bare term (side condition)
    EQUATION = "equation"  # lhs = rhs
    TRANSITION = "transition"  # lhs --label-> rhs, or lhs ~> rhs (no label)


@dataclass(frozen=True)
class Formula:
    kind: FormulaKind
    lhs: Term
    span: Span
    label: Term | None = None
    rhs: Term | None = None


@dataclass
class Comment:
    span: Span
    segments: tuple[CommentSegment, ...]


@dataclass
class FunconDecl:
    span: Span
    name: NameOccurrence
    params: tuple[TypeTerm, ...]
    result: TypeTerm
    rules: list["RuleClause"] = field(default_factory=list)
    aliases: list[str] = field(default_factory=list)


@dataclass
class AliasDecl:
    span: Span
    alias: NameOccurrence  # declaration of the alias name
    target: NameOccurrence  # reference to the canonical name


@dataclass
class TypeDecl:
    span: Span
    name: NameOccurrence
    definition: TypeTerm | None


@dataclass
class Production:
    span: Span
    items: tuple[Union[NameOccurrence, Literal], ...]


@dataclass
class SyntaxDecl:
    span: Span
    sort_name: NameOccurrence
    alternatives: tuple[Production, ...]


@dataclass
class SemanticsDecl:
    span: Span
    name: NameOccurrence
    arg_sort: NameOccurrence
    result: TypeTerm
    equations: list[Formula] = field(default_factory=list)


@dataclass
class RuleClause:
    span: Span
    premises: tuple[Formula, ...]
    conclusion: Formula


@dataclass
class MetaVarsDecl:
    span: Span
    bindings: tuple[tuple[NameOccurrence, TypeTerm], ...]


Block = Union[
    Comment,
    FunconDecl,
    AliasDecl,
    TypeDecl,
    SyntaxDecl,
    SemanticsDecl,
    RuleClause,
    MetaVarsDecl,
]


@dataclass
class Document:
    file: int
    blocks: list[Block]


def term_occurrences(term: Term) -> Iterator[NameOccurrence]:
    if isinstance(term, Apply):
        yield term.head
        for arg in term.args:
            yield from term_occurrences(arg)
    elif isinstance(term, Var):
        yield term.occ
    elif isinstance(term, SemApply):
        yield term.fun
        yield from term_occurrences(term.arg)


def formula_occurrences(formula: Formula) -> Iterator[NameOccurrence]:
    yield from term_occurrences(formula.lhs)
    if formula.label is not None:
        yield from term_occurrences(formula.label)
    if formula.rhs is not None:
        yield from term_occurrences(formula.rhs)


def iter_subterms(term: Term) -> Iterator[Term]:
    """The term and all of its descendants, in source order."""
    yield term
    if isinstance(term, Apply):
        for arg in term.args:
            yield from iter_subterms(arg)
    elif isinstance(term, SemApply):
        yield from iter_subterms(term.arg)


def _formula_terms(formula: Formula) -> Iterator[Term]:
    yield formula.lhs
    if formula.label is not None:
        yield formula.label
    if formula.rhs is not None:
        yield formula.rhs


def block_terms(block: Block) -> Iterator[Term]:
    """Top-level terms of a block (type positions and formula sides)."""
    if isinstance(block, FunconDecl):
        for param in block.params:
            yield param.term
        yield block.result.term
    elif isinstance(block, TypeDecl):
        if block.definition is not None:
            yield block.definition.term
    elif isinstance(block, SemanticsDecl):
        yield block.result.term
    elif isinstance(block, RuleClause):
        for premise in block.premises:
            yield from _formula_terms(premise)
        yield from _formula_terms(block.conclusion)
    elif isinstance(block, MetaVarsDecl):
        for _var, bound in block.bindings:
            yield bound.term


def block_occurrences(block: Block) -> Iterator[NameOccurrence]:
    """All name occurrences of one block, in source order."""
    if isinstance(block, Comment):
        for seg in block.segments:
            if isinstance(seg, CommentRef):
                yield seg.occ
    elif isinstance(block, FunconDecl):
        yield block.name
        for param in block.params:
            yield from term_occurrences(param.term)
        yield from term_occurrences(block.result.term)
    elif isinstance(block, AliasDecl):
        yield block.alias
        yield block.target
    elif isinstance(block, TypeDecl):
        yield block.name
        if block.definition is not None:
            yield from term_occurrences(block.definition.term)
    elif isinstance(block, SyntaxDecl):
        yield block.sort_name
        for production in block.alternatives:
            for item in production.items:
                if isinstance(item, NameOccurrence):
                    yield item
    elif isinstance(block, SemanticsDecl):
        yield block.name
        yield block.arg_sort
        yield from term_occurrences(block.result.term)
    elif isinstance(block, RuleClause):
        for premise in block.premises:
            yield from formula_occurrences(premise)
        yield from formula_occurrences(block.conclusion)
    elif isinstance(block, MetaVarsDecl):
        for var, bound in block.bindings:
            yield var
            yield from term_occurrences(bound.term)


def occurrences(doc: Document) -> list[NameOccurrence]:
    """All name occurrences of the document in source order."""
    out: list[NameOccurrence] = []
    for block in doc.blocks:
        out.extend(block_occurrences(block))
    return out


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Recover(Exception):
    """Internal: abort the current block and resynchronize."""


_SYNC_KINDS = frozenset(
    {TokKind[k] for k in _KEYWORD_KINDS} | {TokKind.COMMENT, TokKind.EOF}
)


class Parser:
    def __init__(self, source: SourceFile, tokens: list[Token], diagnostics: list[Diagnostic]):
        self.source = source
        self.tokens = tokens
        self.idx = 0
        self.diagnostics = diagnostics

    # -- token plumbing ----------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.idx]

    def advance(self) -> Token:
        tok = self.tokens[self.idx]
        if tok.kind is not TokKind.EOF:
            self.idx += 1
        return tok

    def expect(self, kind: TokKind) -> Token:
        if self.cur.kind is kind:
            return self.advance()
        self.fail(f"expected {kind.value!r}, found {self._describe(self.cur)}")

    def fail(self, message: str) -> None:
        self.diagnostics.append(Diagnostic("E005", message, self.cur.span))
        raise _Recover()

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind is TokKind.EOF:
            return "end of file"
        return repr(tok.text)

    def _sync(self) -> None:
        while self.cur.kind not in _SYNC_KINDS:
            self.advance()

    def _occ(self, tok: Token, sort: NameSort, role: Role) -> NameOccurrence:
        return NameOccurrence(sort, tok.text, tok.span, role)

    def _span_from(self, start: int) -> Span:
        end = self.tokens[self.idx - 1].span.end if self.idx > 0 else start
        return Span(self.source.id, start, max(start, end))

    # -- document ----------------------------------------------------------

    def parse_document(self) -> Document:
        blocks: list[Block] = []
        # Rules attach to the most recent funcon or semantics declaration;
        # aliases to the most recent funcon when the target name matches.
        rule_owner: FunconDecl | SemanticsDecl | None = None
        while self.cur.kind is not TokKind.EOF:
            tok = self.cur
            try:
                if tok.kind is TokKind.COMMENT:
                    self.advance()
                    blocks.append(Comment(tok.span, tok.segments))
                elif tok.kind is TokKind.FUNCON:
                    block = self.parse_funcon()
                    blocks.append(block)
                    rule_owner = block
                elif tok.kind is TokKind.ALIAS:
                    block = self.parse_alias()
                    blocks.append(block)
                    if (
                        isinstance(rule_owner, FunconDecl)
                        and block.target.name == rule_owner.name.name
                    ):
                        rule_owner.aliases.append(block.alias.name)
                elif tok.kind is TokKind.TYPE:
                    blocks.append(self.parse_type())
                    rule_owner = None
                elif tok.kind is TokKind.SYNTAX:
                    blocks.append(self.parse_syntax())
                    rule_owner = None
                elif tok.kind is TokKind.SEMANTICS:
                    block = self.parse_semantics()
                    blocks.append(block)
                    rule_owner = block
                elif tok.kind is TokKind.RULE:
                    block = self.parse_rule()
                    blocks.append(block)
                    if isinstance(rule_owner, FunconDecl):
                        rule_owner.rules.append(block)
                    elif isinstance(rule_owner, SemanticsDecl):
                        if block.conclusion.kind is FormulaKind.EQUATION:
                            rule_owner.equations.append(block.conclusion)
                elif tok.kind is TokKind.METAVARIABLES:
                    blocks.append(self.parse_metavars())
                else:
                    self.fail(
                        f"expected declaration or comment, found {self._describe(tok)}"
                    )
            except _Recover:
                if self.cur is tok:  # guarantee progress
                    self.advance()
                self._sync()
        return Document(self.source.id, blocks)

    # -- declarations ------------------------------------------------------

    def parse_funcon(self) -> FunconDecl:
        start = self.advance().span.start
        name = self._occ(self.expect(TokKind.LNAME), NameSort.FUNCON, Role.DECLARATION)
        params: list[TypeTerm] = []
        if self.cur.kind is TokKind.LPAREN:
            self.advance()
            params.append(self.parse_param())
            while self.cur.kind is TokKind.COMMA:
                self.advance()
                params.append(self.parse_param())
            self.expect(TokKind.RPAREN)
        self.expect(TokKind.COLON)
        result = self.parse_typeterm()
        return FunconDecl(self._span_from(start), name, tuple(params), result)

    def parse_param(self) -> TypeTerm:
        self.expect(TokKind.UNDERSCORE)
        self.expect(TokKind.COLON)
        return self.parse_typeterm()

    def parse_alias(self) -> AliasDecl:
        start = self.advance().span.start
        alias = self._occ(self.expect(TokKind.LNAME), NameSort.FUNCON, Role.DECLARATION)
        self.expect(TokKind.EQ)
        target = self._occ(self.expect(TokKind.LNAME), NameSort.FUNCON, Role.REFERENCE)
        return AliasDecl(self._span_from(start), alias, target)

    def parse_type(self) -> TypeDecl:
        start = self.advance().span.start
        name = self._occ(self.expect(TokKind.LNAME), NameSort.FUNCON, Role.DECLARATION)
        definition = None
        if self.cur.kind is TokKind.SQUIG:
            self.advance()
            definition = self.parse_typeterm()
        return TypeDecl(self._span_from(start), name, definition)

    def parse_syntax(self) -> SyntaxDecl:
        start = self.advance().span.start
        sort_name = self._occ(
            self.expect(TokKind.UNAME), NameSort.SYNTAX, Role.DECLARATION
        )
        self.expect(TokKind.PRODUCES)
        alternatives = [self.parse_production()]
        while self.cur.kind is TokKind.BAR:
            self.advance()
            alternatives.append(self.parse_production())
        return SyntaxDecl(self._span_from(start), sort_name, tuple(alternatives))

    def parse_production(self) -> Production:
        items: list[NameOccurrence | Literal] = []
        start = self.cur.span.start
        while self.cur.kind in (TokKind.UNAME, TokKind.STRING):
            tok = self.advance()
            if tok.kind is TokKind.UNAME:
                items.append(self._occ(tok, NameSort.SYNTAX, Role.REFERENCE))
            else:
                items.append(Literal(tok.span, "string"))
        if not items:
            self.fail("expected a production (sort names and string literals)")
        return Production(self._span_from(start), tuple(items))

    def parse_semantics(self) -> SemanticsDecl:
        start = self.advance().span.start
        name = self._occ(
            self.expect(TokKind.LNAME), NameSort.SEMANTICS, Role.DECLARATION
        )
        self.expect(TokKind.LBRACKET2)
        self.expect(TokKind.UNDERSCORE)
        self.expect(TokKind.COLON)
        arg_sort = self._occ(self.expect(TokKind.UNAME), NameSort.SYNTAX, Role.REFERENCE)
        self.expect(TokKind.RBRACKET2)
        self.expect(TokKind.COLON)
        result = self.parse_typeterm()
        return SemanticsDecl(self._span_from(start), name, arg_sort, result)

    def parse_rule(self) -> RuleClause:
        start = self.advance().span.start
        formulas = [self.parse_formula()]
        premises: tuple[Formula, ...] = ()
        conclusion: Formula | None = None
        while True:
            if self.cur.kind is TokKind.DASHLINE:
                self.advance()
                premises = tuple(formulas)
                conclusion = self.parse_formula()
                break
            if self.cur.kind in _SYNC_KINDS:
                break
            formulas.append(self.parse_formula())
        if conclusion is None:
            if len(formulas) > 1:
                # Premises without a dash line: keep the block, flag it.
                self.diagnostics.append(
                    Diagnostic(
                        "E005",
                        "expected a dash line between premises and conclusion",
                        formulas[-1].span,
                    )
                )
                premises = tuple(formulas[:-1])
            conclusion = formulas[-1]
        return RuleClause(self._span_from(start), premises, conclusion)

    def parse_metavars(self) -> MetaVarsDecl:
        start = self.advance().span.start
        bindings = [self.parse_binding()]
        while self.cur.kind is TokKind.UNAME:
            bindings.append(self.parse_binding())
        return MetaVarsDecl(self._span_from(start), tuple(bindings))

    def parse_binding(self) -> tuple[NameOccurrence, TypeTerm]:
        var = self._occ(self.expect(TokKind.UNAME), NameSort.METAVAR, Role.DECLARATION)
        self.expect(TokKind.SUBSORT)
        bound = self.parse_typeterm(syntax_head=True)
        return var, bound

    # -- terms and formulas --------------------------------------------------

    def parse_typeterm(self, syntax_head: bool = False) -> TypeTerm:
        """Type position: Apply/Var, optional leading ``=>``.

        With ``syntax_head`` (meta-variable bounds), an uppercase head is a
        syntax-sort reference rather than a meta-variable, which is what
        lets the sort checker compare bounds against semantics signatures.
        """
        start = self.cur.span.start
        computes = False
        if self.cur.kind is TokKind.COMPUTES:
            self.advance()
            computes = True
        if self.cur.kind is TokKind.LNAME:
            term: Term = self.parse_apply(self.advance())
        elif self.cur.kind is TokKind.UNAME:
            tok = self.advance()
            if syntax_head:
                term = Apply(
                    self._occ(tok, NameSort.SYNTAX, Role.REFERENCE), (), tok.span
                )
            else:
                term = Var(self._occ(tok, NameSort.METAVAR, Role.REFERENCE))
        else:
            self.fail(f"expected a type, found {self._describe(self.cur)}")
        return TypeTerm(computes, term, self._span_from(start))

    def parse_term(self) -> Term:
        tok = self.cur
        if tok.kind is TokKind.LNAME:
            self.advance()
            if self.cur.kind is TokKind.LBRACKET2:
                self.advance()
                fun = self._occ(tok, NameSort.SEMANTICS, Role.REFERENCE)
                arg = self.parse_term()
                end = self.expect(TokKind.RBRACKET2)
                return SemApply(fun, arg, Span(self.source.id, tok.span.start, end.span.end))
            return self.parse_apply(tok)
        if tok.kind is TokKind.UNAME:
            self.advance()
            return Var(self._occ(tok, NameSort.METAVAR, Role.REFERENCE))
        if tok.kind is TokKind.STRING:
            self.advance()
            return Literal(tok.span, "string")
        if tok.kind is TokKind.INT:
            self.advance()
            return Literal(tok.span, "int")
        self.fail(f"expected a term, found {self._describe(tok)}")
        raise AssertionError("unreachable")

    def parse_apply(self, head_tok: Token) -> Apply:
        head = self._occ(head_tok, NameSort.FUNCON, Role.REFERENCE)
        args: list[Term] = []
        if self.cur.kind is TokKind.LPAREN:
            self.advance()
            args.append(self.parse_term())
            while self.cur.kind is TokKind.COMMA:
                self.advance()
                args.append(self.parse_term())
            end = self.expect(TokKind.RPAREN)
            return Apply(head, tuple(args), Span(self.source.id, head_tok.span.start, end.span.end))
        return Apply(head, (), head_tok.span)

    def parse_formula(self) -> Formula:
        start = self.cur.span.start
        lhs = self.parse_term()
        if self.cur.kind is TokKind.EQ:
            self.advance()
            rhs = self.parse_term()
            return Formula(FormulaKind.EQUATION, lhs, self._span_from(start), rhs=rhs)
        if self.cur.kind is TokKind.SQUIG:
            self.advance()
            rhs = self.parse_term()
            return Formula(FormulaKind.TRANSITION, lhs, self._span_from(start), rhs=rhs)
        if self.cur.kind is TokKind.DASH2:
            self.advance()
            label = self.parse_term()
            self.expect(TokKind.ARROW)
            rhs = self.parse_term()
            return Formula(
                FormulaKind.TRANSITION, lhs, self._span_from(start), label=label, rhs=rhs
            )
        return Formula(FormulaKind.PLAIN, lhs, self._span_from(start))


def parse(source: SourceFile) -> tuple[Document, list[Diagnostic]]:
    """Parse one file into a Document plus E005 diagnostics (never raises)."""
    lexer = Lexer(source)
    tokens = lexer.tokens()
    diagnostics = list(lexer.diagnostics)
    doc = Parser(source, tokens, diagnostics).parse_document()
    return doc, diagnostics
