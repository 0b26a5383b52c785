"""Shared rendering primitives: escaping and math-mode markup.

The math renderer produces the one markup string both the PRETTY and PDF
emitters embed verbatim, built from a private six-macro vocabulary:

* ``\\fn{...}`` ``\\syn{...}`` ``\\sem{...}`` ``\\mv{...}`` — one
  highlight macro per name sort;
* ``\\anch{fragment}{...}`` — declaration anchor;
* ``\\lnk{url}{...}`` — reference hyperlink.

Everything else is ordinary LaTeX math that KaTeX/MathJax also accept.
Line breaks follow two fixed rules: a formula spanning several source
lines keeps a break at each source newline, and syntax alternatives after
the first each start a new markup line.
"""

from __future__ import annotations

import re

from .links import LinkContext
from .model import NameOccurrence, NameSort, Role
from .parser import (
    AliasDecl,
    Apply,
    Block,
    Comment,
    CommentRef,
    CommentText,
    Formula,
    FormulaKind,
    FunconDecl,
    Literal,
    MetaVarsDecl,
    Production,
    RuleClause,
    SemanticsDecl,
    SemApply,
    SyntaxDecl,
    Term,
    TypeDecl,
    TypeTerm,
    Var,
)

# --- escaping ---------------------------------------------------------------

_ENTITY_RE = re.compile(r"&(lt|gt|amp);")
_TAG_RE = re.compile(r"<[^>]*>")


def escape_html_text(text: str) -> str:
    """The three-escape encoding whose decode is exact (verbatim contract)."""
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def escape_html_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def decode_html_text(text: str) -> str:
    """Single-pass inverse of :func:`escape_html_text`."""
    return _ENTITY_RE.sub(lambda m: {"lt": "<", "gt": ">", "amp": "&"}[m.group(1)], text)


def strip_tags(markup: str) -> str:
    return _TAG_RE.sub("", markup)


_MARKDOWN_MAP = {
    "\\": "\\\\",
    "`": "\\`",
    "*": "\\*",
    "_": "\\_",
    "[": "\\[",
    "]": "\\]",
    "&": "&amp;",
    "<": "&lt;",
    ">": "&gt;",
}


def escape_markdown_text(text: str) -> str:
    return "".join(_MARKDOWN_MAP.get(ch, ch) for ch in text)


_LATEX_MAP = {
    "\\": r"\textbackslash{}",
    "{": r"\{",
    "}": r"\}",
    "$": r"\$",
    "&": r"\&",
    "%": r"\%",
    "#": r"\#",
    "_": r"\_",
    "~": r"\textasciitilde{}",
    "^": r"\textasciicircum{}",
    "<": r"\textless{}",
    ">": r"\textgreater{}",
}


def escape_latex_text(text: str) -> str:
    return "".join(_LATEX_MAP.get(ch, ch) for ch in text)


def braces_balanced(markup: str) -> bool:
    """Mechanical well-formedness check for emitted math markup."""
    depth = 0
    i = 0
    while i < len(markup):
        ch = markup[i]
        if ch == "\\" and i + 1 < len(markup) and markup[i + 1] in "{}":
            i += 2
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                return False
        i += 1
    return depth == 0


# --- math markup ------------------------------------------------------------

_SORT_MACRO = {
    NameSort.FUNCON: "fn",
    NameSort.SYNTAX: "syn",
    NameSort.SEMANTICS: "sem",
    NameSort.METAVAR: "mv",
}

_BREAK = " \\\\\n\\quad "


class MathRenderer:
    """Renders one document's formal blocks to math markup strings."""

    def __init__(self, ctx: LinkContext):
        self.ctx = ctx
        self.text = ctx.source.text

    # -- names --------------------------------------------------------------

    def name(self, occ: NameOccurrence) -> str:
        core = f"\\{_SORT_MACRO[occ.sort]}{{{occ.name}}}"
        if occ.role is Role.DECLARATION:
            fragment = self.ctx.decl_fragment(occ)
            return f"\\anch{{{fragment}}}{{{core}}}" if fragment else core
        url = self.ctx.ref_url(occ)
        return f"\\lnk{{{url}}}{{{core}}}" if url else core

    # -- terms --------------------------------------------------------------

    def term(self, term: Term) -> str:
        if isinstance(term, Apply):
            head = self.name(term.head)
            if not term.args:
                return head
            return head + "(" + ", ".join(self.term(a) for a in term.args) + ")"
        if isinstance(term, Var):
            return self.name(term.occ)
        if isinstance(term, SemApply):
            return f"{self.name(term.fun)}[\\![{self.term(term.arg)}]\\!]"
        raw = term.span.slice(self.ctx.source)
        if term.kind == "string":
            return f"\\texttt{{{escape_latex_text(raw)}}}"
        return raw

    def typeterm(self, tt: TypeTerm) -> str:
        prefix = "{\\Rightarrow}" if tt.computes else ""
        return prefix + self.term(tt.term)

    # -- formulas -------------------------------------------------------------

    def _gap_breaks(self, left_end: int, right_start: int) -> bool:
        return "\n" in self.text[left_end:right_start]

    def formula(self, formula: Formula) -> str:
        lhs = self.term(formula.lhs)
        if formula.kind is FormulaKind.PLAIN:
            return lhs
        assert formula.rhs is not None
        if formula.kind is FormulaKind.EQUATION:
            op = "="
        elif formula.label is not None:
            op = f"\\xrightarrow{{{self.term(formula.label)}}}"
        else:
            op = "\\rightsquigarrow"
        sep = (
            _BREAK
            if self._gap_breaks(formula.lhs.span.end, _term_start(formula.rhs))
            else " "
        )
        return f"{lhs}{sep}{op} {self.term(formula.rhs)}"

    # -- blocks ---------------------------------------------------------------

    def production(self, production: Production) -> str:
        parts = []
        for item in production.items:
            if isinstance(item, NameOccurrence):
                parts.append(self.name(item))
            else:
                raw = item.span.slice(self.ctx.source)
                parts.append(f"\\texttt{{{escape_latex_text(raw)}}}")
        return "\\ ".join(parts)

    def block(self, block: Block) -> str | None:
        """Math payload for a formal block; None for comments."""
        if isinstance(block, Comment):
            return None
        if isinstance(block, FunconDecl):
            params = ""
            if block.params:
                params = (
                    "("
                    + ", ".join("\\_ : " + self.typeterm(p) for p in block.params)
                    + ")"
                )
            return (
                f"\\textbf{{Funcon}}\\ {self.name(block.name)}{params}"
                f" : {self.typeterm(block.result)}"
            )
        if isinstance(block, AliasDecl):
            return (
                f"\\textbf{{Alias}}\\ {self.name(block.alias)}"
                f" = {self.name(block.target)}"
            )
        if isinstance(block, TypeDecl):
            markup = f"\\textbf{{Type}}\\ {self.name(block.name)}"
            if block.definition is not None:
                markup += f" \\rightsquigarrow {self.typeterm(block.definition)}"
            return markup
        if isinstance(block, SyntaxDecl):
            parts = [
                f"\\textbf{{Syntax}}\\ {self.name(block.sort_name)}"
                f" \\mathrel{{::=}} {self.production(block.alternatives[0])}"
            ]
            for alt in block.alternatives[1:]:
                parts.append(f"{_BREAK}\\mid\\ {self.production(alt)}")
            return "".join(parts)
        if isinstance(block, SemanticsDecl):
            return (
                f"\\textbf{{Semantics}}\\ {self.name(block.name)}"
                f"[\\![\\_ : {self.name(block.arg_sort)}]\\!]"
                f" : {self.typeterm(block.result)}"
            )
        if isinstance(block, RuleClause):
            if block.premises:
                numerator = " \\quad ".join(self.formula(p) for p in block.premises)
                body = f"\\frac{{{numerator}}}{{{self.formula(block.conclusion)}}}"
            else:
                body = self.formula(block.conclusion)
            return f"\\textbf{{Rule}}\\ {body}"
        if isinstance(block, MetaVarsDecl):
            parts = [f"\\textbf{{Meta-variables}}\\ "]
            for i, (var, bound) in enumerate(block.bindings):
                if i:
                    prev_end = block.bindings[i - 1][1].span.end
                    parts.append(
                        _BREAK
                        if self._gap_breaks(prev_end, var.span.start)
                        else " \\quad "
                    )
                parts.append(f"{self.name(var)} <: {self.typeterm(bound)}")
            return "".join(parts)
        raise TypeError(f"unexpected block {type(block).__name__}")


def _term_start(term: Term) -> int:
    return term.occ.span.start if isinstance(term, Var) else term.span.start


# --- comments ---------------------------------------------------------------

_PARAGRAPH_RE = re.compile(r"\n[ \t]*\n+")


def _split_paragraphs(markup: str) -> list[str]:
    return [p.strip() for p in _PARAGRAPH_RE.split(markup) if p.strip()]


def render_comment_markdown(comment: Comment, ctx: LinkContext) -> str:
    """Comment as Markdown prose; embedded references become inline-code
    links, unresolved ones plain inline code."""
    pieces = []
    for seg in comment.segments:
        if isinstance(seg, CommentText):
            pieces.append(escape_markdown_text(seg.span.slice(ctx.source)))
        elif isinstance(seg, CommentRef):
            url = ctx.ref_url(seg.occ)
            if url is None:
                pieces.append(f"`{seg.occ.name}`")
            else:
                pieces.append(f"[`{seg.occ.name}`]({url})")
    return "\n\n".join(_split_paragraphs("".join(pieces)))


def render_comment_latex(comment: Comment, ctx: LinkContext) -> str:
    """Comment as text-mode LaTeX prose with the same link targets."""
    pieces = []
    for seg in comment.segments:
        if isinstance(seg, CommentText):
            pieces.append(escape_latex_text(seg.span.slice(ctx.source)))
        elif isinstance(seg, CommentRef):
            name = escape_latex_text(seg.occ.name)
            url = ctx.ref_url(seg.occ)
            if url is None:
                pieces.append(f"\\texttt{{{name}}}")
            else:
                pieces.append(f"\\lnk{{{url}}}{{\\texttt{{{name}}}}}")
    return "\n\n".join(_split_paragraphs("".join(pieces)))
