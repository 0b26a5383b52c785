"""PLAIN twin emitter: a verbatim, highlighted, anchored hypertext page.

The page body is the source text inside one pre-formatted element, using
exactly three escapes (``&lt; &gt; &amp;``); stripping tags and decoding
those escapes reproduces the source bytes. Declarations become named
anchors, resolved references become links to the declaring page's anchor,
and every occurrence is wrapped in a highlight span per sort.

With backrefs enabled, a generated reference-list block follows each
declaration; those blocks live outside the pre-formatted element (the
element is split around them) and are exempt from the verbatim contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .links import plain_context, plain_path, relative_url, STYLESHEET_PATH
from .model import (
    HIGHLIGHT_CLASS,
    NameOccurrence,
    Role,
    SourceFile,
    UNRESOLVED_CLASS,
    line_col_of,
)
from .parser import (
    AliasDecl,
    Document,
    FunconDecl,
    MetaVarsDecl,
    SemanticsDecl,
    SyntaxDecl,
    TypeDecl,
    occurrences,
)
from .render import decode_html_text, escape_html_attr, escape_html_text, strip_tags
from .resolver import ResolvedProject

if TYPE_CHECKING:
    from .site import ProjectConfig


@dataclass(frozen=True)
class PlainPage:
    path: str  # out-relative, e.g. plain/Funcons-beta/x.html
    body: str  # markup satisfying the verbatim round-trip
    page: str  # complete HTML document


def strip_and_decode(body: str) -> str:
    """The verbatim round-trip: must reproduce the source text exactly."""
    return decode_html_text(strip_tags(body))


def _wrap(occ: NameOccurrence, ctx) -> str:
    highlighted = (
        f'<span class="{HIGHLIGHT_CLASS[occ.sort]}">{escape_html_text(occ.name)}</span>'
    )
    if occ.role is Role.DECLARATION:
        fragment = ctx.decl_fragment(occ)
        if fragment is None:
            return highlighted
        return f'<a id="{escape_html_attr(fragment)}">{highlighted}</a>'
    url = ctx.ref_url(occ)
    if url is None:
        return f'<span class="{UNRESOLVED_CLASS}">{escape_html_text(occ.name)}</span>'
    return f'<a href="{escape_html_attr(url)}">{highlighted}</a>'


def _declaration_blocks(doc: Document):
    """(insertion offset, declaration occurrences) pairs for backref lists.

    The insertion point is just after the newline that ends the line on
    which the declaration's block ends.
    """
    for block in doc.blocks:
        if isinstance(block, (FunconDecl, TypeDecl, SyntaxDecl, SemanticsDecl)):
            yield block.span.end, [block.name if not isinstance(block, SyntaxDecl) else block.sort_name]
        elif isinstance(block, AliasDecl):
            yield block.span.end, [block.alias]
        elif isinstance(block, MetaVarsDecl):
            yield block.span.end, [var for var, _ in block.bindings]


def _backref_block(
    occ: NameOccurrence, project: ResolvedProject, page_path: str
) -> str:
    decl_id = project.index.decl_sites.get(occ)
    refs = project.back_refs.get(decl_id, []) if decl_id is not None else []
    name = escape_html_text(occ.name)
    if not refs:
        return f'<div class="cbs-refs"><p>No references to <code>{name}</code>.</p></div>'
    items = []
    for ref in refs:
        source = project.sources[ref.span.file]
        line, col = line_col_of(source, ref.span.start)
        url = relative_url(page_path, plain_path(source.path))
        items.append(
            f'<li><a href="{escape_html_attr(url)}">'
            f"{escape_html_text(source.path)}:{line}:{col}</a></li>"
        )
    return (
        f'<div class="cbs-refs"><p>References to <code>{name}</code>:</p>'
        f'<ul>{"".join(items)}</ul></div>'
    )


def emit_plain(
    source: SourceFile,
    doc: Document,
    project: ResolvedProject,
    config: "ProjectConfig",
) -> PlainPage:
    ctx = plain_context(project, source)
    page_path = ctx.page_path
    text = source.text

    occs = sorted(occurrences(doc), key=lambda o: o.span.start)
    chunks: list[str] = []
    pos = 0
    for occ in occs:
        chunks.append(escape_html_text(text[pos : occ.span.start]))
        chunks.append(_wrap(occ, ctx))
        pos = occ.span.end
    chunks.append(escape_html_text(text[pos:]))
    body = "".join(chunks)

    if config.emit_backrefs:
        pre_html = _split_with_backrefs(source, doc, project, ctx, occs)
    else:
        pre_html = f'<pre class="cbs">{body}</pre>'

    nav = _nav_links(source, config, page_path)
    css = relative_url(page_path, STYLESHEET_PATH)
    title = escape_html_text(source.path)
    page = (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n'
        "<head>\n"
        '<meta charset="utf-8">\n'
        f"<title>{title}</title>\n"
        f'<link rel="stylesheet" href="{escape_html_attr(css)}">\n'
        "</head>\n"
        "<body>\n"
        f'<nav class="cbs-nav"><span class="cbs-title">{title}</span>{nav}</nav>\n'
        f"{pre_html}\n"
        "</body>\n"
        "</html>\n"
    )
    return PlainPage(path=page_path, body=body, page=page)


def _split_with_backrefs(source, doc, project, ctx, occs):
    """Close and reopen the pre element after each declaration's line."""
    text = source.text
    inserts: list[tuple[int, str]] = []
    for block_end, decls in _declaration_blocks(doc):
        newline = text.find("\n", block_end)
        cut = newline + 1 if newline != -1 else len(text)
        blocks = "".join(_backref_block(d, project, ctx.page_path) for d in decls)
        inserts.append((cut, blocks))
    inserts.sort(key=lambda pair: pair[0])

    out: list[str] = ['<pre class="cbs">']
    idx = 0

    def emit_range(start: int, end: int) -> None:
        nonlocal idx
        pos = start
        while idx < len(occs) and occs[idx].span.start < end:
            occ = occs[idx]
            out.append(escape_html_text(text[pos : occ.span.start]))
            out.append(_wrap(occ, ctx))
            pos = occ.span.end
            idx += 1
        out.append(escape_html_text(text[pos:end]))

    pos = 0
    for cut, blocks in inserts:
        emit_range(pos, cut)
        out.append("</pre>\n")
        out.append(blocks)
        out.append('\n<pre class="cbs">')
        pos = cut
    emit_range(pos, len(text))
    out.append("</pre>")
    return "".join(out)


def _nav_links(source: SourceFile, config: "ProjectConfig", page_path: str) -> str:
    from .links import pdf_path, pretty_path

    parts = []
    if "pretty" in config.formats:
        url = relative_url(page_path, pretty_path(source.path))
        parts.append(f'<a href="{escape_html_attr(url)}">PRETTY</a>')
    if "pdf" in config.formats:
        url = relative_url(page_path, pdf_path(source.path))
        parts.append(f'<a href="{escape_html_attr(url)}">PDF</a>')
    if config.source_base_url:
        url = config.source_base_url.rstrip("/") + "/" + source.path
        parts.append(f'<a href="{escape_html_attr(url)}">source</a>')
    return "".join(" &middot; " + p for p in parts)
