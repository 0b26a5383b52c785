"""Output path scheme and hyperlink targets for the generated site.

Every twin lives under a format directory mirroring the source tree:
``plain/**.html``, ``pretty/**.md``, ``pdf/**.tex``. All links emitted
into pages are relative URLs into this tree, so a build output is
browsable from the filesystem and from any static file server. Links in a
PDF document are relative to the document's PRETTY twin; a configurable
site base URL turns them into absolute links when the PDF is compiled.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass

from .model import NameOccurrence, Role, SourceFile, sanitize_fragment
from .resolver import ResolvedProject

PLAIN_DIR = "plain"
PRETTY_DIR = "pretty"
PDF_DIR = "pdf"
ASSETS_DIR = "assets"
STYLESHEET_PATH = ASSETS_DIR + "/cbs.css"
MATH_MACROS_PATH = ASSETS_DIR + "/math-macros.json"
PDF_MACROS_PATH = PDF_DIR + "/cbs-macros.tex"
INDEX_PATH = "index.html"


def _stem(source_path: str) -> str:
    return source_path[: -len(".cbs")] if source_path.endswith(".cbs") else source_path


def plain_path(source_path: str) -> str:
    return f"{PLAIN_DIR}/{_stem(source_path)}.html"


def pretty_path(source_path: str) -> str:
    return f"{PRETTY_DIR}/{_stem(source_path)}.md"


def pdf_path(source_path: str) -> str:
    return f"{PDF_DIR}/{_stem(source_path)}.tex"


OUTPUT_PATHS = {"plain": plain_path, "pretty": pretty_path, "pdf": pdf_path}


def relative_url(from_page: str, to_page: str) -> str:
    """Relative URL from one output page to another (both out-relative)."""
    return posixpath.relpath(to_page, posixpath.dirname(from_page))


@dataclass(frozen=True)
class LinkContext:
    """Resolves occurrences to URLs/fragments for one page being emitted.

    ``page_path`` is the emitting page's out-relative path; ``target_for``
    maps a source path to the out-relative page a reference should link
    to. Same-file references become bare ``#fragment`` URLs.
    """

    project: ResolvedProject
    source: SourceFile
    page_path: str
    target_format: str  # key into OUTPUT_PATHS

    def decl_fragment(self, occ: NameOccurrence) -> str | None:
        """Anchor fragment for a declaration occurrence; None when the
        occurrence lost a duplicate race and must not define an anchor."""
        if occ.role is not Role.DECLARATION:
            return None
        decl_id = self.project.index.decl_sites.get(occ)
        if decl_id is None:
            return None
        # Alias sites anchor under the alias name, not the canonical name.
        return sanitize_fragment(occ.sort, occ.name)

    def ref_url(self, occ: NameOccurrence) -> str | None:
        """Relative URL for a reference occurrence, or None if unresolved."""
        decl_id = self.project.resolution.get(occ)
        if decl_id is None:
            return None
        info = self.project.decl(decl_id)
        fragment = sanitize_fragment(info.sort, info.name)
        if info.path == self.source.path:
            return f"#{fragment}"
        target = OUTPUT_PATHS[self.target_format](info.path)
        return f"{relative_url(self.page_path, target)}#{fragment}"


def plain_context(project: ResolvedProject, source: SourceFile) -> LinkContext:
    return LinkContext(project, source, plain_path(source.path), "plain")


def pretty_context(project: ResolvedProject, source: SourceFile) -> LinkContext:
    """Shared by the PRETTY and PDF emitters: PDF math blocks reuse the
    PRETTY markup byte-for-byte, so their URLs are PRETTY-page-relative."""
    return LinkContext(project, source, pretty_path(source.path), "pretty")
