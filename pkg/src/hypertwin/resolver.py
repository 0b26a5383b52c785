"""Project-wide name resolution.

Each name sort has one flat, project-wide namespace (no imports, no
shadowing), except meta-variables, which are file-scoped: a meta-variable
reference resolves only against ``Meta-variables`` bindings in the same
file. Duplicate declarations are rejected deterministically: the
lexicographically-first declaration (by file path, then span start) wins
and every later one gets E002 pointing back at the winner. Funcon aliases
register in a separate table and resolve to the canonical declaration.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable

from .model import (
    Diagnostic,
    NameOccurrence,
    NameSort,
    Role,
    SORT_LABEL,
    SourceFile,
    Span,
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

DeclId = int


@dataclass(frozen=True)
class DeclInfo:
    """Everything the rest of the pipeline needs to know about one
    registered declaration."""

    id: DeclId
    name: str
    sort: NameSort
    path: str
    span: Span
    origin: str  # funcon | type | syntax | semantics | metavar
    arity: int | None = None  # funcon-origin declarations only
    arg_sort: str | None = None  # semantics-origin declarations only


@dataclass
class SymbolIndex:
    """The project-wide symbol table.

    ``decls`` holds the three global namespaces; ``metavars`` is keyed by
    (file id, name) because meta-variables are file-scoped. ``aliases``
    maps funcon alias names to the canonical declaration.
    """

    decls: dict[tuple[NameSort, str], DeclId] = field(default_factory=dict)
    metavars: dict[tuple[int, str], DeclId] = field(default_factory=dict)
    aliases: dict[str, DeclId] = field(default_factory=dict)
    decl_info: list[DeclInfo] = field(default_factory=list)
    #: registered declaration occurrences (duplicate losers are excluded);
    #: alias occurrences map to the canonical declaration.
    decl_sites: dict[NameOccurrence, DeclId] = field(default_factory=dict)
    #: alias name -> its registered declaring occurrence
    alias_sites: dict[str, NameOccurrence] = field(default_factory=dict)

    def lookup(self, sort: NameSort, name: str) -> DeclId | None:
        """Find a declaration by sort and name, expanding funcon aliases."""
        found = self.decls.get((sort, name))
        if found is None and sort is NameSort.FUNCON:
            found = self.aliases.get(name)
        return found


def _sorted_docs(
    docs: Iterable[tuple[SourceFile, Document]]
) -> list[tuple[SourceFile, Document]]:
    return sorted(docs, key=lambda pair: pair[0].path)


def build_index(
    docs: list[tuple[SourceFile, Document]]
) -> tuple[SymbolIndex, list[Diagnostic]]:
    """Register every declaration, then every alias, reporting duplicates."""
    index = SymbolIndex()
    diagnostics: list[Diagnostic] = []

    def register(occ: NameOccurrence, info_args: dict) -> None:
        existing = index.decls.get((occ.sort, occ.name))
        if existing is not None:
            diagnostics.append(
                Diagnostic(
                    "E002",
                    f"duplicate declaration of {SORT_LABEL[occ.sort]} '{occ.name}'",
                    occ.span,
                    related=index.decl_info[existing].span,
                )
            )
            return
        decl_id = len(index.decl_info)
        index.decl_info.append(
            DeclInfo(id=decl_id, name=occ.name, sort=occ.sort, span=occ.span, **info_args)
        )
        index.decls[(occ.sort, occ.name)] = decl_id
        index.decl_sites[occ] = decl_id

    def register_metavar(source: SourceFile, occ: NameOccurrence) -> None:
        key = (source.id, occ.name)
        existing = index.metavars.get(key)
        if existing is not None:
            diagnostics.append(
                Diagnostic(
                    "E002",
                    f"duplicate declaration of meta-variable '{occ.name}'",
                    occ.span,
                    related=index.decl_info[existing].span,
                )
            )
            return
        decl_id = len(index.decl_info)
        index.decl_info.append(
            DeclInfo(
                id=decl_id,
                name=occ.name,
                sort=NameSort.METAVAR,
                path=source.path,
                span=occ.span,
                origin="metavar",
            )
        )
        index.metavars[key] = decl_id
        index.decl_sites[occ] = decl_id

    ordered = _sorted_docs(docs)
    for source, doc in ordered:
        for block in doc.blocks:
            if isinstance(block, FunconDecl):
                register(
                    block.name,
                    dict(path=source.path, origin="funcon", arity=len(block.params)),
                )
            elif isinstance(block, TypeDecl):
                register(block.name, dict(path=source.path, origin="type"))
            elif isinstance(block, SyntaxDecl):
                register(block.sort_name, dict(path=source.path, origin="syntax"))
            elif isinstance(block, SemanticsDecl):
                register(
                    block.name,
                    dict(
                        path=source.path,
                        origin="semantics",
                        arg_sort=block.arg_sort.name,
                    ),
                )
            elif isinstance(block, MetaVarsDecl):
                for var, _bound in block.bindings:
                    register_metavar(source, var)

    # Aliases go second so they can conflict-check against every declaration.
    for source, doc in ordered:
        for block in doc.blocks:
            if not isinstance(block, AliasDecl):
                continue
            name = block.alias.name
            clash = index.decls.get((NameSort.FUNCON, name))
            if clash is None and name in index.aliases:
                clash = index.aliases[name]
                related = index.alias_sites[name].span
            elif clash is not None:
                related = index.decl_info[clash].span
            if clash is not None:
                diagnostics.append(
                    Diagnostic(
                        "E002",
                        f"duplicate declaration of funcon '{name}' (alias)",
                        block.alias.span,
                        related=related,
                    )
                )
                continue
            target = index.decls.get((NameSort.FUNCON, block.target.name))
            if target is None:
                # Target is unresolved; the reference itself gets E001 later.
                continue
            index.aliases[name] = target
            index.alias_sites[name] = block.alias
            index.decl_sites[block.alias] = target

    return index, diagnostics


@dataclass
class ResolvedProject:
    """Immutable result of project-wide analysis, shared by all emitters."""

    files: list[tuple[SourceFile, Document]]
    index: SymbolIndex
    resolution: dict[NameOccurrence, DeclId]
    back_refs: dict[DeclId, list[NameOccurrence]]
    diagnostics: list[Diagnostic]
    sources: dict[int, SourceFile] = field(default_factory=dict)
    by_path: dict[str, tuple[SourceFile, Document]] = field(default_factory=dict)
    #: per file id: occurrences sorted by span start (for position lookups)
    occs_by_file: dict[int, list[NameOccurrence]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.sources = {sf.id: sf for sf, _ in self.files}
        self.by_path = {sf.path: (sf, doc) for sf, doc in self.files}
        for sf, doc in self.files:
            self.occs_by_file[sf.id] = sorted(
                occurrences(doc), key=lambda o: o.span.start
            )

    def decl(self, decl_id: DeclId) -> DeclInfo:
        return self.index.decl_info[decl_id]


def resolve(
    docs: list[tuple[SourceFile, Document]], index: SymbolIndex
) -> ResolvedProject:
    """Bind every reference, recording the inverse reference lists.

    Every reference either lands in ``resolution`` or yields exactly one
    E001, so ``len(resolution) + #E001 == #references``.
    """
    resolution: dict[NameOccurrence, DeclId] = {}
    back_refs: dict[DeclId, list[NameOccurrence]] = {}
    diagnostics: list[Diagnostic] = []

    for source, doc in _sorted_docs(docs):
        for occ in occurrences(doc):
            if occ.role is not Role.REFERENCE:
                continue
            if occ.sort is NameSort.METAVAR:
                decl_id = index.metavars.get((source.id, occ.name))
            else:
                decl_id = index.lookup(occ.sort, occ.name)
            if decl_id is None:
                diagnostics.append(
                    Diagnostic(
                        "E001",
                        f"unresolved reference to {SORT_LABEL[occ.sort]} '{occ.name}'",
                        occ.span,
                    )
                )
                continue
            resolution[occ] = decl_id
            back_refs.setdefault(decl_id, []).append(occ)

    paths = {sf.id: sf.path for sf, _ in docs}
    for refs in back_refs.values():
        refs.sort(key=lambda o: (paths[o.span.file], o.span.start))

    return ResolvedProject(
        files=list(docs),
        index=index,
        resolution=resolution,
        back_refs=back_refs,
        diagnostics=diagnostics,
    )


def unused_warnings(project: ResolvedProject) -> list[Diagnostic]:
    """W001 for funcon declarations that are never referenced (flag-gated)."""
    out = []
    for info in project.index.decl_info:
        if info.origin != "funcon":
            continue
        if not project.back_refs.get(info.id):
            out.append(
                Diagnostic(
                    "W001",
                    f"unused declaration: funcon '{info.name}' is never referenced",
                    info.span,
                )
            )
    return out


@dataclass(frozen=True)
class LookupHit:
    """Result of a position query that landed on a name."""

    resolved: bool
    sort: NameSort
    name: str
    path: str | None = None
    line: int | None = None
    col: int | None = None


def _offset_of(source: SourceFile, line: int, col: int) -> int:
    if not 1 <= line <= len(source.line_starts):
        raise ValueError(f"line {line} out of range for {source.path!r}")
    if col < 1:
        raise ValueError(f"column must be >= 1, got {col}")
    return source.line_starts[line - 1] + col - 1


def lookup_at(
    project: ResolvedProject, path: str, line: int, col: int
) -> LookupHit | None:
    """Jump-to-definition on a 1-based (line, column) position.

    Returns the declaration behind the name at the position (a declaration
    site answers with itself; an alias site answers with the canonical
    declaration), a hit with ``resolved=False`` for an unresolved
    reference, or None when the position is not on a name.
    """
    entry = project.by_path.get(path)
    if entry is None:
        raise ValueError(f"unknown file path {path!r}")
    source, _doc = entry
    offset = _offset_of(source, line, col)
    occs = project.occs_by_file[source.id]
    pos = bisect.bisect_right([o.span.start for o in occs], offset) - 1
    if pos < 0:
        return None
    occ = occs[pos]
    if not occ.span.start <= offset < occ.span.end:
        return None

    decl_id: DeclId | None
    if occ.role is Role.DECLARATION:
        decl_id = project.index.decl_sites.get(occ)
        if decl_id is None:
            # Duplicate loser: point at the winning declaration.
            if occ.sort is NameSort.METAVAR:
                decl_id = project.index.metavars.get((source.id, occ.name))
            else:
                decl_id = project.index.lookup(occ.sort, occ.name)
    else:
        decl_id = project.resolution.get(occ)
    if decl_id is None:
        return LookupHit(resolved=False, sort=occ.sort, name=occ.name)
    info = project.decl(decl_id)
    decl_source = project.by_path[info.path][0]
    dline, dcol = line_col_of(decl_source, info.span.start)
    return LookupHit(
        resolved=True,
        sort=info.sort,
        name=info.name,
        path=info.path,
        line=dline,
        col=dcol,
    )


def references_of(
    project: ResolvedProject, sort: NameSort, name: str
) -> list[tuple[str, int, int]]:
    """All reference locations for a declaration, in deterministic order.

    The name is resolved through aliases first; an undeclared name yields
    an empty list.
    """
    decl_id = project.index.lookup(sort, name)
    if decl_id is None:
        return []
    out = []
    for occ in project.back_refs.get(decl_id, []):
        source = project.sources[occ.span.file]
        line, col = line_col_of(source, occ.span.start)
        out.append((source.path, line, col))
    return out
