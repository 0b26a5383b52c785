"""Post-resolution static checks: funcon arity and semantic argument sorts.

Both passes are pure functions of the resolved project and obey the
error-masking discipline: nothing is reported about an occurrence that
already failed to resolve (E001) or to parse (E005).
"""

from __future__ import annotations

from .model import Diagnostic, NameSort
from .parser import Apply, Literal, SemApply, SyntaxDecl, Var, block_terms, iter_subterms
from .resolver import ResolvedProject


def _all_terms(project: ResolvedProject):
    for _source, doc in project.files:
        for block in doc.blocks:
            for top in block_terms(block):
                yield from iter_subterms(top)


def check_arity(project: ResolvedProject) -> list[Diagnostic]:
    """E003 wherever a funcon is applied to the wrong number of arguments.

    Only funcon-origin declarations carry an arity; a funcon declared
    without a parameter list has arity 0, so it must appear as a bare
    name. Type names take no parameter list and are exempt.
    """
    out = []
    for term in _all_terms(project):
        if not isinstance(term, Apply):
            continue
        decl_id = project.resolution.get(term.head)
        if decl_id is None:
            continue
        info = project.decl(decl_id)
        if info.arity is None or len(term.args) == info.arity:
            continue
        plural = "s" if info.arity != 1 else ""
        out.append(
            Diagnostic(
                "E003",
                f"funcon '{info.name}' expects {info.arity} argument{plural}, "
                f"found {len(term.args)}",
                term.head.span,
                related=info.span,
            )
        )
    return out


def _literals_of_sort(project: ResolvedProject, sort_decl_id: int) -> set[str]:
    """Raw string-literal tokens appearing in the productions of a sort."""
    literals: set[str] = set()
    for source, doc in project.files:
        for block in doc.blocks:
            if not isinstance(block, SyntaxDecl):
                continue
            if project.index.decl_sites.get(block.sort_name) != sort_decl_id:
                continue
            for production in block.alternatives:
                for item in production.items:
                    if isinstance(item, Literal):
                        literals.add(item.span.slice(source))
    return literals


def check_sorts(project: ResolvedProject) -> list[Diagnostic]:
    """E004 wherever a semantic function is applied to the wrong syntax sort.

    The argument of ``f[[ ... ]]`` must be either a meta-variable whose
    binding's head resolves to the sort named in f's signature, or a
    string literal occurring in one of that sort's productions.
    """
    out = []
    bound_head = _metavar_bounds(project)
    for term in _all_terms(project):
        if not isinstance(term, SemApply):
            continue
        decl_id = project.resolution.get(term.fun)
        if decl_id is None:
            continue
        info = project.decl(decl_id)
        sig_sort = project.index.decls.get((NameSort.SYNTAX, info.arg_sort or ""))
        if sig_sort is None:
            continue
        arg = term.arg
        if isinstance(arg, Var):
            var_decl = project.resolution.get(arg.occ)
            if var_decl is None:
                continue  # E001 already reported
            head_occ = bound_head.get(var_decl)
            if head_occ is None:
                continue
            head_decl = project.resolution.get(head_occ)
            if head_decl is None:
                continue  # the bound itself is unresolved
            if head_decl != sig_sort:
                out.append(
                    Diagnostic(
                        "E004",
                        f"semantic function '{info.name}' expects an argument of "
                        f"syntax sort '{info.arg_sort}', found '{arg.occ.name}' "
                        f"bound to '{head_occ.name}'",
                        arg.occ.span,
                        related=info.span,
                    )
                )
        elif isinstance(arg, Literal) and arg.kind == "string":
            raw = arg.span.slice(project.sources[arg.span.file])
            if raw not in _literals_of_sort(project, sig_sort):
                out.append(
                    Diagnostic(
                        "E004",
                        f"semantic function '{info.name}' expects an argument of "
                        f"syntax sort '{info.arg_sort}', and {raw} is not one of "
                        f"its literals",
                        arg.span,
                        related=info.span,
                    )
                )
        else:
            out.append(
                Diagnostic(
                    "E004",
                    f"semantic function '{info.name}' expects a meta-variable or "
                    f"literal of syntax sort '{info.arg_sort}'",
                    _term_span(arg),
                    related=info.span,
                )
            )
    return out


def _term_span(term):
    return term.occ.span if isinstance(term, Var) else term.span


def _metavar_bounds(project: ResolvedProject):
    """Map each meta-variable declaration to the head occurrence of its bound."""
    from .parser import MetaVarsDecl

    bounds = {}
    for _source, doc in project.files:
        for block in doc.blocks:
            if not isinstance(block, MetaVarsDecl):
                continue
            for var, bound in block.bindings:
                decl_id = project.index.decl_sites.get(var)
                if decl_id is None:
                    continue
                term = bound.term
                if isinstance(term, Apply):
                    bounds[decl_id] = term.head
                elif isinstance(term, Var):
                    bounds[decl_id] = term.occ
    return bounds


def run_checks(project: ResolvedProject) -> list[Diagnostic]:
    """All post-resolution checks, in a stable order."""
    return check_arity(project) + check_sorts(project)
