"""The four communication-optimization passes.

Order is fixed: reorder -> pulses -> bypass -> cache.  Later passes consume
structure the earlier ones establish (explicit sync points, ownership
guards).  Each pass is idempotent: re-running it finds zero sites.

* reorder:  neighborhood traversals that search for the edge matching the
  loop variables become positional walks (fresh counter, get_edge_i,
  get_edge_other, counter increment).
* pulses:   a reduction-exclusive frontier while loses its per-drain sync:
  an inner drain loop runs to local fixpoint, one sync per outer iteration,
  termination decided by an AND-combine of per-rank finished flags.
* bypass:   inside reduction-exclusive statements, reads of provably-owned
  vertices dereference the local array directly; idempotent reductions under
  a frontier-driven loop split on target ownership into a direct compare-
  and-store versus queue; operands restating the target slot are dropped
  from the queued form (the sync fold restores their effect).
* cache:    remote-capable reads of cache-safe properties go through a
  per-pulse memo filled on first miss and cleared at every pulse boundary.

Immediate local application is only ever emitted under a frontier-driven
convergence loop that is itself reduction-exclusive.  A one-shot sweep keeps
delayed-update semantics: applying early there would feed updated values
into later iterations of the same sweep and change the final fold.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass

from graphpulse import ast_nodes as A
from graphpulse.analysis import AnalysisFacts, analyze
from graphpulse.ops import ReductionOp

PASS_ORDER = ("reorder", "pulses", "bypass", "cache")
PASS_LABELS = {
    "reorder": "reorder-neighborhood",
    "pulses": "aggregate-pulses",
    "bypass": "get-bypass",
    "cache": "opportunistic-cache",
}


@dataclass
class PassReport:
    name: str
    fired: bool
    sites: int
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "pass": self.name,
            "label": PASS_LABELS.get(self.name, self.name),
            "fired": self.fired,
            "sites": self.sites,
            "reason": self.reason,
        }


class _Fresh:
    def __init__(self, program: A.Program):
        self.taken = set()
        for stmt in A.walk_statements(program.body):
            for attr in ("name", "var", "of", "cache"):
                value = getattr(stmt, attr, None)
                if isinstance(value, str):
                    self.taken.add(value)
        self.counters: dict[str, int] = {}

    def make(self, prefix: str) -> str:
        k = self.counters.get(prefix, 0)
        while True:
            k += 1
            name = f"{prefix}{k}"
            if name not in self.taken:
                self.counters[prefix] = k
                self.taken.add(name)
                return name


def expr_map(e, fn):
    """Bottom-up expression rewrite; fn sees each rebuilt node last."""
    if isinstance(e, A.BinOp):
        e = dataclasses.replace(e, left=expr_map(e.left, fn), right=expr_map(e.right, fn))
    elif isinstance(e, A.NotExpr):
        e = dataclasses.replace(e, operand=expr_map(e.operand, fn))
    elif isinstance(e, (A.PropRead, A.LocalPropRead)):
        e = dataclasses.replace(e, vertex=expr_map(e.vertex, fn))
    elif isinstance(e, A.EdgeWeight):
        e = dataclasses.replace(e, edge=expr_map(e.edge, fn))
    elif isinstance(e, A.IsLocal):
        e = dataclasses.replace(e, vertex=expr_map(e.vertex, fn))
    elif isinstance(e, (A.CacheHas, A.CacheRead)):
        e = dataclasses.replace(e, key=expr_map(e.key, fn))
    elif isinstance(e, A.GetEdge):
        e = dataclasses.replace(e, v=expr_map(e.v, fn), nbr=expr_map(e.nbr, fn))
    elif isinstance(e, A.GetEdgeI):
        e = dataclasses.replace(e, v=expr_map(e.v, fn), index=expr_map(e.index, fn))
    elif isinstance(e, A.GetEdgeOther):
        e = dataclasses.replace(e, v=expr_map(e.v, fn), edge=expr_map(e.edge, fn))
    return fn(e)


_EXPR_FIELDS = {
    A.LocalDecl: ("init",),
    A.EdgeDecl: ("call",),
    A.AssignVar: ("value",),
    A.LocalPropWrite: ("vertex", "value"),
    A.CacheStore: ("key", "value"),
    A.IfStmt: ("cond",),
    A.WhileStmt: ("cond",),
    A.ReductionStmt: ("target_vertex",),
}


def stmt_map_exprs(stmt, fn):
    """Rewrite the statement's own expressions (nested blocks untouched)."""
    fields = _EXPR_FIELDS.get(type(stmt), ())
    changes = {}
    for f in fields:
        changes[f] = expr_map(getattr(stmt, f), fn)
    if isinstance(stmt, A.ReductionStmt) and isinstance(stmt.red, A.OpCall):
        changes["red"] = dataclasses.replace(stmt.red, args=[expr_map(a, fn) for a in stmt.red.args])
    if changes:
        return dataclasses.replace(stmt, **changes)
    return stmt


def _recurse_blocks(stmt, block_fn):
    fields = A.BLOCK_FIELDS.get(type(stmt))
    if not fields:
        return stmt
    return dataclasses.replace(stmt, **{f: block_fn(getattr(stmt, f)) for f in fields})


def _is_frontier_structure(stmt) -> bool:
    return isinstance(stmt, A.FrontierLoop) or (
        isinstance(stmt, A.WhileStmt) and isinstance(stmt.cond, A.FrontierNonEmpty)
    )


# --- pass: reorder ---


def _reorder_site(stmt) -> int | None:
    """Index of the first EdgeDecl searching for (of, var) in this neighbor loop."""
    if not isinstance(stmt, A.ForAllNeighbors):
        return None
    for i, s in enumerate(stmt.body):
        if (
            isinstance(s, A.EdgeDecl)
            and isinstance(s.call, A.GetEdge)
            and isinstance(s.call.v, A.VarRef)
            and isinstance(s.call.nbr, A.VarRef)
            and s.call.v.name == stmt.of
            and s.call.nbr.name == stmt.var
        ):
            return i
    return None


def _order_independent(loop: A.ForAllNeighbors, facts: AnalysisFacts) -> bool:
    if facts.is_exclusive(loop):
        return True
    if any(isinstance(s, A.ReductionStmt) for s in A.walk_statements(loop.body)):
        return False
    declared = {s.name for s in A.walk_statements(loop.body) if isinstance(s, (A.LocalDecl, A.EdgeDecl))}
    declared.add(loop.var)
    for s in A.walk_statements(loop.body):
        if isinstance(s, (A.AssignVar, A.IncrStmt)) and s.name not in declared:
            return False  # loop-carried effect on an outer variable
    return True


def pass_reorder_neighborhood(program: A.Program, facts: AnalysisFacts) -> tuple[A.Program, PassReport]:
    fresh = _Fresh(program)
    sites = 0
    skipped_dependent = 0

    def rewrite_block(block: list) -> list:
        nonlocal sites, skipped_dependent
        out = []
        for stmt in block:
            idx = _reorder_site(stmt)
            if idx is not None:
                if not _order_independent(stmt, facts):
                    skipped_dependent += 1
                    out.append(_recurse_blocks(stmt, rewrite_block))
                    continue
                origin = "pass:reorder"
                counter = fresh.make("_t")
                edge = stmt.body[idx]
                new_body = list(stmt.body)
                new_body[idx : idx + 1] = [
                    A.EdgeDecl(
                        name=edge.name,
                        call=A.GetEdgeI(v=A.VarRef(stmt.of), index=A.VarRef(counter)),
                        origin=origin,
                    ),
                    A.AssignVar(
                        name=stmt.var,
                        value=A.GetEdgeOther(v=A.VarRef(stmt.of), edge=A.VarRef(edge.name)),
                        origin=origin,
                    ),
                    A.IncrStmt(name=counter, origin=origin),
                ]
                loop = dataclasses.replace(stmt, body=rewrite_block(new_body))
                out.append(A.LocalDecl(name=counter, init=A.IntLit(0), origin=origin))
                out.append(loop)
                sites += 1
                continue
            out.append(_recurse_blocks(stmt, rewrite_block))
        return out

    program.body[:] = rewrite_block(program.body)
    if sites:
        return program, PassReport("reorder", True, sites)
    reason = (
        "matching get_edge sites depend on traversal order"
        if skipped_dependent
        else "no neighborhood loop searches for its own loop edge"
    )
    return program, PassReport("reorder", False, 0, reason)


# --- pass: pulses ---


def pass_aggregate_pulses(program: A.Program, facts: AnalysisFacts) -> tuple[A.Program, PassReport]:
    fresh = _Fresh(program)
    sites = 0
    skip_reason = "no frontier-driven while loop"
    decl_order = [s.name for s in program.body if isinstance(s, A.PropDecl)]

    def sync_props(body) -> tuple[str, ...]:
        reduced = {s.target_prop for s in A.walk_statements(body) if isinstance(s, A.ReductionStmt)}
        ordered = [p for p in decl_order if p in reduced]
        ordered.extend(sorted(reduced - set(ordered)))
        return tuple(ordered)

    def rewrite_block(block: list) -> list:
        nonlocal sites, skip_reason
        out = []
        for stmt in block:
            if (
                isinstance(stmt, A.WhileStmt)
                and isinstance(stmt.cond, A.FrontierNonEmpty)
                and not stmt.local_drain
            ):
                if any(isinstance(s, A.SyncReduction) for s in A.walk_statements(stmt.body)):
                    skip_reason = "while body already synchronizes explicitly"
                    out.append(_recurse_blocks(stmt, rewrite_block))
                    continue
                if not facts.is_exclusive(stmt):
                    skip_reason = "while body is not reduction-exclusive"
                    out.append(_recurse_blocks(stmt, rewrite_block))
                    continue
                origin = "pass:pulses"
                fin = fresh.make("_fin")
                inner = A.WhileStmt(
                    cond=A.FrontierNonEmpty(),
                    body=rewrite_block(stmt.body),
                    local_drain=True,
                    origin=origin,
                )
                outer = A.WhileStmt(
                    cond=A.NotExpr(operand=A.VarRef(fin)),
                    body=[
                        inner,
                        A.SyncReduction(props=sync_props(stmt.body), origin=origin),
                        A.IfStmt(
                            cond=A.NotExpr(operand=A.FrontierNonEmpty()),
                            then=[A.AssignVar(name=fin, value=A.IntLit(1), origin=origin)],
                            orelse=[],
                            origin=origin,
                        ),
                        A.AllFinishedStmt(var=fin, origin=origin),
                    ],
                    origin=origin,
                )
                out.append(A.LocalDecl(name=fin, init=A.IntLit(0), origin=origin))
                out.append(outer)
                sites += 1
                continue
            out.append(_recurse_blocks(stmt, rewrite_block))
        return out

    program.body[:] = rewrite_block(program.body)
    if sites:
        return program, PassReport("pulses", True, sites)
    return program, PassReport("pulses", False, 0, skip_reason)


# --- pass: bypass ---


_CMP_FOR_OP = {ReductionOp.MIN: "<", ReductionOp.MAX: ">"}


def _is_self_operand(operand, stmt: A.ReductionStmt) -> bool:
    return (
        isinstance(operand, A.PropRead)
        and operand.prop == stmt.target_prop
        and isinstance(operand.vertex, A.VarRef)
        and isinstance(stmt.target_vertex, A.VarRef)
        and operand.vertex.name == stmt.target_vertex.name
    )


def pass_get_bypass(program: A.Program, facts: AnalysisFacts) -> tuple[A.Program, PassReport]:
    fresh = _Fresh(program)
    sites = 0
    saw_exclusive = False

    def localize(expr, local_vars: set[str]):
        def fn(e):
            if (
                isinstance(e, A.PropRead)
                and isinstance(e.vertex, A.VarRef)
                and e.vertex.name in local_vars
            ):
                return A.LocalPropRead(prop=e.prop, vertex=e.vertex)
            return e

        return expr_map(expr, fn)

    def rewrite_region(block: list, local_vars: set[str], in_frontier: bool) -> list:
        nonlocal sites
        out = []
        for stmt in block:
            if isinstance(stmt, (A.ForAllNodes, A.FrontierLoop)):
                inner_vars = local_vars | {stmt.var}
                inner_front = in_frontier or isinstance(stmt, A.FrontierLoop)
                out.append(
                    dataclasses.replace(
                        stmt, body=rewrite_region(stmt.body, inner_vars, inner_front)
                    )
                )
                continue
            if isinstance(stmt, A.ReductionStmt) and isinstance(stmt.red, A.OpCall):
                out.extend(rewrite_reduction(stmt, local_vars, in_frontier))
                continue
            inner_front = in_frontier or _is_frontier_structure(stmt)
            rebuilt = _recurse_blocks(stmt, lambda b: rewrite_region(b, local_vars, inner_front))
            rebuilt = stmt_map_exprs(rebuilt, lambda e: _localize_one(e, local_vars))
            out.append(rebuilt)
        return out

    def _localize_one(e, local_vars):
        if (
            isinstance(e, A.PropRead)
            and isinstance(e.vertex, A.VarRef)
            and e.vertex.name in local_vars
        ):
            return A.LocalPropRead(prop=e.prop, vertex=e.vertex)
        return e

    def rewrite_reduction(stmt: A.ReductionStmt, local_vars: set[str], in_frontier: bool) -> list:
        nonlocal sites
        if stmt.origin == "pass:bypass":
            return [stmt]
        op = stmt.red.op
        origin = "pass:bypass"
        kept = [a for a in stmt.red.args if not _is_self_operand(a, stmt)]
        dropped_self = len(kept) != len(stmt.red.args)
        localized = [localize(a, local_vars) for a in kept]
        changed_reads = localized != kept or dropped_self
        target = stmt.target_vertex
        target_local = isinstance(target, A.VarRef) and target.name in local_vars
        split_ok = op in _CMP_FOR_OP and in_frontier and len(localized) == 1
        if not split_ok:
            if not changed_reads:
                return [stmt]
            sites += 1
            new_red = dataclasses.replace(stmt.red, args=localized)
            return [dataclasses.replace(stmt, red=new_red, origin=origin)]

        cexpr = localized[0]
        prop = stmt.target_prop
        cur = fresh.make("_b")
        cand = fresh.make("_b")
        apply_block = [
            A.LocalDecl(
                name=cur, init=A.LocalPropRead(prop=prop, vertex=copy.deepcopy(target)), origin=origin
            ),
            A.LocalDecl(name=cand, init=cexpr, origin=origin),
            A.IfStmt(
                cond=A.BinOp(op=_CMP_FOR_OP[op], left=A.VarRef(cand), right=A.VarRef(cur)),
                then=[
                    A.LocalPropWrite(
                        prop=prop, vertex=copy.deepcopy(target), value=A.VarRef(cand), origin=origin
                    )
                ],
                orelse=[],
                origin=origin,
            ),
        ]
        sites += 1
        if target_local:
            return apply_block
        queue_stmt = dataclasses.replace(
            stmt,
            red=dataclasses.replace(stmt.red, args=[copy.deepcopy(cexpr)]),
            origin=origin,
        )
        return [
            A.IfStmt(
                cond=A.IsLocal(vertex=copy.deepcopy(target)),
                then=apply_block,
                orelse=[queue_stmt],
                origin=origin,
            )
        ]

    def walk(block: list, local_vars: set[str], in_frontier: bool) -> list:
        nonlocal saw_exclusive
        out = []
        for stmt in block:
            has_reduction = any(
                isinstance(s, A.ReductionStmt) for s in A.walk_statements([stmt])
            )
            if facts.is_exclusive(stmt) and has_reduction:
                saw_exclusive = True
                out.extend(rewrite_region([stmt], set(local_vars), in_frontier))
                continue
            inner_vars = set(local_vars)
            if isinstance(stmt, (A.ForAllNodes, A.FrontierLoop)):
                inner_vars.add(stmt.var)
            inner_front = in_frontier or _is_frontier_structure(stmt)
            out.append(_recurse_blocks(stmt, lambda b: walk(b, inner_vars, inner_front)))
        return out

    program.body[:] = walk(program.body, set(), False)
    if sites:
        return program, PassReport("bypass", True, sites)
    reason = (
        "reduction sites already in bypassed form"
        if saw_exclusive
        else "no reduction-exclusive statements to bypass"
    )
    return program, PassReport("bypass", False, 0, reason)


# --- pass: cache ---


def pass_opportunistic_cache(program: A.Program, facts: AnalysisFacts) -> tuple[A.Program, PassReport]:
    fresh = _Fresh(program)
    sites = 0
    saw_candidate_region = False
    origin = "pass:cache"

    def walk(block: list, local_vars: set[str]) -> list:
        nonlocal saw_candidate_region
        out = []
        for stmt in block:
            inner_vars = set(local_vars)
            if isinstance(stmt, (A.ForAllNodes, A.FrontierLoop)):
                inner_vars.add(stmt.var)
            safe = facts.cache_safe_props(stmt)
            if safe and facts.is_exclusive(stmt):
                saw_candidate_region = True
                out.extend(rewrite_region(stmt, safe, set(local_vars)))
                continue
            out.append(_recurse_blocks(stmt, lambda b: walk(b, inner_vars)))
        return out

    def rewrite_region(region_stmt, safe: frozenset, outer_vars: set[str]) -> list:
        nonlocal sites
        caches: dict[str, str] = {}  # property -> memo name

        def process_block(block: list, local_vars: set[str]) -> list:
            out = []
            for stmt in block:
                if getattr(stmt, "origin", None) == origin:
                    out.append(stmt)
                    continue
                inner_vars = set(local_vars)
                if isinstance(stmt, (A.ForAllNodes, A.FrontierLoop)):
                    inner_vars.add(stmt.var)
                rebuilt = _recurse_blocks(stmt, lambda b: process_block(b, inner_vars))
                if isinstance(stmt, A.WhileStmt):
                    # a fill hoisted above a loop head would go stale once the
                    # memo clears at a pulse boundary; loop conditions keep
                    # their direct reads
                    out.append(rebuilt)
                    continue
                rebuilt, fills = rewrite_stmt_exprs(rebuilt, local_vars)
                out.extend(fills)
                out.append(rebuilt)
            return out

        def rewrite_stmt_exprs(stmt, local_vars: set[str]):
            nonlocal sites
            fills: list = []
            filled_keys: set[tuple[str, str]] = set()

            def fn(e):
                nonlocal sites
                if (
                    isinstance(e, A.PropRead)
                    and e.prop in safe
                    and isinstance(e.vertex, A.VarRef)
                    and e.vertex.name not in local_vars
                ):
                    prop = e.prop
                    var = e.vertex.name
                    cache = caches.setdefault(prop, fresh.make("_c"))
                    if (prop, var) not in filled_keys:
                        filled_keys.add((prop, var))
                        fills.append(
                            A.IfStmt(
                                cond=A.NotExpr(operand=A.CacheHas(cache=cache, key=A.VarRef(var))),
                                then=[
                                    A.CacheStore(
                                        cache=cache,
                                        key=A.VarRef(var),
                                        value=A.PropRead(prop=prop, vertex=A.VarRef(var)),
                                        origin=origin,
                                    )
                                ],
                                orelse=[],
                                origin=origin,
                            )
                        )
                    sites += 1
                    return A.CacheRead(cache=cache, key=A.VarRef(var))
                return e

            return stmt_map_exprs(stmt, fn), fills

        core = process_block([region_stmt], outer_vars)
        if not caches:
            return [region_stmt]
        decls = [A.CacheDecl(name=name, origin=origin) for name in caches.values()]
        clears = [A.CacheClear(cache=name, origin=origin) for name in caches.values()]
        rewritten = core[-1]
        preamble = core[:-1]
        # memo clears follow the pulse boundary: after each explicit sync when
        # one exists inside the rewritten statement, otherwise trailing the
        # statement (its implicit sync point)
        if isinstance(rewritten, A.WhileStmt) and any(
            isinstance(s, A.SyncReduction) for s in rewritten.body
        ):
            new_body = []
            for s in rewritten.body:
                new_body.append(s)
                if isinstance(s, A.SyncReduction):
                    new_body.extend(copy.deepcopy(clears))
            rewritten = dataclasses.replace(rewritten, body=new_body)
            return decls + preamble + [rewritten]
        return decls + preamble + [rewritten] + clears

    program.body[:] = walk(program.body, set())
    if sites:
        return program, PassReport("cache", True, sites)
    reason = (
        "cache-safe reads are all provably local"
        if saw_candidate_region
        else "no cache-safe reads inside reduction-exclusive statements"
    )
    return program, PassReport("cache", False, 0, reason)


_PASS_FNS = {
    "reorder": pass_reorder_neighborhood,
    "pulses": pass_aggregate_pulses,
    "bypass": pass_get_bypass,
    "cache": pass_opportunistic_cache,
}


def normalize_pass_names(passes) -> tuple[str, ...]:
    for p in passes:
        if p not in _PASS_FNS:
            raise ValueError(f"unknown pass {p!r}; available: {', '.join(PASS_ORDER)}")
    return tuple(p for p in PASS_ORDER if p in set(passes))


def apply_pass(name: str, program: A.Program, facts: AnalysisFacts) -> tuple[A.Program, PassReport]:
    return _PASS_FNS[name](program, facts)


def run_passes(program: A.Program, passes) -> tuple[A.Program, AnalysisFacts, list[PassReport]]:
    """Apply the requested passes in canonical order on a copy of the program."""
    ordered = normalize_pass_names(passes)
    prog = copy.deepcopy(program)
    reports: list[PassReport] = []
    for name in ordered:
        facts = analyze(prog)
        prog, report = _PASS_FNS[name](prog, facts)
        reports.append(report)
    facts = analyze(prog)
    return prog, facts, reports


def run_passes_with_diffs(program: A.Program, passes):
    """Like run_passes but also captures (pass, before_text, after_text) tuples."""
    from graphpulse.printer import pretty_print

    ordered = normalize_pass_names(passes)
    prog = copy.deepcopy(program)
    reports: list[PassReport] = []
    diffs: list[tuple[str, str, str]] = []
    for name in ordered:
        facts = analyze(prog)
        before = pretty_print(prog)
        prog, report = _PASS_FNS[name](prog, facts)
        after = pretty_print(prog)
        reports.append(report)
        if report.fired:
            diffs.append((name, before, after))
    facts = analyze(prog)
    return prog, facts, reports, diffs
