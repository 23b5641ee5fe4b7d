"""Reduction-exclusivity and cache-safety analysis.

A statement is reduction-exclusive when its subtree reaches exactly one
reduction statement and the property set that reduction touches is neither
read nor written anywhere else in that subtree.  Nesting closes downward:
every statement inside a reduction-exclusive statement is itself
reduction-exclusive (checked as a property test, computed bottom-up here).

A property is opportunistically cache safe within a reduction-exclusive
statement when it is read there but never updated there; the updated
target property is always excluded.  Safety is tracked at property
granularity, which is the conservative reading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from graphpulse import ast_nodes as A


def expr_prop_reads(e, out: set[str]) -> None:
    if isinstance(e, (A.PropRead, A.LocalPropRead)):
        out.add(e.prop)
        expr_prop_reads(e.vertex, out)
    elif isinstance(e, A.BinOp):
        expr_prop_reads(e.left, out)
        expr_prop_reads(e.right, out)
    elif isinstance(e, A.NotExpr):
        expr_prop_reads(e.operand, out)
    elif isinstance(e, (A.GetEdge, A.GetEdgeI, A.GetEdgeOther)):
        pass
    elif isinstance(e, (A.CacheHas, A.CacheRead)):
        expr_prop_reads(e.key, out)
    elif isinstance(e, A.IsLocal):
        expr_prop_reads(e.vertex, out)
    # IntLit, VarRef, EdgeWeight, FrontierNonEmpty read no properties


def stmt_own_reads(stmt) -> set[str]:
    """Properties read by this statement's own expressions (children excluded)."""
    out: set[str] = set()
    if isinstance(stmt, A.LocalDecl):
        expr_prop_reads(stmt.init, out)
    elif isinstance(stmt, A.AssignVar):
        expr_prop_reads(stmt.value, out)
    elif isinstance(stmt, A.LocalPropWrite):
        expr_prop_reads(stmt.vertex, out)
        expr_prop_reads(stmt.value, out)
    elif isinstance(stmt, A.CacheStore):
        expr_prop_reads(stmt.key, out)
        expr_prop_reads(stmt.value, out)
    elif isinstance(stmt, A.IfStmt):
        expr_prop_reads(stmt.cond, out)
    elif isinstance(stmt, A.WhileStmt):
        expr_prop_reads(stmt.cond, out)
    elif isinstance(stmt, A.ReductionStmt):
        for operand in A.red_operands(stmt.red):
            expr_prop_reads(operand, out)
    return out


def stmt_own_writes(stmt) -> set[str]:
    if isinstance(stmt, A.ReductionStmt):
        return {stmt.target_prop}
    if isinstance(stmt, A.LocalPropWrite):
        return {stmt.prop}
    if isinstance(stmt, A.FixSource) and stmt.prop:
        return {stmt.prop}
    return set()


def reduction_sites(stmts: list) -> list[A.ReductionStmt]:
    return [s for s in A.walk_statements(stmts) if isinstance(s, A.ReductionStmt)]


@dataclass
class AnalysisFacts:
    exclusive: dict[int, bool] = field(default_factory=dict)
    cache_safe: dict[int, frozenset[str]] = field(default_factory=dict)
    subtree_reads: dict[int, frozenset[str]] = field(default_factory=dict)
    subtree_writes: dict[int, frozenset[str]] = field(default_factory=dict)
    frontier_context: set[int] = field(default_factory=set)
    node_of: dict[int, object] = field(default_factory=dict)

    def is_exclusive(self, stmt) -> bool:
        return self.exclusive.get(id(stmt), False)

    def cache_safe_props(self, stmt) -> frozenset[str]:
        return self.cache_safe.get(id(stmt), frozenset())

    def in_frontier_context(self, stmt) -> bool:
        return id(stmt) in self.frontier_context


def _is_frontier_while(stmt) -> bool:
    return isinstance(stmt, A.WhileStmt) and isinstance(stmt.cond, A.FrontierNonEmpty)


def analyze(program: A.Program) -> AnalysisFacts:
    """Compute exclusivity, cache safety, subtree read/write sets, and
    frontier-context membership in one bottom-up walk."""
    facts = AnalysisFacts()
    analyze_reduction_exclusive(program, facts)
    analyze_cache_safety(program, facts)
    _mark_frontier_context(program.body, inside=False, facts=facts)
    return facts


def analyze_reduction_exclusive(program: A.Program, facts: AnalysisFacts | None = None) -> AnalysisFacts:
    if facts is None:
        facts = AnalysisFacts()

    def visit(stmt) -> tuple[set[str], set[str], list]:
        reads = stmt_own_reads(stmt)
        writes = stmt_own_writes(stmt)
        reds: list = [stmt] if isinstance(stmt, A.ReductionStmt) else []
        for block in A.child_blocks(stmt):
            for child in block:
                c_reads, c_writes, c_reds = visit(child)
                reads |= c_reads
                writes |= c_writes
                reds.extend(c_reds)
        facts.node_of[id(stmt)] = stmt
        facts.subtree_reads[id(stmt)] = frozenset(reads)
        facts.subtree_writes[id(stmt)] = frozenset(writes)
        facts.exclusive[id(stmt)] = _exclusive_here(stmt, reds)
        return reads, writes, reds

    for top in program.body:
        visit(top)
    return facts


def _exclusive_here(stmt, reds: list) -> bool:
    if len(reds) != 1:
        return False
    red = reds[0]
    touched = stmt_own_reads(red) | {red.target_prop}

    def clean(node) -> bool:
        if node is red:
            return True
        if stmt_own_reads(node) & touched or stmt_own_writes(node) & touched:
            return False
        return all(clean(child) for block in A.child_blocks(node) for child in block)

    return clean(stmt)


def analyze_cache_safety(program: A.Program, facts: AnalysisFacts) -> AnalysisFacts:
    for sid, node in facts.node_of.items():
        if not facts.exclusive.get(sid, False):
            facts.cache_safe[sid] = frozenset()
            continue
        reads = facts.subtree_reads[sid]
        writes = facts.subtree_writes[sid]
        facts.cache_safe[sid] = frozenset(reads - writes)
    return facts


def _mark_frontier_context(stmts: list, inside: bool, facts: AnalysisFacts) -> None:
    for stmt in stmts:
        here = inside or isinstance(stmt, A.FrontierLoop) or _is_frontier_while(stmt)
        if here:
            facts.frontier_context.add(id(stmt))
        for block in A.child_blocks(stmt):
            _mark_frontier_context(block, here, facts)
