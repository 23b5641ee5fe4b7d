"""AST for the mini graph DSL.

Statements and expressions are plain dataclasses compared structurally;
source positions and pass provenance are excluded from equality so that
parse(pretty_print(x)) == x holds. Nodes introduced by optimization passes
(local array access, ownership guards, caches, explicit sync) are ordinary
statements: the printer can render any analyzed or transformed tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from graphpulse.ops import ReductionOp

Pos = tuple[int, int]  # (line, col), 1-based


def _pos_field():
    return field(default=None, compare=False, repr=False)


def _origin_field():
    return field(default=None, compare=False, repr=False)


# --- expressions ---


@dataclass
class IntLit:
    value: int
    pos: Optional[Pos] = _pos_field()


@dataclass
class VarRef:
    name: str
    pos: Optional[Pos] = _pos_field()


@dataclass
class PropRead:
    prop: str
    vertex: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class LocalPropRead:
    """Direct dereference of the owning rank's array: prop.local[v]."""

    prop: str
    vertex: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class EdgeWeight:
    edge: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class IsLocal:
    vertex: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class FrontierNonEmpty:
    pos: Optional[Pos] = _pos_field()


@dataclass
class CacheHas:
    cache: str
    key: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class CacheRead:
    cache: str
    key: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class GetEdge:
    v: "Expr"
    nbr: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class GetEdgeI:
    v: "Expr"
    index: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class GetEdgeOther:
    v: "Expr"
    edge: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class BinOp:
    op: str  # + - * < > <= >= == !=
    left: "Expr"
    right: "Expr"
    pos: Optional[Pos] = _pos_field()


@dataclass
class NotExpr:
    operand: "Expr"
    pos: Optional[Pos] = _pos_field()


Expr = Union[
    IntLit,
    VarRef,
    PropRead,
    LocalPropRead,
    EdgeWeight,
    IsLocal,
    FrontierNonEmpty,
    CacheHas,
    CacheRead,
    GetEdge,
    GetEdgeI,
    GetEdgeOther,
    BinOp,
    NotExpr,
]


# --- reduction right-hand sides ---


@dataclass
class OpCall:
    op: ReductionOp
    args: list[Expr]
    pos: Optional[Pos] = _pos_field()


@dataclass
class OpNested:
    """Composite form like Sum<Max(a, b)>, 1: parsed, rejected at lowering."""

    op: ReductionOp
    inner: "RedExpr"
    tail: list[Expr]
    pos: Optional[Pos] = _pos_field()


RedExpr = Union[OpCall, OpNested]


# --- statements ---


@dataclass
class PropDecl:
    name: str
    init: Union[int, str]  # int literal, "INF", or "NODE_ID"
    pos: Optional[Pos] = _pos_field()


@dataclass
class LocalDecl:
    name: str
    init: Expr
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class EdgeDecl:
    name: str
    call: Union[GetEdge, GetEdgeI]
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class AssignVar:
    name: str
    value: Expr
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class IncrStmt:
    name: str
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class LocalPropWrite:
    prop: str
    vertex: Expr
    value: Expr
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class CacheDecl:
    name: str
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class CacheStore:
    cache: str
    key: Expr
    value: Expr
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class CacheClear:
    cache: str
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class IfStmt:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"]
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class WhileStmt:
    cond: Expr
    body: list["Stmt"]
    # Set by the pulse-aggregation pass on the inner drain loop: iterate the
    # local frontier without any implicit collectives.
    local_drain: bool = False
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class ForAllNodes:
    var: str
    body: list["Stmt"]
    pos: Optional[Pos] = _pos_field()


@dataclass
class ForAllNeighbors:
    var: str
    of: str
    body: list["Stmt"]
    pos: Optional[Pos] = _pos_field()


@dataclass
class FrontierLoop:
    var: str
    body: list["Stmt"]
    pos: Optional[Pos] = _pos_field()


@dataclass
class ReductionStmt:
    target_prop: str
    target_vertex: Expr
    red: RedExpr
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class FixSource:
    vertex: int
    value: int
    prop: Optional[str] = None  # resolved to the last-declared property
    pos: Optional[Pos] = _pos_field()


@dataclass
class SyncReduction:
    """Explicit pulse boundary inserted by the pulse-aggregation pass."""

    props: tuple[str, ...] = ()
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


@dataclass
class AllFinishedStmt:
    """var = g.all_finished(var): AND-combine the local finished flag."""

    var: str
    pos: Optional[Pos] = _pos_field()
    origin: Optional[str] = _origin_field()


Stmt = Union[
    PropDecl,
    LocalDecl,
    EdgeDecl,
    AssignVar,
    IncrStmt,
    LocalPropWrite,
    CacheDecl,
    CacheStore,
    CacheClear,
    IfStmt,
    WhileStmt,
    ForAllNodes,
    ForAllNeighbors,
    FrontierLoop,
    ReductionStmt,
    FixSource,
    SyncReduction,
    AllFinishedStmt,
]


@dataclass
class Program:
    body: list[Stmt]


LOOP_NODES = (ForAllNodes, ForAllNeighbors, FrontierLoop, WhileStmt)
BLOCK_FIELDS = {
    IfStmt: ("then", "orelse"),
    WhileStmt: ("body",),
    ForAllNodes: ("body",),
    ForAllNeighbors: ("body",),
    FrontierLoop: ("body",),
}


def child_blocks(stmt) -> list[list[Stmt]]:
    fields = BLOCK_FIELDS.get(type(stmt))
    if not fields:
        return []
    return [getattr(stmt, f) for f in fields]


def walk_statements(stmts: list[Stmt]):
    """Yield every statement in a block list, depth first, including nested ones."""
    for s in stmts:
        yield s
        for block in child_blocks(s):
            yield from walk_statements(block)


def red_operands(red: RedExpr) -> list[Expr]:
    """Flatten a reduction RHS into its operand expressions (composite included)."""
    if isinstance(red, OpCall):
        return list(red.args)
    out = red_operands(red.inner)
    out.extend(red.tail)
    return out
