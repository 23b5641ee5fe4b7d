"""Canonical pretty-printer: parse(pretty_print(ast)) equals ast structurally."""

from __future__ import annotations

from graphpulse import ast_nodes as A
from graphpulse.ops import INF

_INDENT = "  "

# precedence: comparisons 0, additive 1, multiplicative 2, atoms 3
_PREC = {"<": 0, ">": 0, "<=": 0, ">=": 0, "==": 0, "!=": 0, "+": 1, "-": 1, "*": 2}


def fmt_expr(e: A.Expr, parent_prec: int = -1) -> str:
    if isinstance(e, A.IntLit):
        return "INF" if e.value == INF else str(e.value)
    if isinstance(e, A.VarRef):
        return e.name
    if isinstance(e, A.PropRead):
        return f"{fmt_expr(e.vertex)}.{e.prop}"
    if isinstance(e, A.LocalPropRead):
        return f"{e.prop}.local[{fmt_expr(e.vertex)}]"
    if isinstance(e, A.EdgeWeight):
        return f"{fmt_expr(e.edge)}.weight"
    if isinstance(e, A.IsLocal):
        return f"g.is_local({fmt_expr(e.vertex)})"
    if isinstance(e, A.FrontierNonEmpty):
        return "g.reduction_frontier()"
    if isinstance(e, A.CacheHas):
        return f"{e.cache}.has({fmt_expr(e.key)})"
    if isinstance(e, A.CacheRead):
        return f"{e.cache}[{fmt_expr(e.key)}]"
    if isinstance(e, A.GetEdge):
        return f"g.get_edge({fmt_expr(e.v)}, {fmt_expr(e.nbr)})"
    if isinstance(e, A.GetEdgeI):
        return f"g.get_edge_i({fmt_expr(e.v)}, {fmt_expr(e.index)})"
    if isinstance(e, A.GetEdgeOther):
        return f"g.get_edge_other({fmt_expr(e.v)}, {fmt_expr(e.edge)})"
    if isinstance(e, A.NotExpr):
        inner = fmt_expr(e.operand, parent_prec=3)
        if isinstance(e.operand, A.BinOp):
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(e, A.BinOp):
        prec = _PREC[e.op]
        text = f"{fmt_expr(e.left, prec)} {e.op} {fmt_expr(e.right, prec + 1)}"
        if prec < parent_prec:
            return f"({text})"
        return text
    raise TypeError(f"cannot print expression {e!r}")


def fmt_red(red: A.RedExpr) -> str:
    if isinstance(red, A.OpCall):
        args = ", ".join(fmt_expr(a) for a in red.args)
        return f"{red.op.value}({args})"
    tail = "".join(f", {fmt_expr(t)}" for t in red.tail)
    return f"{red.op.value}<{fmt_red(red.inner)}>{tail}"


def _decl_init(init) -> str:
    if init == "INF" or init == "NODE_ID":
        return init
    return str(init)


def _emit(stmt: A.Stmt, out: list[str], depth: int) -> None:
    pad = _INDENT * depth
    if isinstance(stmt, A.PropDecl):
        out.append(f"{pad}propNodes<int> {stmt.name} = {_decl_init(stmt.init)};")
    elif isinstance(stmt, A.CacheDecl):
        out.append(f"{pad}cache<int> {stmt.name};")
    elif isinstance(stmt, A.LocalDecl):
        out.append(f"{pad}local int {stmt.name} = {fmt_expr(stmt.init)};")
    elif isinstance(stmt, A.EdgeDecl):
        out.append(f"{pad}Edge {stmt.name} = {fmt_expr(stmt.call)};")
    elif isinstance(stmt, A.AssignVar):
        out.append(f"{pad}{stmt.name} = {fmt_expr(stmt.value)};")
    elif isinstance(stmt, A.IncrStmt):
        out.append(f"{pad}{stmt.name}++;")
    elif isinstance(stmt, A.LocalPropWrite):
        out.append(f"{pad}{stmt.prop}.local[{fmt_expr(stmt.vertex)}] = {fmt_expr(stmt.value)};")
    elif isinstance(stmt, A.CacheStore):
        out.append(f"{pad}{stmt.cache}[{fmt_expr(stmt.key)}] = {fmt_expr(stmt.value)};")
    elif isinstance(stmt, A.CacheClear):
        out.append(f"{pad}{stmt.cache}.clear();")
    elif isinstance(stmt, A.FixSource):
        out.append(f"{pad}fixSource({stmt.vertex}, {stmt.value});")
    elif isinstance(stmt, A.SyncReduction):
        out.append(f"{pad}g.sync_reduction();")
    elif isinstance(stmt, A.AllFinishedStmt):
        out.append(f"{pad}{stmt.var} = g.all_finished({stmt.var});")
    elif isinstance(stmt, A.ReductionStmt):
        lhs = f"{fmt_expr(stmt.target_vertex)}.{stmt.target_prop}"
        out.append(f"{pad}<{lhs}> = <{fmt_red(stmt.red)}>;")
    elif isinstance(stmt, A.IfStmt):
        out.append(f"{pad}if ({fmt_expr(stmt.cond)}) {{")
        for s in stmt.then:
            _emit(s, out, depth + 1)
        if stmt.orelse:
            out.append(f"{pad}}} else {{")
            for s in stmt.orelse:
                _emit(s, out, depth + 1)
        out.append(f"{pad}}}")
    elif isinstance(stmt, A.WhileStmt):
        out.append(f"{pad}while ({fmt_expr(stmt.cond)}) {{")
        for s in stmt.body:
            _emit(s, out, depth + 1)
        out.append(f"{pad}}}")
    elif isinstance(stmt, A.ForAllNodes):
        out.append(f"{pad}forall {stmt.var} in g.nodes() {{")
        for s in stmt.body:
            _emit(s, out, depth + 1)
        out.append(f"{pad}}}")
    elif isinstance(stmt, A.ForAllNeighbors):
        out.append(f"{pad}forall {stmt.var} in g.neighbors({stmt.of}) {{")
        for s in stmt.body:
            _emit(s, out, depth + 1)
        out.append(f"{pad}}}")
    elif isinstance(stmt, A.FrontierLoop):
        out.append(f"{pad}forall {stmt.var} in g.reduction_frontier() {{")
        for s in stmt.body:
            _emit(s, out, depth + 1)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"cannot print statement {stmt!r}")


def pretty_print(program: A.Program) -> str:
    out: list[str] = []
    for stmt in program.body:
        _emit(stmt, out, 0)
    return "\n".join(out) + ("\n" if out else "")
