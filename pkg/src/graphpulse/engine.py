"""Lowering and execution.

``lower`` compiles an analyzed AST into per-rank closures organized as an
ExecPlan; ``execute`` drives the plan on the lock-step world.  Pulse
boundaries are implicit in the source language: a frontier-driven while
synchronizes once per iteration behind a global has-work combine, and any
other top-level statement containing reductions synchronizes once after it
finishes.  The pulse-aggregation pass replaces those implicit points with
explicit sync / flag-combine statements, which suppress the implicit ones.

``execute_reference`` is a deliberately separate tree-walking interpreter
over the unpartitioned graph (sequential, queue-only, no short-circuiting)
that defines the language's semantics for every equivalence test.

A reduction statement evaluates all of its operands (property reads are
accounted); operands that syntactically restate the target slot contribute
to the queued value only for the idempotent operators, never for Sum, so a
queued contribution folded into the target at sync time always equals the
statement's assign-the-fold meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from graphpulse import ast_nodes as A
from graphpulse.analysis import AnalysisFacts, analyze
from graphpulse.config import RunConfig
from graphpulse.graph import EdgeNotFound, GlobalGraph, PartitionedGraph, partition_block
from graphpulse.ops import INF, ReductionOp, clamp, sat_add, sat_mul, sat_sub
from graphpulse.runtime import (
    CombineRequest,
    Metrics,
    NonTerminationError,
    SyncRequest,
    World,
)


class LowerError(Exception):
    def __init__(self, message: str, pos=None, filename: str = "<program>"):
        self.pos = pos
        if pos:
            super().__init__(f"{filename}:{pos[0]}:{pos[1]}: {message}")
        else:
            super().__init__(message)


class ExecError(RuntimeError):
    pass


def _is_frontier_while(stmt) -> bool:
    return (
        isinstance(stmt, A.WhileStmt)
        and isinstance(stmt.cond, A.FrontierNonEmpty)
        and not stmt.local_drain
    )


def contains_collective(stmt) -> bool:
    for s in [stmt, *(_s for b in A.child_blocks(stmt) for _s in A.walk_statements(b))]:
        if isinstance(s, (A.SyncReduction, A.AllFinishedStmt)) or _is_frontier_while(s):
            return True
    return False


def has_explicit_sync(stmts: list) -> bool:
    return any(isinstance(s, A.SyncReduction) for s in A.walk_statements(stmts))


def reduced_props_of(stmts: list) -> dict[str, ReductionOp]:
    """Property -> operator map over every reduction reachable in the block."""
    out: dict[str, ReductionOp] = {}
    for s in A.walk_statements(stmts):
        if isinstance(s, A.ReductionStmt):
            op = s.red.op
            prior = out.get(s.target_prop)
            if prior is not None and prior is not op:
                raise LowerError(
                    f"property {s.target_prop!r} is reduced with both {prior.value} and {op.value}",
                    s.pos,
                )
            out[s.target_prop] = op
    return out


class RankCtx:
    __slots__ = ("rank", "world", "lg", "lo", "hi", "frame", "metrics", "cfg")

    def __init__(self, rank: int, world: World, n_slots: int):
        self.rank = rank
        self.world = world
        self.lg = world.pgraph.locals[rank]
        self.lo, self.hi = world.pgraph.partition.owned_range[rank]
        self.frame = [0] * n_slots
        self.metrics = world.metrics
        self.cfg = world.config


@dataclass
class ExecPlan:
    program: A.Program
    prop_decls: list[tuple[str, object]]
    prop_ops: dict[str, ReductionOp]
    n_slots: int
    main: object  # fn(ctx) -> generator
    seed_all: bool
    has_fix_source: bool
    dump_lines: list[str] = field(default_factory=list)

    def dump(self) -> str:
        return "\n".join(self.dump_lines) + "\n"

    def make_rank_gen(self, world: World):
        def factory(rank: int):
            ctx = RankCtx(rank, world, self.n_slots)
            return self.main(ctx)

        return factory


class _Compiler:
    def __init__(self, program: A.Program, facts: AnalysisFacts, config: RunConfig, filename: str):
        self.program = program
        self.facts = facts
        self.config = config
        self.filename = filename
        self.scopes: list[dict[str, int]] = [{}]
        self.n_slots = 0
        self.prop_decl_order: list[str] = []
        self.prop_ops = reduced_props_of(program.body)
        self.dump: list[str] = []
        # statement ancestry while compiling, for short-circuit gating
        self._stack: list = []

    # --- scope helpers ---

    def push_scope(self):
        self.scopes.append({})

    def pop_scope(self):
        self.scopes.pop()

    def bind(self, name: str) -> int:
        slot = self.n_slots
        self.n_slots += 1
        self.scopes[-1][name] = slot
        return slot

    def slot_of(self, name: str) -> int:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise LowerError(f"internal: unbound variable {name!r} escaped the parser")

    def note(self, depth: int, text: str, origin=None):
        tag = f"  [{origin}]" if origin else ""
        self.dump.append(f"{'  ' * depth}{text}{tag}")

    # --- expressions ---

    def compile_expr(self, e):
        if isinstance(e, A.IntLit):
            value = e.value
            return lambda ctx: value
        if isinstance(e, A.VarRef):
            slot = self.slot_of(e.name)
            return lambda ctx: ctx.frame[slot]
        if isinstance(e, A.PropRead):
            prop = e.prop
            vfn = self.compile_expr(e.vertex)
            return lambda ctx: ctx.world.rma_get(prop, vfn(ctx), ctx.rank)
        if isinstance(e, A.LocalPropRead):
            prop = e.prop
            vfn = self.compile_expr(e.vertex)
            return lambda ctx: ctx.world.bypassed_get(prop, vfn(ctx), ctx.rank)
        if isinstance(e, A.EdgeWeight):
            efn = self.compile_expr(e.edge)
            return lambda ctx: ctx.lg.edge_weight(efn(ctx))
        if isinstance(e, A.IsLocal):
            vfn = self.compile_expr(e.vertex)
            return lambda ctx: 1 if ctx.lo <= vfn(ctx) < ctx.hi else 0
        if isinstance(e, A.FrontierNonEmpty):
            return lambda ctx: 1 if ctx.world.frontier_nonempty(ctx.rank) else 0
        if isinstance(e, A.CacheHas):
            cache = e.cache
            kfn = self.compile_expr(e.key)
            return lambda ctx: 1 if kfn(ctx) in ctx.world.memo_for(ctx.rank, cache) else 0
        if isinstance(e, A.CacheRead):
            cache = e.cache
            kfn = self.compile_expr(e.key)

            def read_memo(ctx):
                memo = ctx.world.memo_for(ctx.rank, cache)
                key = kfn(ctx)
                try:
                    return memo[key]
                except KeyError:
                    raise ExecError(f"cache {cache!r} read before fill for vertex {key}") from None

            return read_memo
        if isinstance(e, A.GetEdge):
            vfn = self.compile_expr(e.v)
            nfn = self.compile_expr(e.nbr)

            def get_edge(ctx):
                v = vfn(ctx)
                nbr = nfn(ctx)
                try:
                    handle = ctx.lg.edge_search(v, nbr, ctx.metrics)
                except EdgeNotFound as exc:
                    raise ExecError(str(exc)) from None
                if ctx.cfg.trace:
                    ctx.metrics.trace.append((v, nbr, ctx.lg.edge_weight(handle)))
                return handle

            return get_edge
        if isinstance(e, A.GetEdgeI):
            vfn = self.compile_expr(e.v)
            ifn = self.compile_expr(e.index)

            def get_edge_i(ctx):
                v = vfn(ctx)
                handle = ctx.lg.edge_at(v, ifn(ctx), ctx.metrics)
                if ctx.cfg.trace:
                    ctx.metrics.trace.append(
                        (v, ctx.lg.edge_other(v, handle), ctx.lg.edge_weight(handle))
                    )
                return handle

            return get_edge_i
        if isinstance(e, A.GetEdgeOther):
            vfn = self.compile_expr(e.v)
            efn = self.compile_expr(e.edge)
            return lambda ctx: ctx.lg.edge_other(vfn(ctx), efn(ctx))
        if isinstance(e, A.NotExpr):
            inner = self.compile_expr(e.operand)
            return lambda ctx: 1 if inner(ctx) == 0 else 0
        if isinstance(e, A.BinOp):
            lfn = self.compile_expr(e.left)
            rfn = self.compile_expr(e.right)
            op = e.op
            if op == "+":
                return lambda ctx: sat_add(lfn(ctx), rfn(ctx))
            if op == "-":
                return lambda ctx: sat_sub(lfn(ctx), rfn(ctx))
            if op == "*":
                return lambda ctx: sat_mul(lfn(ctx), rfn(ctx))
            if op == "<":
                return lambda ctx: 1 if lfn(ctx) < rfn(ctx) else 0
            if op == ">":
                return lambda ctx: 1 if lfn(ctx) > rfn(ctx) else 0
            if op == "<=":
                return lambda ctx: 1 if lfn(ctx) <= rfn(ctx) else 0
            if op == ">=":
                return lambda ctx: 1 if lfn(ctx) >= rfn(ctx) else 0
            if op == "==":
                return lambda ctx: 1 if lfn(ctx) == rfn(ctx) else 0
            if op == "!=":
                return lambda ctx: 1 if lfn(ctx) != rfn(ctx) else 0
            raise LowerError(f"unknown operator {op!r}", e.pos, self.filename)
        raise LowerError(f"cannot lower expression {type(e).__name__}", getattr(e, "pos", None), self.filename)

    # --- reduction ---

    def _is_self_operand(self, operand, stmt: A.ReductionStmt) -> bool:
        return (
            isinstance(operand, A.PropRead)
            and operand.prop == stmt.target_prop
            and isinstance(operand.vertex, A.VarRef)
            and isinstance(stmt.target_vertex, A.VarRef)
            and operand.vertex.name == stmt.target_vertex.name
        )

    def _sc_allowed(self, stmt: A.ReductionStmt, op: ReductionOp) -> bool:
        """Immediate local application is legal only for idempotent operators
        inside a reduction-exclusive convergence loop: the re-drain machinery
        makes early application converge to the same fixpoint. One-shot sweeps
        keep the delayed-update meaning of a reduction."""
        if not (self.config.short_circuit and op.monotonic):
            return False
        if not self.facts.in_frontier_context(stmt):
            return False
        for ancestor in reversed(self._stack):
            if isinstance(ancestor, A.FrontierLoop) or (
                isinstance(ancestor, A.WhileStmt) and isinstance(ancestor.cond, A.FrontierNonEmpty)
            ):
                return self.facts.is_exclusive(ancestor)
        return False

    def compile_reduction(self, stmt: A.ReductionStmt, depth: int):
        if isinstance(stmt.red, A.OpNested):
            raise LowerError(
                "composite reduction (nested operator form) has no execution semantics",
                stmt.pos,
                self.filename,
            )
        op = stmt.red.op
        prop = stmt.target_prop
        tvfn = self.compile_expr(stmt.target_vertex)
        operand_fns = []
        contributes = []
        for operand in stmt.red.args:
            operand_fns.append(self.compile_expr(operand))
            is_self = self._is_self_operand(operand, stmt)
            contributes.append(not (is_self and op is ReductionOp.SUM))
        sc = self._sc_allowed(stmt, op)
        identity = op.identity
        fold = op.fold
        tname = stmt.target_vertex.name if isinstance(stmt.target_vertex, A.VarRef) else "?"
        self.note(
            depth,
            f"reduce {prop}[{tname}] op={op.value} operands={len(operand_fns)} "
            f"short_circuit={'yes' if sc else 'no'}",
            stmt.origin,
        )

        if sc:
            def run_sc(ctx):
                target = tvfn(ctx)
                acc = identity
                for fn, use in zip(operand_fns, contributes):
                    val = fn(ctx)
                    if use:
                        acc = fold(acc, val)
                world = ctx.world
                if not world.short_circuit_local(ctx.rank, prop, target, acc, op):
                    world.add_to_red(ctx.rank, prop, target, acc)

            return run_sc

        def run_queue(ctx):
            target = tvfn(ctx)
            acc = identity
            for fn, use in zip(operand_fns, contributes):
                val = fn(ctx)
                if use:
                    acc = fold(acc, val)
            ctx.world.add_to_red(ctx.rank, prop, target, acc)

        return run_queue

    # --- statements ---

    def compile_block(self, stmts: list, depth: int):
        """Returns (is_gen, fn). Plain blocks are a single composed closure."""
        compiled = [self.compile_stmt(s, depth) for s in stmts]
        if not any(is_gen for is_gen, _ in compiled):
            fns = [fn for _, fn in compiled]
            if len(fns) == 1:
                return False, fns[0]

            def run_all(ctx, fns=tuple(fns)):
                for fn in fns:
                    fn(ctx)

            return False, run_all

        parts = compiled

        def run_gen(ctx):
            for is_gen, fn in parts:
                if is_gen:
                    yield from fn(ctx)
                else:
                    fn(ctx)

        return True, run_gen

    def compile_stmt(self, stmt, depth: int):
        self._stack.append(stmt)
        try:
            return self._compile_stmt_inner(stmt, depth)
        finally:
            self._stack.pop()

    def _compile_stmt_inner(self, stmt, depth: int):
        if isinstance(stmt, A.PropDecl):
            self.prop_decl_order.append(stmt.name)
            self.note(depth, f"prop {stmt.name} init={stmt.init}")
            return False, lambda ctx: None
        if isinstance(stmt, A.CacheDecl):
            self.note(depth, f"cache {stmt.name}", stmt.origin)
            return False, lambda ctx: None
        if isinstance(stmt, A.LocalDecl):
            fn = self.compile_expr(stmt.init)
            slot = self.bind(stmt.name)
            self.note(depth, f"local {stmt.name} (slot {slot})", stmt.origin)
            return False, lambda ctx: ctx.frame.__setitem__(slot, fn(ctx))
        if isinstance(stmt, A.EdgeDecl):
            fn = self.compile_expr(stmt.call)
            slot = self.bind(stmt.name)
            kind = "get_edge_i" if isinstance(stmt.call, A.GetEdgeI) else "get_edge"
            self.note(depth, f"edge {stmt.name} = {kind}(...)", stmt.origin)
            return False, lambda ctx: ctx.frame.__setitem__(slot, fn(ctx))
        if isinstance(stmt, A.AssignVar):
            fn = self.compile_expr(stmt.value)
            slot = self.slot_of(stmt.name)
            self.note(depth, f"assign {stmt.name}", stmt.origin)
            return False, lambda ctx: ctx.frame.__setitem__(slot, fn(ctx))
        if isinstance(stmt, A.IncrStmt):
            slot = self.slot_of(stmt.name)
            self.note(depth, f"incr {stmt.name}", stmt.origin)

            def incr(ctx):
                ctx.frame[slot] += 1

            return False, incr
        if isinstance(stmt, A.LocalPropWrite):
            prop = stmt.prop
            vfn = self.compile_expr(stmt.vertex)
            xfn = self.compile_expr(stmt.value)
            self.note(depth, f"local-store {prop}", stmt.origin)
            return False, lambda ctx: ctx.world.local_store(prop, vfn(ctx), xfn(ctx), ctx.rank)
        if isinstance(stmt, A.CacheStore):
            cache = stmt.cache
            kfn = self.compile_expr(stmt.key)
            xfn = self.compile_expr(stmt.value)
            self.note(depth, f"cache-fill {cache}", stmt.origin)

            def store(ctx):
                ctx.world.memo_for(ctx.rank, cache)[kfn(ctx)] = xfn(ctx)

            return False, store
        if isinstance(stmt, A.CacheClear):
            cache = stmt.cache
            self.note(depth, f"cache-clear {cache}", stmt.origin)
            return False, lambda ctx: ctx.world.memo_for(ctx.rank, cache).clear()
        if isinstance(stmt, A.FixSource):
            vertex, value, prop = stmt.vertex, stmt.value, stmt.prop
            self.note(depth, f"fixSource {prop}[{vertex}] = {value}")

            def fix(ctx):
                if ctx.lo <= vertex < ctx.hi:
                    ctx.world.props[prop][ctx.rank][vertex - ctx.lo] = value
                    ctx.world.frontiers[ctx.rank].add(vertex)

            return False, fix
        if isinstance(stmt, A.ReductionStmt):
            return False, self.compile_reduction(stmt, depth)
        if isinstance(stmt, A.IfStmt):
            cfn = self.compile_expr(stmt.cond)
            self.note(depth, "if", stmt.origin)
            self.push_scope()
            then_gen, then_fn = self.compile_block(stmt.then, depth + 1)
            self.pop_scope()
            if stmt.orelse:
                self.note(depth, "else")
            self.push_scope()
            else_gen, else_fn = (
                self.compile_block(stmt.orelse, depth + 1) if stmt.orelse else (False, lambda ctx: None)
            )
            self.pop_scope()
            if not then_gen and not else_gen:
                def run_if(ctx):
                    if cfn(ctx):
                        then_fn(ctx)
                    else:
                        else_fn(ctx)

                return False, run_if

            def run_if_gen(ctx):
                if cfn(ctx):
                    if then_gen:
                        yield from then_fn(ctx)
                    else:
                        then_fn(ctx)
                else:
                    if else_gen:
                        yield from else_fn(ctx)
                    else:
                        else_fn(ctx)

            return True, run_if_gen
        if isinstance(stmt, A.ForAllNodes):
            self.push_scope()
            slot = self.bind(stmt.var)
            self.note(depth, f"forall-nodes {stmt.var} (owned range)")
            body_gen, body_fn = self.compile_block(stmt.body, depth + 1)
            self.pop_scope()
            if not body_gen:
                def run_nodes(ctx):
                    frame = ctx.frame
                    for gid in range(ctx.lo, ctx.hi):
                        frame[slot] = gid
                        body_fn(ctx)

                return False, run_nodes

            def run_nodes_gen(ctx):
                for gid in range(ctx.lo, ctx.hi):
                    ctx.frame[slot] = gid
                    yield from body_fn(ctx)

            return True, run_nodes_gen
        if isinstance(stmt, A.ForAllNeighbors):
            of_slot = self.slot_of(stmt.of)
            self.push_scope()
            slot = self.bind(stmt.var)
            self.note(depth, f"forall-neighbors {stmt.var} of {stmt.of}")
            body_gen, body_fn = self.compile_block(stmt.body, depth + 1)
            self.pop_scope()
            if body_gen:
                raise LowerError("collectives inside a neighbor loop are not supported", stmt.pos, self.filename)

            def run_nbrs(ctx):
                frame = ctx.frame
                v = frame[of_slot]
                lg = ctx.lg
                start, end = lg.adj_slice(v)
                targets = lg.targets
                for j in range(start, end):
                    frame[slot] = targets[j]
                    body_fn(ctx)

            return False, run_nbrs
        if isinstance(stmt, A.FrontierLoop):
            self.push_scope()
            slot = self.bind(stmt.var)
            self.note(depth, f"frontier-loop {stmt.var}")
            body_gen, body_fn = self.compile_block(stmt.body, depth + 1)
            self.pop_scope()
            if body_gen:
                raise LowerError("collectives inside a frontier drain are not supported", stmt.pos, self.filename)

            def run_frontier(ctx):
                frame = ctx.frame
                for v in ctx.world.frontier_drain(ctx.rank):
                    frame[slot] = v
                    body_fn(ctx)

            return False, run_frontier
        if isinstance(stmt, A.WhileStmt):
            if _is_frontier_while(stmt):
                return self._compile_frontier_while(stmt, depth)
            return self._compile_generic_while(stmt, depth)
        if isinstance(stmt, A.SyncReduction):
            props = stmt.props or tuple(self._sync_order(self.prop_ops.keys()))
            self.note(depth, f"sync-reduction {', '.join(props)}", stmt.origin)

            def run_sync(ctx):
                for prop in props:
                    yield SyncRequest(prop)

            return True, run_sync
        if isinstance(stmt, A.AllFinishedStmt):
            slot = self.slot_of(stmt.var)
            self.note(depth, f"all-finished {stmt.var}", stmt.origin)

            def run_combine(ctx):
                result = yield CombineRequest("and", bool(ctx.frame[slot]))
                ctx.frame[slot] = 1 if result else 0

            return True, run_combine
        raise LowerError(f"cannot lower statement {type(stmt).__name__}", getattr(stmt, "pos", None), self.filename)

    def _sync_order(self, props) -> list[str]:
        declared = [p for p in self.prop_decl_order if p in props]
        extra = sorted(p for p in props if p not in self.prop_decl_order)
        return declared + extra

    def _implicit_sync_props(self, stmts: list) -> list[str]:
        if has_explicit_sync(stmts):
            return []
        return self._sync_order(reduced_props_of(stmts).keys())

    def _compile_frontier_while(self, stmt: A.WhileStmt, depth: int):
        self.note(depth, "while-frontier (global has-work OR; one sync per iteration)")
        self.push_scope()
        body_gen, body_fn = self.compile_block(stmt.body, depth + 1)
        self.pop_scope()
        sync_props = self._implicit_sync_props(stmt.body)
        if sync_props:
            self.note(depth + 1, f"implicit sync: {', '.join(sync_props)}")

        def run_loop(ctx):
            world = ctx.world
            while True:
                has_work = yield CombineRequest("or", world.frontier_nonempty(ctx.rank))
                if not has_work:
                    break
                if body_gen:
                    yield from body_fn(ctx)
                else:
                    body_fn(ctx)
                for prop in sync_props:
                    yield SyncRequest(prop)

        return True, run_loop

    def _compile_generic_while(self, stmt: A.WhileStmt, depth: int):
        label = "while-local-drain" if stmt.local_drain else "while"
        self.note(depth, f"{label} ({type(stmt.cond).__name__})", stmt.origin)
        cfn = self.compile_expr(stmt.cond)
        self.push_scope()
        body_gen, body_fn = self.compile_block(stmt.body, depth + 1)
        self.pop_scope()
        limit_hint = 0 if contains_collective(stmt) else 1

        if not body_gen:
            def run_plain(ctx):
                guard = 0
                limit = 16 * (ctx.world.pgraph.n + 1) if limit_hint else 0
                while cfn(ctx):
                    body_fn(ctx)
                    if limit:
                        guard += 1
                        if guard > limit:
                            raise NonTerminationError(
                                "local loop exceeded its iteration budget without converging"
                            )

            return False, run_plain

        def run_gen(ctx):
            while cfn(ctx):
                yield from body_fn(ctx)

        return True, run_gen

    # --- top level ---

    def compile_program(self):
        self.note(0, "plan")
        tops = []
        for stmt in self.program.body:
            is_gen, fn = self.compile_stmt(stmt, 1)
            sync_props: list[str] = []
            if not contains_collective(stmt):
                reduced = reduced_props_of([stmt])
                if reduced:
                    sync_props = self._sync_order(reduced.keys())
                    self.note(2, f"implicit sync after statement: {', '.join(sync_props)}")
            tops.append((is_gen, fn, sync_props))

        def main(ctx):
            for is_gen, fn, sync_props in tops:
                if is_gen:
                    yield from fn(ctx)
                else:
                    fn(ctx)
                for prop in sync_props:
                    yield SyncRequest(prop)

        return main


def lower(
    program: A.Program,
    facts: AnalysisFacts | None = None,
    config: RunConfig | None = None,
    filename: str = "<program>",
) -> ExecPlan:
    config = config or RunConfig()
    if facts is None:
        facts = analyze(program)
    comp = _Compiler(program, facts, config, filename)
    main = comp.compile_program()
    prop_decls = [(s.name, s.init) for s in program.body if isinstance(s, A.PropDecl)]
    fix_sources = [s for s in program.body if isinstance(s, A.FixSource)]
    uses_frontier = any(
        isinstance(s, A.FrontierLoop) or _is_frontier_while(s) or isinstance(s, A.WhileStmt)
        for s in A.walk_statements(program.body)
    )
    mode = config.frontier_seed
    if mode == "all":
        seed_all = uses_frontier
    elif mode == "source":
        seed_all = False
    else:  # auto
        seed_all = uses_frontier and not fix_sources
    return ExecPlan(
        program=program,
        prop_decls=prop_decls,
        prop_ops=comp.prop_ops,
        n_slots=comp.n_slots,
        main=main,
        seed_all=seed_all,
        has_fix_source=bool(fix_sources),
        dump_lines=comp.dump,
    )


def execute(
    plan: ExecPlan, pgraph: PartitionedGraph, config: RunConfig | None = None, world: World | None = None
) -> tuple[dict[str, list[int]], Metrics, World]:
    config = config or RunConfig(world_size=pgraph.world_size)
    if world is None:
        world = World(pgraph, config)
    for name, init in plan.prop_decls:
        world.declare_prop(name, init)
    for prop, op in plan.prop_ops.items():
        world.register_reduction(prop, op)
    if plan.seed_all:
        for rank, (lo, hi) in enumerate(pgraph.partition.owned_range):
            world.frontiers[rank].update(range(lo, hi))
    limit = config.pulse_limit(pgraph.n)
    world.pulse_limit = limit
    world.run_lockstep(plan.make_rank_gen(world), collective_limit=4 * limit + 16)
    results = {name: world.gather_prop(name) for name, _ in plan.prop_decls}
    return results, world.metrics, world


def run_program(
    program: A.Program,
    graph: GlobalGraph,
    config: RunConfig,
    facts: AnalysisFacts | None = None,
    filename: str = "<program>",
) -> tuple[dict[str, list[int]], Metrics, World]:
    plan = lower(program, facts=facts, config=config, filename=filename)
    pgraph = partition_block(graph, config.world_size)
    return execute(plan, pgraph, config)


# --- independent sequential reference semantics ---


class _RefInterp:
    """Queue-only fixed-point interpreter over the unpartitioned graph; the
    semantic ground truth every optimized execution must match."""

    def __init__(self, program: A.Program, g: GlobalGraph, max_pulses: int | None = None):
        self.program = program
        self.g = g
        self.arrays: dict[str, list[int]] = {}
        self.decl_order: list[str] = []
        self.pending: dict[str, dict[int, int]] = {}
        self.prop_ops = reduced_props_of(program.body)
        self.frontier: set[int] = set()
        self.pulses = 0
        self.max_pulses = max_pulses if max_pulses is not None else 4 * max(g.n, 1)

    def run(self) -> dict[str, list[int]]:
        fix_sources = [s for s in self.program.body if isinstance(s, A.FixSource)]
        uses_frontier = any(
            isinstance(s, (A.FrontierLoop, A.WhileStmt)) for s in A.walk_statements(self.program.body)
        )
        for stmt in self.program.body:
            if isinstance(stmt, A.PropDecl):
                self._declare(stmt)
        if uses_frontier and not fix_sources:
            self.frontier = set(range(self.g.n))
        env: dict[str, object] = {}
        for stmt in self.program.body:
            self._exec_top(stmt, env)
        return {name: self.arrays[name] for name in self.decl_order}

    def _declare(self, stmt: A.PropDecl):
        n = self.g.n
        if stmt.init == "INF":
            arr = [INF] * n
        elif stmt.init == "NODE_ID":
            arr = list(range(n))
        else:
            arr = [int(stmt.init)] * n
        self.arrays[stmt.name] = arr
        self.decl_order.append(stmt.name)

    def _exec_top(self, stmt, env):
        if isinstance(stmt, A.PropDecl):
            return
        if isinstance(stmt, A.FixSource):
            self.arrays[stmt.prop][stmt.vertex] = stmt.value
            self.frontier.add(stmt.vertex)
            return
        if isinstance(stmt, A.WhileStmt) and isinstance(stmt.cond, A.FrontierNonEmpty):
            while self.frontier:
                for s in stmt.body:
                    self._exec(s, env)
                self._apply_pending()
            return
        if isinstance(stmt, A.FrontierLoop):
            self._exec(stmt, env)
            self._apply_pending()
            return
        self._exec(stmt, env)
        if reduced_props_of([stmt]):
            self._apply_pending()

    def _exec(self, stmt, env):
        if isinstance(stmt, A.FrontierLoop):
            drained = sorted(self.frontier)
            self.frontier.clear()
            for v in drained:
                env[stmt.var] = v
                for s in stmt.body:
                    self._exec(s, env)
            return
        if isinstance(stmt, A.ForAllNodes):
            for v in range(self.g.n):
                env[stmt.var] = v
                for s in stmt.body:
                    self._exec(s, env)
            return
        if isinstance(stmt, A.ForAllNeighbors):
            v = env[stmt.of]
            for j in range(self.g.offsets[v], self.g.offsets[v + 1]):
                env[stmt.var] = self.g.targets[j]
                for s in stmt.body:
                    self._exec(s, env)
            return
        if isinstance(stmt, A.EdgeDecl):
            env[stmt.name] = self._eval(stmt.call, env)
            return
        if isinstance(stmt, A.LocalDecl):
            env[stmt.name] = self._eval(stmt.init, env)
            return
        if isinstance(stmt, A.AssignVar):
            env[stmt.name] = self._eval(stmt.value, env)
            return
        if isinstance(stmt, A.IncrStmt):
            env[stmt.name] += 1
            return
        if isinstance(stmt, A.IfStmt):
            branch = stmt.then if self._eval(stmt.cond, env) else stmt.orelse
            for s in branch:
                self._exec(s, env)
            return
        if isinstance(stmt, A.WhileStmt):
            if isinstance(stmt.cond, A.FrontierNonEmpty):
                raise LowerError("nested frontier while is not part of the reference semantics", stmt.pos)
            while self._eval(stmt.cond, env):
                for s in stmt.body:
                    self._exec(s, env)
            return
        if isinstance(stmt, A.ReductionStmt):
            self._exec_reduction(stmt, env)
            return
        raise LowerError(
            f"reference semantics does not cover {type(stmt).__name__}", getattr(stmt, "pos", None)
        )

    def _exec_reduction(self, stmt: A.ReductionStmt, env):
        if isinstance(stmt.red, A.OpNested):
            raise LowerError("composite reduction has no execution semantics", stmt.pos)
        op = stmt.red.op
        target = self._eval(stmt.target_vertex, env)
        acc = op.identity
        for operand in stmt.red.args:
            val = self._eval(operand, env)
            is_self = (
                isinstance(operand, A.PropRead)
                and operand.prop == stmt.target_prop
                and isinstance(operand.vertex, A.VarRef)
                and isinstance(stmt.target_vertex, A.VarRef)
                and operand.vertex.name == stmt.target_vertex.name
            )
            if not (is_self and op is ReductionOp.SUM):
                acc = op.fold(acc, val)
        slot = self.pending.setdefault(stmt.target_prop, {})
        slot[target] = op.fold(slot[target], acc) if target in slot else acc

    def _apply_pending(self):
        self.pulses += 1
        if self.pulses > self.max_pulses:
            raise NonTerminationError(f"reference pulse limit {self.max_pulses} exceeded")
        for prop in self.decl_order:
            updates = self.pending.pop(prop, None)
            if not updates:
                continue
            op = self.prop_ops[prop]
            arr = self.arrays[prop]
            for idx in sorted(updates):
                new = op.fold(arr[idx], updates[idx])
                if new != arr[idx]:
                    arr[idx] = new
                    self.frontier.add(idx)

    def _eval(self, e, env):
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.VarRef):
            return env[e.name]
        if isinstance(e, A.PropRead):
            return self.arrays[e.prop][self._eval(e.vertex, env)]
        if isinstance(e, A.BinOp):
            a = self._eval(e.left, env)
            b = self._eval(e.right, env)
            table = {
                "+": sat_add,
                "-": sat_sub,
                "*": sat_mul,
                "<": lambda x, y: 1 if x < y else 0,
                ">": lambda x, y: 1 if x > y else 0,
                "<=": lambda x, y: 1 if x <= y else 0,
                ">=": lambda x, y: 1 if x >= y else 0,
                "==": lambda x, y: 1 if x == y else 0,
                "!=": lambda x, y: 1 if x != y else 0,
            }
            return clamp(table[e.op](a, b))
        if isinstance(e, A.NotExpr):
            return 1 if self._eval(e.operand, env) == 0 else 0
        if isinstance(e, A.EdgeWeight):
            _v, j = self._eval(e.edge, env)
            return self.g.weights[j]
        if isinstance(e, A.GetEdge):
            v = self._eval(e.v, env)
            nbr = self._eval(e.nbr, env)
            for j in range(self.g.offsets[v], self.g.offsets[v + 1]):
                if self.g.targets[j] == nbr:
                    return (v, j)
            raise ExecError(f"no edge {v} -> {nbr}")
        if isinstance(e, A.GetEdgeI):
            v = self._eval(e.v, env)
            i = self._eval(e.index, env)
            start = self.g.offsets[v]
            if not 0 <= i < self.g.offsets[v + 1] - start:
                raise ExecError(f"edge index {i} out of range for vertex {v}")
            return (v, start + i)
        if isinstance(e, A.GetEdgeOther):
            _v, j = self._eval(e.edge, env)
            return self.g.targets[j]
        if isinstance(e, A.FrontierNonEmpty):
            return 1 if self.frontier else 0
        raise LowerError(f"reference semantics does not cover expression {type(e).__name__}")


def execute_reference(
    program: A.Program, g: GlobalGraph, max_pulses: int | None = None
) -> dict[str, list[int]]:
    return _RefInterp(program, g, max_pulses).run()
