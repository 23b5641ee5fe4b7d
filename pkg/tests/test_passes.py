from graphpulse import ast_nodes as A
from graphpulse.config import RunConfig
from graphpulse.engine import execute_reference, run_program
from graphpulse.graph import from_edge_tuples
from graphpulse.graphio import gen_path, gen_uniform
from graphpulse.parser import parse
from graphpulse.passes import PASS_ORDER, run_passes, run_passes_with_diffs
from graphpulse.printer import pretty_print

from conftest import load_ast, normalize_fresh_names


# --- reorder ---

def test_reorder_rewrites_edge_scan_structure():
    prog, _, reports = run_passes(load_ast("edge_scan"), ["reorder"])
    assert reports[0].fired and reports[0].sites == 1
    nodes_loop = prog.body[0]
    counter_decl, nbr_loop = nodes_loop.body
    assert isinstance(counter_decl, A.LocalDecl) and counter_decl.init == A.IntLit(0)
    edge, rebind, incr = nbr_loop.body
    assert isinstance(edge.call, A.GetEdgeI)
    assert isinstance(rebind.value, A.GetEdgeOther)
    assert isinstance(incr, A.IncrStmt) and incr.name == counter_decl.name


def test_reorder_skips_body_without_get_edge():
    prog, _, reports = run_passes(load_ast("color_max"), ["reorder"])
    assert not reports[0].fired
    assert reports[0].sites == 0
    assert prog == load_ast("color_max")


def test_reorder_skips_order_dependent_body():
    src = """
forall v in g.nodes() {
  local int acc = 0;
  forall nbr in g.neighbors(v) {
    Edge e = g.get_edge(v, nbr);
    acc = acc + e.weight;
  }
}
"""
    prog, _, reports = run_passes(parse(src), ["reorder"])
    assert not reports[0].fired
    assert "depend" in reports[0].reason


def test_reorder_preserves_visit_multiset():
    """The rewritten traversal touches the same (v, nbr, weight) triples."""
    g = gen_uniform(100, 700, seed=21)
    ast = load_ast("edge_scan")
    traces = []
    for passes in ((), ("reorder",)):
        prog, facts, _ = run_passes(ast, passes)
        _, metrics, _ = run_program(
            prog, g, RunConfig(world_size=4, trace=True), facts=facts
        )
        traces.append(sorted(metrics.trace))
    assert traces[0] == traces[1]
    assert len(traces[0]) == g.m


def test_reorder_applies_inside_sssp():
    prog, _, reports = run_passes(load_ast("sssp"), ["reorder"])
    assert reports[0].fired and reports[0].sites == 1
    text = pretty_print(prog)
    assert "g.get_edge_i(v," in text
    assert "g.get_edge_other(v, e)" in text


# --- pulses ---

def test_pulses_rewrites_min_prop_structure():
    prog, _, reports = run_passes(load_ast("min_prop"), ["pulses"])
    assert reports[0].fired and reports[0].sites == 1
    fin_decl = prog.body[2]
    outer = prog.body[3]
    assert isinstance(fin_decl, A.LocalDecl)
    assert isinstance(outer, A.WhileStmt) and isinstance(outer.cond, A.NotExpr)
    inner, sync, check, combine = outer.body
    assert isinstance(inner, A.WhileStmt) and inner.local_drain
    assert isinstance(sync, A.SyncReduction) and sync.props == ("x",)
    assert isinstance(check, A.IfStmt)
    assert isinstance(combine, A.AllFinishedStmt) and combine.var == fin_decl.name


def test_pulses_skips_non_exclusive_while():
    src = """
propNodes<int> x = 0;
propNodes<int> y = 0;
while (g.reduction_frontier()) {
  forall v in g.reduction_frontier() {
    <v.x> = <Min(v.x, 1)>;
    <v.y> = <Min(v.y, 1)>;
  }
}
"""
    ast = parse(src)
    prog, _, reports = run_passes(ast, ["pulses"])
    assert not reports[0].fired
    assert "not reduction-exclusive" in reports[0].reason
    assert prog == ast


def test_pulses_reduces_sync_rounds_on_path():
    g = gen_path(64)
    ast = load_ast("sssp")
    base, fb, _ = run_passes(ast, ())
    agg, fa, _ = run_passes(ast, ("pulses",))
    r0, m0, _ = run_program(base, g, RunConfig(world_size=4), facts=fb)
    r1, m1, _ = run_program(agg, g, RunConfig(world_size=4), facts=fa)
    assert r0["dist"] == r1["dist"]
    assert m1.sync_rounds <= m0.sync_rounds
    assert m1.sync_rounds <= 8  # one pulse per rank segment plus termination


# --- bypass ---

def test_bypass_rewrites_min_prop_structure():
    prog, _, reports = run_passes(load_ast("min_prop"), ["bypass"])
    assert reports[0].fired and reports[0].sites == 1
    guard = prog.body[2].body[0].body[0].body[0]
    assert isinstance(guard, A.IfStmt)
    assert isinstance(guard.cond, A.IsLocal)
    cur, cand, cmp_store = guard.then
    assert isinstance(cur.init, A.LocalPropRead)
    assert isinstance(cmp_store, A.IfStmt)
    assert isinstance(cmp_store.then[0], A.LocalPropWrite)
    (queue_red,) = guard.orelse
    assert isinstance(queue_red, A.ReductionStmt)
    # the queued form dropped the self operand and localized the frontier read
    assert len(queue_red.red.args) == 1
    assert isinstance(queue_red.red.args[0], A.LocalPropRead)


def test_bypass_r1_world_has_zero_remote_gets(ur100):
    ast = load_ast("sssp")
    prog, facts, _ = run_passes(ast, ("bypass",))
    _, metrics, _ = run_program(prog, ur100, RunConfig(world_size=1), facts=facts)
    assert metrics.remote_gets == 0


def test_bypass_strictly_reduces_remote_gets_at_r4(ur100):
    ast = load_ast("sssp")
    base, fb, _ = run_passes(ast, ())
    opt, fo, _ = run_passes(ast, ("bypass",))
    r0, m0, _ = run_program(base, ur100, RunConfig(world_size=4), facts=fb)
    r1, m1, _ = run_program(opt, ur100, RunConfig(world_size=4), facts=fo)
    assert r0 == r1
    assert m0.remote_gets > 0
    assert m1.remote_gets < m0.remote_gets
    assert m1.bypassed_gets > 0


def test_bypass_only_drops_reads_for_sum_sweeps():
    prog, _, reports = run_passes(load_ast("accumulate"), ["bypass"])
    assert reports[0].fired
    red = prog.body[2].body[0].body[1]
    assert isinstance(red, A.ReductionStmt)
    # self operand gone, remote-capable read kept, no ownership split
    assert len(red.red.args) == 1
    assert isinstance(red.red.args[0], A.PropRead)


def test_bypass_skips_when_nothing_is_exclusive():
    prog, _, reports = run_passes(load_ast("edge_scan"), ["bypass"])
    assert not reports[0].fired
    assert "no reduction-exclusive" in reports[0].reason


# --- cache ---

def test_cache_rewrites_accumulate_structure():
    prog, _, reports = run_passes(load_ast("accumulate"), ["cache"])
    assert reports[0].fired and reports[0].sites == 1
    decl = prog.body[2]
    assert isinstance(decl, A.CacheDecl)
    loop = prog.body[3]
    fill, red = loop.body[0].body[1:]
    assert isinstance(fill, A.IfStmt) and isinstance(fill.cond, A.NotExpr)
    assert isinstance(fill.then[0], A.CacheStore)
    assert isinstance(red.red.args[0], A.CacheRead)
    clear = prog.body[4]
    assert isinstance(clear, A.CacheClear) and clear.cache == decl.name


def _pulse_reads(metrics, prop):
    return [
        (rec["remote_reads"].get(prop, 0), rec["distinct_remote"].get(prop, 0))
        for rec in metrics.per_pulse
    ]


def test_cache_memo_hit_single_remote_get():
    """Two edges to the same remote vertex: one remote get of the cached
    property with the memo (the uncached target's own reads are unaffected)."""
    g = from_edge_tuples(4, [(0, 3, 1), (0, 3, 1), (1, 3, 1)])
    ast = load_ast("accumulate")
    base, fb, _ = run_passes(ast, ())
    cached, fc, _ = run_passes(ast, ("cache",))
    r0, m0, _ = run_program(base, g, RunConfig(world_size=2), facts=fb)
    r1, m1, _ = run_program(cached, g, RunConfig(world_size=2), facts=fc)
    assert r0 == r1
    # rank 0 owns {0,1}; wt[3] is read once per edge without the memo
    assert _pulse_reads(m0, "wt") == [(3, 1)]
    assert _pulse_reads(m1, "wt") == [(1, 1)]
    assert m1.remote_gets < m0.remote_gets


def test_cache_remote_gets_bounded_by_distinct_vertices():
    """For the cached property, per-pulse remote gets never exceed the number
    of distinct remote vertices touched that pulse."""
    g = gen_uniform(120, 800, seed=33)
    ast = load_ast("accumulate")
    cached, fc, _ = run_passes(ast, ("cache",))
    _, metrics, _ = run_program(cached, g, RunConfig(world_size=4), facts=fc)
    checked = 0
    for reads, distinct in _pulse_reads(metrics, "wt"):
        assert reads <= distinct
        checked += 1
    assert checked > 0


def test_cache_pass_skips_sssp():
    """The read property is the updated target, never cache-safe."""
    prog, _, reports = run_passes(load_ast("sssp"), ["cache"])
    assert not reports[0].fired


def test_cache_clears_between_pulses():
    src = """
propNodes<int> wt = 1;
propNodes<int> acc = 0;
while (g.reduction_frontier()) {
  forall v in g.reduction_frontier() {
    forall nbr in g.neighbors(v) {
      <nbr.acc> = <Sum(nbr.wt, nbr.acc)>;
    }
  }
}
"""
    ast = parse(src)
    g = from_edge_tuples(4, [(0, 3, 1), (1, 3, 1), (2, 3, 1)])
    prog, facts, reports = run_passes(ast, ("cache",))
    assert reports[0].fired
    ref = execute_reference(ast, g)
    res, metrics, world = run_program(prog, g, RunConfig(world_size=2), facts=facts)
    assert res == ref
    assert all(not memo for rank_memos in world.memos for memo in rank_memos.values())


# --- cross-cutting ---

def test_all_passes_compose_and_match_reference(ur100):
    for name in ("sssp", "color_max", "min_prop", "accumulate", "degree_count"):
        ast = load_ast(name)
        ref = execute_reference(ast, ur100)
        prog, facts, _ = run_passes(ast, PASS_ORDER)
        for R in (1, 4):
            res, _, _ = run_program(prog, ur100, RunConfig(world_size=R), facts=facts)
            assert res == ref, (name, R)


def test_each_pass_idempotent():
    for name in ("sssp", "cc", "degree_count", "color_max", "edge_scan", "min_prop", "accumulate"):
        ast = load_ast(name)
        for p in PASS_ORDER:
            once, _, _ = run_passes(ast, [p])
            twice, _, reports = run_passes(once, [p])
            assert not reports[0].fired, (name, p)
            assert pretty_print(twice) == pretty_print(once)


def test_full_pipeline_idempotent():
    for name in ("sssp", "accumulate"):
        once, _, _ = run_passes(load_ast(name), PASS_ORDER)
        twice, _, reports = run_passes(once, PASS_ORDER)
        assert all(not r.fired for r in reports), (name, reports)


def test_monotone_counter_improvement(ur100):
    """All passes together never increase remote gets, sync rounds, or search steps."""
    for name in ("sssp", "degree_count", "accumulate"):
        ast = load_ast(name)
        base, fb, _ = run_passes(ast, ())
        opt, fo, _ = run_passes(ast, PASS_ORDER)
        for R in (2, 4):
            r0, m0, _ = run_program(base, ur100, RunConfig(world_size=R), facts=fb)
            r1, m1, _ = run_program(opt, ur100, RunConfig(world_size=R), facts=fo)
            assert r0 == r1
            assert m1.remote_gets <= m0.remote_gets, name
            assert m1.sync_rounds <= m0.sync_rounds, name
            assert m1.edge_search_steps <= m0.edge_search_steps, name


def test_pass_report_serialization():
    _, _, reports = run_passes(load_ast("sssp"), PASS_ORDER)
    payload = [r.to_dict() for r in reports]
    assert [p["pass"] for p in payload] == list(PASS_ORDER)
    assert all(set(p) == {"pass", "label", "fired", "sites", "reason"} for p in payload)


def test_golden_diffs_match_checked_in_files():
    for name, pname in [
        ("edge_scan", "reorder"),
        ("min_prop", "pulses"),
        ("min_prop", "bypass"),
        ("accumulate", "cache"),
    ]:
        ast = load_ast(name)
        _, _, _, diffs = run_passes_with_diffs(ast, [pname])
        assert len(diffs) == 1
        with open(f"tests/golden/{name}.{pname}.after.txt", encoding="utf-8") as fh:
            golden = fh.read()
        assert normalize_fresh_names(diffs[0][2]) == normalize_fresh_names(golden)
