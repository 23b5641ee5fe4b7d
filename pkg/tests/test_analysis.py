"""Exclusivity and cache-safety flags, checked against an independent
re-walker that never shares code with the analyzer."""

from graphpulse import ast_nodes as A
from graphpulse.analysis import analyze, stmt_own_reads, stmt_own_writes
from graphpulse.parser import parse

from conftest import load_ast


def independent_exclusive_check(stmt) -> bool:
    """Re-derive the flag from scratch: exactly one reduction in the subtree
    and its touched property set untouched elsewhere."""
    nodes = list(A.walk_statements([stmt]))
    reductions = [s for s in nodes if isinstance(s, A.ReductionStmt)]
    if len(reductions) != 1:
        return False
    red = reductions[0]
    touched = stmt_own_reads(red) | {red.target_prop}
    for node in nodes:
        if node is red:
            continue
        if stmt_own_reads(node) & touched or stmt_own_writes(node) & touched:
            return False
    return True


def test_color_max_both_loops_flagged():
    ast = load_ast("color_max")
    facts = analyze(ast)
    outer = ast.body[1]
    inner = outer.body[0]
    assert facts.is_exclusive(outer)
    assert facts.is_exclusive(inner)


def test_read_outside_reduction_unflags():
    src = """
propNodes<int> x = 0;
forall v in g.nodes() {
  forall nbr in g.neighbors(v) {
    <nbr.x> = <Min(nbr.x, v.x)>;
    local int y = v.x;
  }
}
"""
    ast = parse(src)
    facts = analyze(ast)
    assert not facts.is_exclusive(ast.body[1])
    assert not facts.is_exclusive(ast.body[1].body[0])


def test_two_reductions_unflag():
    src = """
propNodes<int> a = 0;
propNodes<int> b = 0;
forall v in g.nodes() {
  forall nbr in g.neighbors(v) {
    <nbr.a> = <Sum(1, nbr.a)>;
    <nbr.b> = <Sum(1, nbr.b)>;
  }
}
"""
    ast = parse(src)
    facts = analyze(ast)
    assert not facts.is_exclusive(ast.body[2])
    # each reduction alone still qualifies
    inner = ast.body[2].body[0]
    assert facts.is_exclusive(inner.body[0])
    assert facts.is_exclusive(inner.body[1])


def test_unrelated_property_access_keeps_flag():
    src = """
propNodes<int> x = 0;
propNodes<int> other = 0;
forall v in g.nodes() {
  forall nbr in g.neighbors(v) {
    local int y = v.other;
    <nbr.x> = <Min(nbr.x, y)>;
  }
}
"""
    ast = parse(src)
    facts = analyze(ast)
    assert facts.is_exclusive(ast.body[2])


def test_extension_closure_on_corpus():
    """Every statement on the path from a flagged statement down to its
    reduction is itself flagged."""
    for name in ("color_max", "min_prop", "accumulate", "sssp", "cc", "degree_count"):
        ast = load_ast(name)
        facts = analyze(ast)

        def walk(stmt, under_flag):
            flagged = facts.is_exclusive(stmt)
            if under_flag and any(
                isinstance(s, A.ReductionStmt) for s in A.walk_statements([stmt])
            ):
                assert flagged, (name, type(stmt).__name__)
            for block in A.child_blocks(stmt):
                for child in block:
                    walk(child, under_flag or flagged)

        for top in ast.body:
            walk(top, False)


def test_flag_soundness_independent_rewalk():
    for name in ("color_max", "edge_scan", "min_prop", "accumulate", "sssp", "cc", "degree_count"):
        ast = load_ast(name)
        facts = analyze(ast)
        for stmt in A.walk_statements(ast.body):
            assert facts.is_exclusive(stmt) == independent_exclusive_check(stmt), name


def test_cache_safety_accumulate():
    ast = load_ast("accumulate")
    facts = analyze(ast)
    region = ast.body[2]  # the nodes loop
    safe = facts.cache_safe_props(region)
    assert "wt" in safe  # read, never updated
    assert "acc" not in safe  # the reduction target


def test_cache_safety_requires_reduction_context():
    src = """
propNodes<int> x = 0;
forall v in g.nodes() {
  local int y = v.x;
}
"""
    ast = parse(src)
    facts = analyze(ast)
    for stmt in A.walk_statements(ast.body):
        assert not facts.cache_safe_props(stmt)


def test_cache_safety_excludes_updated_property_in_sssp():
    ast = load_ast("sssp")
    facts = analyze(ast)
    for stmt in A.walk_statements(ast.body):
        assert "dist" not in facts.cache_safe_props(stmt)


def test_frontier_context_marking():
    ast = load_ast("sssp")
    facts = analyze(ast)
    while_stmt = ast.body[2]
    red = while_stmt.body[0].body[0].body[1]
    assert isinstance(red, A.ReductionStmt)
    assert facts.in_frontier_context(red)
    sweep = load_ast("accumulate")
    sweep_facts = analyze(sweep)
    sweep_red = sweep.body[2].body[0].body[1]
    assert isinstance(sweep_red, A.ReductionStmt)
    assert not sweep_facts.in_frontier_context(sweep_red)
