"""Acceptance criteria, one test per criterion.

Each test prints a single verdict line (run with -s to see them on success):

    ACCEPTANCE <n> [PASS|FAIL] <summary>

All comparisons are exact integer equality; the only threshold is the
>= 50% get-reduction bar in criterion 6b, asserted together with strict
decrease.
"""

import functools
import itertools
import json
import random
import time

from graphpulse.cli import main as cli_main
from graphpulse.config import RunConfig
from graphpulse.engine import execute_reference, run_program
from graphpulse.graph import partition_block, symmetrize
from graphpulse.graphio import gen_path, gen_rmat, gen_two_triangles, gen_uniform
from graphpulse.ops import ReductionOp
from graphpulse.oracles import connected_components, dijkstra
from graphpulse.passes import PASS_ORDER, run_passes
from graphpulse.runtime import World

from conftest import load_ast, normalize_fresh_names


def verdict(number: int, ok: bool, summary: str) -> None:
    print(f"\nACCEPTANCE {number} [{'PASS' if ok else 'FAIL'}] {summary}")
    assert ok, f"criterion {number}: {summary}"


@functools.lru_cache(maxsize=None)
def graph_ladder():
    """50 seeded graphs, n <= 1000 and m <= 10000, weights in [0, 100]."""
    graphs = []
    for i in range(50):
        n = 20 * (i + 1)
        m = min(10_000, 5 * n)
        graphs.append(gen_uniform(n, m, seed=100 + i))
    return tuple(graphs)


@functools.lru_cache(maxsize=None)
def prepared(program: str, passes: tuple):
    ast = load_ast(program)
    prog, facts, _ = run_passes(ast, passes)
    return prog, facts


PASS_SETS = ((), ("reorder",), ("pulses",), ("bypass",), ("cache",), PASS_ORDER)
WORLD_SIZES = (1, 2, 4, 8)


def test_criterion_1_sssp_oracle_equivalence():
    t0 = time.time()
    runs = 0
    for g in graph_ladder():
        expected = dijkstra(g, 0)
        for passes in PASS_SETS:
            prog, facts = prepared("sssp", passes)
            for R in WORLD_SIZES:
                res, _, _ = run_program(prog, g, RunConfig(world_size=R), facts=facts)
                assert res["dist"] == expected, (g.n, passes, R)
                runs += 1
    elapsed = time.time() - t0
    verdict(
        1,
        elapsed < 300,
        f"SSSP == Dijkstra on 50 graphs x {len(PASS_SETS)} pass-sets x R{list(WORLD_SIZES)} "
        f"({runs} runs, {elapsed:.1f}s < 300s)",
    )


def test_criterion_2_cc_oracle_equivalence():
    runs = 0
    for g in graph_ladder():
        sg = symmetrize(g)
        count, labels = connected_components(sg)
        for passes in ((), PASS_ORDER):
            prog, facts = prepared("cc", passes)
            for R in WORLD_SIZES:
                res, _, _ = run_program(prog, sg, RunConfig(world_size=R), facts=facts)
                assert len(set(res["comp"])) == count, (g.n, passes, R)
                assert res["comp"] == labels, (g.n, passes, R)
                runs += 1
    verdict(2, True, f"CC component counts == union-find on the same 50-graph sweep ({runs} runs)")


def test_criterion_3_semantic_preservation():
    programs = ("sssp", "cc", "degree_count", "color_max", "edge_scan", "min_prop", "accumulate")
    graphs = {
        "path16": gen_path(16),
        "ur48": gen_uniform(48, 240, seed=77),
    }
    runs = 0
    for name in programs:
        ast = load_ast(name)
        for gname, g in graphs.items():
            gg = symmetrize(g) if name == "cc" else g
            ref = execute_reference(ast, gg)
            for k in range(len(PASS_ORDER) + 1):
                for subset in itertools.combinations(PASS_ORDER, k):
                    prog, facts, _ = run_passes(ast, subset)
                    for R in WORLD_SIZES:
                        res, _, _ = run_program(prog, gg, RunConfig(world_size=R), facts=facts)
                        assert res == ref, (name, gname, subset, R)
                        runs += 1
    verdict(3, True, f"optimized == reference for {len(programs)} programs x 16 pass subsets x R{list(WORLD_SIZES)} ({runs} runs)")


def test_criterion_4_reduction_substrate_permutation_invariance():
    n = 64
    R = 4
    g = gen_uniform(n, 4 * n, seed=5)
    pg = partition_block(g, R)
    rng = random.Random(99)
    updates = [(rng.randrange(n), rng.randrange(0, 10_000)) for _ in range(10_000)]
    checked = 0
    for op in (ReductionOp.MIN, ReductionOp.MAX, ReductionOp.SUM):
        expected = [op.identity] * n
        for idx, val in updates:
            expected[idx] = op.fold(expected[idx], val)
        baseline = None
        for perm in range(20):
            order = updates[:]
            random.Random(perm).shuffle(order)
            w = World(pg, RunConfig(world_size=R))
            w.declare_prop("x", op.identity)
            w.register_reduction("x", op)
            for k, (idx, val) in enumerate(order):
                w.add_to_red(k % R, "x", idx, val)
            w.bulk_synchronize("x")
            got = w.gather_prop("x")
            assert got == expected, (op, perm)
            if baseline is None:
                baseline = got
            assert got == baseline
            checked += 1
    verdict(4, True, f"10,000-update rounds: {checked} permutations x 3 ops match the sequential fold exactly")


def test_criterion_5_short_circuit_equivalence():
    suite = {
        "path64": gen_path(64),
        "tri2": gen_two_triangles(),
        "ur10k": gen_uniform(10_000, 80_000, seed=1),
        "rmat14": gen_rmat(14, 8, seed=7),
    }
    ast = load_ast("sssp")
    for gname, g in suite.items():
        R = min(4, g.n)
        for passes in ((), PASS_ORDER):
            prog, facts, _ = run_passes(ast, passes)
            on, _, _ = run_program(prog, g, RunConfig(world_size=R, short_circuit=True), facts=facts)
            off, _, _ = run_program(prog, g, RunConfig(world_size=R, short_circuit=False), facts=facts)
            assert on["dist"] == off["dist"], (gname, passes)
    verdict(5, True, "SSSP distances identical with short-circuiting on vs off on every suite graph")


@functools.lru_cache(maxsize=None)
def rmat14():
    return gen_rmat(14, 8, seed=7)


def test_criterion_6a_reorder_search_step_identity():
    g = rmat14()
    degs = [g.degree(v) for v in range(g.n)]
    expected_search = sum(d * (d + 1) // 2 for d in degs)
    expected_positional = sum(degs)
    base, fb = prepared("edge_scan", ())
    opt, fo = prepared("edge_scan", ("reorder",))
    _, m0, _ = run_program(base, g, RunConfig(world_size=4), facts=fb)
    _, m1, _ = run_program(opt, g, RunConfig(world_size=4), facts=fo)
    ok = m0.edge_search_steps == expected_search and m1.edge_search_steps == expected_positional
    verdict(
        6,
        ok,
        f"(a) reorder drops search steps {m0.edge_search_steps} -> {m1.edge_search_steps} "
        f"(exactly sum d(d+1)/2 -> sum d on rmat14)",
    )


def test_criterion_6b_bypass_get_reduction():
    g = rmat14()
    base, fb = prepared("sssp", ())
    opt, fo = prepared("sssp", ("bypass",))
    r0, m0, _ = run_program(base, g, RunConfig(world_size=4), facts=fb)
    r1, m1, _ = run_program(opt, g, RunConfig(world_size=4), facts=fo)
    gets0 = m0.remote_gets + m0.local_gets
    gets1 = m1.remote_gets + m1.local_gets
    ok = r0 == r1 and gets1 < gets0 and gets1 <= gets0 // 2
    verdict(
        6,
        ok,
        f"(b) get-bypass cuts remote+local gets {gets0} -> {gets1} "
        f"(strict decrease and >= 50% on rmat14, R=4)",
    )


def test_criterion_6c_bulk_vs_legacy_message_count():
    g = rmat14()
    prog, facts = prepared("sssp", ())
    R = 4
    _, mb, _ = run_program(prog, g, RunConfig(world_size=R, sync_mode="bulk"), facts=facts)
    _, ml, _ = run_program(prog, g, RunConfig(world_size=R, sync_mode="legacy"), facts=facts)
    ok = (
        mb.messages_sent == R * mb.sync_rounds
        and ml.messages_sent == R * (R - 1) * ml.sync_rounds
        and mb.sync_rounds == ml.sync_rounds
    )
    verdict(
        6,
        ok,
        f"(c) per-pulse messages: bulk R={R} vs legacy R(R-1)={R * (R - 1)} "
        f"over {mb.sync_rounds} pulses",
    )


def test_criterion_6d_cache_per_pulse_audit():
    g = rmat14()
    prog, facts = prepared("accumulate", ("cache",))
    _, metrics, _ = run_program(prog, g, RunConfig(world_size=4), facts=facts)
    audited = 0
    for rec in metrics.per_pulse:
        reads = rec["remote_reads"].get("wt", 0)
        distinct = rec["distinct_remote"].get("wt", 0)
        assert reads <= distinct, rec
        audited += 1
    verdict(6, audited > 0, f"(d) cached-property remote gets <= distinct remote vertices in all {audited} pulses")


def test_criterion_7_determinism(tmp_path, capsys):
    outputs = []
    for i in range(2):
        res = tmp_path / f"r{i}.txt"
        met = tmp_path / f"m{i}.json"
        code = cli_main(
            ["run", "sssp", "ur:2000:12000:4", "--np", "4", "--passes=all",
             "--out", str(res), "--metrics", str(met)]
        )
        assert code == 0
        payload = json.loads(met.read_text(encoding="utf-8"))
        payload.pop("timestamp")
        payload.pop("wall_time_s")
        outputs.append((res.read_bytes(), json.dumps(payload, sort_keys=True)))
    capsys.readouterr()
    ok = outputs[0] == outputs[1]
    verdict(7, ok, "identical config+seed gives byte-identical results and metrics (timestamps excluded)")


def test_criterion_8_termination_bound():
    suite = {
        "path64": gen_path(64),
        "tri2": gen_two_triangles(),
        "ur10k": gen_uniform(10_000, 80_000, seed=1),
        "rmat14": rmat14(),
    }
    worst = []
    for gname, g in suite.items():
        for name in ("sssp", "cc"):
            gg = symmetrize(g) if name == "cc" else g
            for passes in ((), PASS_ORDER):
                prog, facts = prepared(name, passes)
                R = min(4, gg.n)
                _, metrics, _ = run_program(prog, gg, RunConfig(world_size=R), facts=facts)
                assert metrics.sync_rounds <= gg.n, (gname, name, passes, metrics.sync_rounds)
                worst.append((metrics.sync_rounds, gg.n))
    peak = max(worst)
    verdict(8, True, f"SSSP and CC always finish within n pulses (worst {peak[0]} of n={peak[1]}); guard never fired")


def test_criterion_9_golden_diffs(capsys):
    cases = [
        ("edge_scan", "reorder"),
        ("min_prop", "pulses"),
        ("min_prop", "bypass"),
        ("accumulate", "cache"),
    ]
    for name, pname in cases:
        code = cli_main(["compile", name, f"--passes={pname}", "--emit-diff"])
        out = capsys.readouterr().out
        assert code == 0
        marker = "--- after\n"
        after = out[out.index(marker) + len(marker):]
        with open(f"tests/golden/{name}.{pname}.after.txt", encoding="utf-8") as fh:
            golden = fh.read()
        assert normalize_fresh_names(after) == normalize_fresh_names(golden), (name, pname)
    verdict(9, True, "emit-diff output structurally matches the four checked-in golden rewrites")
