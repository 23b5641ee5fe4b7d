"""Command-line interface: compile, run, verify, bench.

Exit codes: 0 success, 1 user error (parse/config/IO), 2 oracle mismatch,
3 non-termination (pulse limit hit).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from graphpulse import ast_nodes as A
from graphpulse.config import RunConfig, load_config
from graphpulse.corpus import resolve_program
from graphpulse.engine import ExecError, LowerError, execute, execute_reference, lower
from graphpulse.graph import GraphFormatError, partition_block
from graphpulse.graphio import parse_graph_spec
from graphpulse.ops import INF
from graphpulse.oracles import connected_components, dijkstra, in_degrees
from graphpulse.parser import DslError, parse
from graphpulse.passes import PASS_ORDER, run_passes, run_passes_with_diffs
from graphpulse.runtime import NonTerminationError, WorldError

EXIT_OK = 0
EXIT_USER = 1
EXIT_MISMATCH = 2
EXIT_NONTERMINATION = 3

DEFAULT_SUITE = {
    "programs": ["sssp", "cc", "degree_count"],
    "graphs": ["path:64", "tri2", "ur:10000:80000:1", "rmat:14:8:7"],
    "world_sizes": [1, 2, 4, 8],
    "pass_sets": ["none", "all"],
}


def _parse_passes(text: str) -> tuple[str, ...]:
    if text is None:
        return ()
    text = text.strip()
    if not text or text == "none":
        return ()
    if text == "all":
        return PASS_ORDER
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _build_config(args, world_size=None) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    overrides = {}
    if world_size is not None:
        overrides["world_size"] = world_size
    elif getattr(args, "np", None):
        overrides["world_size"] = args.np
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "passes", None) is not None:
        overrides["passes"] = _parse_passes(args.passes)
    if getattr(args, "sync_mode", None):
        overrides["sync_mode"] = args.sync_mode
    if getattr(args, "no_short_circuit", False):
        overrides["short_circuit"] = False
    if overrides:
        import dataclasses

        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _load_program(name_or_path: str):
    source, filename = resolve_program(name_or_path)
    return parse(source, filename), filename


def format_results(results: dict[str, list[int]]) -> str:
    lines = []
    for prop, values in results.items():
        lines.append(f"# property {prop}")
        for v, val in enumerate(values):
            lines.append(f"{v} {'INF' if val == INF else val}")
    return "\n".join(lines) + "\n"


def parse_results(text: str) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    current = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# property "):
            current = line[len("# property ") :].strip()
            out[current] = []
            continue
        if current is None:
            raise ValueError("result file must start with a '# property <name>' header")
        _v, val = line.split()
        out[current].append(INF if val == "INF" else int(val))
    return out


def _run_one(program_ast, graph, cfg: RunConfig, filename: str):
    """Apply configured passes, lower, execute; returns results, metrics,
    pass reports, and the world."""
    prog, facts, reports = run_passes(program_ast, cfg.passes)
    plan = lower(prog, facts=facts, config=cfg, filename=filename)
    pgraph = partition_block(graph, cfg.world_size)
    t0 = time.perf_counter()
    results, metrics, world = execute(plan, pgraph, cfg)
    wall = time.perf_counter() - t0
    return results, metrics, reports, world, wall


def _source_vertex(program_ast) -> int:
    for s in program_ast.body:
        if isinstance(s, A.FixSource):
            return s.vertex
    return 0


def _oracle_verdict(program_name: str, program_ast, graph, results) -> tuple[bool, str]:
    """Compare engine output against the program's independent oracle.
    Returns (ok, message); the message names the first differing vertex."""
    base = program_name.rsplit("/", 1)[-1].removesuffix(".sp")
    if base == "sssp":
        expected = dijkstra(graph, _source_vertex(program_ast))
        got = results.get("dist", [])
        return _compare_arrays("dist", got, expected)
    if base == "cc":
        count, labels = connected_components(graph)
        got = results.get("comp", [])
        got_count = len(set(got))
        if got_count != count:
            return False, f"component count {got_count} != union-find {count}"
        return _compare_arrays("comp", got, labels)
    if base == "degree_count":
        expected = in_degrees(graph)
        return _compare_arrays("deg", results.get("deg", []), expected)
    # fallback: the sequential reference interpreter is the oracle
    expected = execute_reference(program_ast, graph)
    for prop, arr in expected.items():
        ok, msg = _compare_arrays(prop, results.get(prop, []), arr)
        if not ok:
            return ok, msg
    return True, "matches sequential reference"


def _compare_arrays(prop: str, got: list[int], expected: list[int]) -> tuple[bool, str]:
    if len(got) != len(expected):
        return False, f"{prop}: length {len(got)} != {len(expected)}"
    for v, (a, b) in enumerate(zip(got, expected)):
        if a != b:
            return False, f"{prop}: first mismatch at vertex {v}: got {a}, expected {b}"
    return True, f"{prop}: exact match on {len(got)} vertices"


# --- subcommands ---


def cmd_compile(args) -> int:
    try:
        ast, filename = _load_program(args.file)
    except DslError as err:
        print(str(err), file=sys.stderr)
        return EXIT_USER
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    passes = _parse_passes(args.passes)
    try:
        prog, facts, reports, diffs = run_passes_with_diffs(ast, passes)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    if args.emit_diff:
        for name, before, after in diffs:
            print(f"== pass {name} ==")
            print("--- before")
            print(before, end="")
            print("--- after")
            print(after, end="")
        if not diffs:
            print("== no pass fired ==")
    if args.emit_report:
        print(json.dumps([r.to_dict() for r in reports], indent=2))
    try:
        plan = lower(prog, facts=facts, config=RunConfig(passes=passes), filename=filename)
    except LowerError as err:
        print(str(err), file=sys.stderr)
        return EXIT_USER
    if args.emit_plan:
        print(plan.dump(), end="")
    if not args.emit_diff and not args.emit_plan and not args.emit_report:
        print(f"{filename}: ok ({len(prog.body)} top-level statements)")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        ast, filename = _load_program(args.program)
        graph = parse_graph_spec(args.graph, seed=args.seed or 0, undirected=args.undirected)
    except (DslError, GraphFormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    cfg = _build_config(args)
    try:
        results, metrics, reports, world, wall = _run_one(ast, graph, cfg, filename)
    except NonTerminationError as err:
        print(f"non-termination: {err}", file=sys.stderr)
        return EXIT_NONTERMINATION
    except (LowerError, ExecError, WorldError) as err:
        print(str(err), file=sys.stderr)
        return EXIT_USER
    text = format_results(results)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    payload = {
        "program": args.program,
        "graph": args.graph,
        "config": {
            "world_size": cfg.world_size,
            "passes": list(cfg.passes),
            "seed": cfg.seed,
            "short_circuit": cfg.short_circuit,
            "sync_mode": cfg.sync_mode,
            "buffersz_bytes": cfg.buffersz_bytes,
        },
        "pass_reports": [r.to_dict() for r in reports],
        "metrics": metrics.to_dict(),
        "wall_time_s": wall,
        "timestamp": time.time(),
    }
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        ast, filename = _load_program(args.program)
        base = args.program.rsplit("/", 1)[-1].removesuffix(".sp")
        undirected = args.undirected or base == "cc"
        graph = parse_graph_spec(args.graph, seed=args.seed or 0, undirected=undirected)
    except (DslError, GraphFormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    cfg = _build_config(args)
    try:
        results, metrics, reports, world, wall = _run_one(ast, graph, cfg, filename)
    except NonTerminationError as err:
        print(f"non-termination: {err}", file=sys.stderr)
        return EXIT_NONTERMINATION
    except (LowerError, ExecError, WorldError) as err:
        print(str(err), file=sys.stderr)
        return EXIT_USER
    if args.expected:
        with open(args.expected, "r", encoding="utf-8") as fh:
            expected = parse_results(fh.read())
        for prop, arr in expected.items():
            ok, msg = _compare_arrays(prop, results.get(prop, []), arr)
            if not ok:
                print(f"FAIL {msg}")
                return EXIT_MISMATCH
        print("PASS matches expected output")
        return EXIT_OK
    ok, msg = _oracle_verdict(args.program, ast, graph, results)
    print(("PASS " if ok else "FAIL ") + msg)
    return EXIT_OK if ok else EXIT_MISMATCH


def _load_suite(path: str | None) -> dict:
    suite = {k: list(v) for k, v in DEFAULT_SUITE.items()}
    if not path:
        return suite
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            items = [x.strip() for x in value.split(",") if x.strip()]
            if key == "world_sizes":
                suite[key] = [int(x) for x in items]
            elif key in suite:
                suite[key] = items
            else:
                raise ValueError(f"{path}:{lineno}: unknown suite key {key!r}")
    return suite


def _pass_set(token: str) -> tuple[str, ...]:
    if token == "none":
        return ()
    if token == "all":
        return PASS_ORDER
    return tuple(p for p in token.split("+") if p)


def cmd_bench(args) -> int:
    import dataclasses

    try:
        suite = _load_suite(args.suite)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    base_cfg = _build_config(args)
    rows = []
    any_fail = False
    for prog_name in suite["programs"]:
        ast, filename = _load_program(prog_name)
        base = prog_name.rsplit("/", 1)[-1].removesuffix(".sp")
        for graph_spec in suite["graphs"]:
            graph = parse_graph_spec(graph_spec, seed=base_cfg.seed, undirected=base == "cc")
            for R in suite["world_sizes"]:
                for pass_token in suite["pass_sets"]:
                    passes = _pass_set(pass_token)
                    if R > graph.n:
                        rows.append(
                            {
                                "program": prog_name,
                                "graph": graph_spec,
                                "world_size": R,
                                "passes": pass_token,
                                "skipped": f"world size {R} exceeds vertex count {graph.n}",
                            }
                        )
                        continue
                    cfg = dataclasses.replace(base_cfg, world_size=R, passes=passes)
                    results, metrics, reports, world, wall = _run_one(ast, graph, cfg, filename)
                    ok, msg = _oracle_verdict(prog_name, ast, graph, results)
                    any_fail = any_fail or not ok
                    m = metrics.to_dict()
                    m.pop("per_pulse", None)
                    rows.append(
                        {
                            "program": prog_name,
                            "graph": graph_spec,
                            "world_size": R,
                            "passes": pass_token,
                            "verdict": "PASS" if ok else "FAIL",
                            "oracle": msg,
                            "metrics": m,
                            "pass_reports": [r.to_dict() for r in reports],
                            "wall_time_s": wall,
                        }
                    )
    report = {
        "suite": suite,
        "rows": rows,
        "ratios": _bench_ratios(rows),
        "generated_at": time.time(),
    }
    out_json = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out_json + "\n")
    if args.format == "json" and not args.out:
        print(out_json)
    md = _bench_markdown(rows, report["ratios"])
    if args.md:
        with open(args.md, "w", encoding="utf-8") as fh:
            fh.write(md)
    if args.format == "md":
        print(md, end="")
    return EXIT_MISMATCH if any_fail else EXIT_OK


_RATIO_COUNTERS = ("remote_gets", "local_gets", "edge_search_steps", "sync_rounds",
                   "messages_sent", "bytes_window_traffic", "queued_updates")


def _bench_ratios(rows) -> list[dict]:
    """For row groups sharing (program, graph, R): counter ratios none/other."""
    by_key: dict[tuple, dict[str, dict]] = {}
    for row in rows:
        if "metrics" not in row:
            continue
        key = (row["program"], row["graph"], row["world_size"])
        by_key.setdefault(key, {})[row["passes"]] = row["metrics"]
    out = []
    for key, variants in sorted(by_key.items()):
        if "none" not in variants:
            continue
        base = variants["none"]
        for token, metrics in sorted(variants.items()):
            if token == "none":
                continue
            ratios = {}
            for counter in _RATIO_COUNTERS:
                b, o = base.get(counter, 0), metrics.get(counter, 0)
                ratios[counter] = round(b / o, 4) if o else (None if not b else float("inf"))
            out.append(
                {
                    "program": key[0],
                    "graph": key[1],
                    "world_size": key[2],
                    "passes": token,
                    "reduction_factor": ratios,
                }
            )
    return out


def _bench_markdown(rows, ratios) -> str:
    lines = [
        "| program | graph | R | passes | verdict | remote_gets | local_gets | search_steps | syncs | messages | bytes | wall_s |",
        "|---|---|---|---|---|---|---|---|---|---|---|---|",
    ]
    for row in rows:
        if "skipped" in row:
            lines.append(
                f"| {row['program']} | {row['graph']} | {row['world_size']} | {row['passes']} "
                f"| SKIP ({row['skipped']}) | | | | | | | |"
            )
            continue
        m = row["metrics"]
        lines.append(
            "| {program} | {graph} | {world_size} | {passes} | {verdict} "
            "| {rg} | {lg} | {es} | {sr} | {ms} | {bw} | {wall:.3f} |".format(
                rg=m["remote_gets"],
                lg=m["local_gets"],
                es=m["edge_search_steps"],
                sr=m["sync_rounds"],
                ms=m["messages_sent"],
                bw=m["bytes_window_traffic"],
                wall=row["wall_time_s"],
                **row,
            )
        )
    lines.append("")
    if ratios:
        lines.append("| program | graph | R | passes | remote_gets x | search_steps x | syncs x |")
        lines.append("|---|---|---|---|---|---|---|")
        for r in ratios:
            f = r["reduction_factor"]
            lines.append(
                f"| {r['program']} | {r['graph']} | {r['world_size']} | {r['passes']} "
                f"| {f['remote_gets']} | {f['edge_search_steps']} | {f['sync_rounds']} |"
            )
        lines.append("")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphpulse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_np=True):
        if with_np:
            p.add_argument("--np", type=int, default=None, help="world size (simulated ranks)")
        p.add_argument("--seed", type=int, default=None, help="seed for generators and weights")
        p.add_argument("--config", help="key=value run configuration file")
        p.add_argument("--passes", default=None, help="comma list from: " + ",".join(PASS_ORDER) + ", or all/none")

    c = sub.add_parser("compile", help="parse, analyze, optimize, and lower a program")
    c.add_argument("file")
    add_common(c, with_np=False)
    c.add_argument("--emit-diff", action="store_true", help="print per-pass before/after source")
    c.add_argument("--emit-plan", action="store_true", help="print the lowered plan tree")
    c.add_argument("--emit-report", action="store_true", help="print pass reports as JSON")
    c.set_defaults(fn=cmd_compile)

    r = sub.add_parser("run", help="execute a program on a graph")
    r.add_argument("program", help="corpus name or .sp path")
    r.add_argument("graph", help="file path or generator spec (ur:N:M:SEED, rmat:S:EF:SEED, path:N, tri2)")
    add_common(r)
    r.add_argument("--undirected", action="store_true", help="symmetrize the graph at load")
    r.add_argument("--sync-mode", choices=["bulk", "legacy"], default=None)
    r.add_argument("--no-short-circuit", action="store_true")
    r.add_argument("--out", help="write final properties here (vertex value per line)")
    r.add_argument("--metrics", help="write metrics JSON here")
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="run and compare against the oracle")
    v.add_argument("program")
    v.add_argument("graph")
    add_common(v)
    v.add_argument("--undirected", action="store_true")
    v.add_argument("--sync-mode", choices=["bulk", "legacy"], default=None)
    v.add_argument("--no-short-circuit", action="store_true")
    v.add_argument("--expected", help="result file with expected output")
    v.set_defaults(fn=cmd_verify)

    b = sub.add_parser("bench", help="run the benchmark suite and emit a report")
    add_common(b, with_np=False)
    b.add_argument("--suite", help="suite file (programs/graphs/world_sizes/pass_sets)")
    b.add_argument("--out", help="write the JSON report here")
    b.add_argument("--md", help="write the markdown table here")
    b.add_argument("--format", choices=["json", "md"], default="md")
    b.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
