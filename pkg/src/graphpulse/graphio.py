"""Graph ingestion, binary snapshots, and seeded generators.

Text format: optional header line "# n m", then one edge per line as
"u v [w]". Missing weights are drawn uniformly from [0, 100] with a
caller-supplied seed. Matrix-market coordinate files are accepted too
(1-based ids). The binary snapshot round-trips bit-exactly.

Generators produce simple graphs (no self-loops, no parallel edges) so that
the search-step identity sum(deg*(deg+1)/2) holds exactly; file loaders keep
self-loops and parallel edges as given.
"""

from __future__ import annotations

import random
import struct

from graphpulse.graph import GlobalGraph, GraphFormatError, from_edge_tuples

WEIGHT_RANGE = (0, 100)

SNAPSHOT_MAGIC = b"GPLS"
SNAPSHOT_VERSION = 1


class EdgeListParseError(GraphFormatError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def parse_edge_list(text: str, n: int | None = None, seed: int = 0, undirected: bool = False) -> GlobalGraph:
    """Parse "u v [w]" lines into a CSR, keeping per-vertex input order.

    A leading "# n m" header declares the vertex count; otherwise n comes from
    the argument or from max id + 1.
    """
    edges: list[tuple[int, int, int]] = []
    rng = random.Random(seed)
    declared_n = n
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if lineno == 1 or not edges:
                if len(parts) >= 2:
                    try:
                        declared_n = int(parts[0])
                        int(parts[1])
                    except ValueError:
                        pass  # plain comment
            continue
        if line.startswith("%"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListParseError(lineno, f"expected 'u v [w]', got {raw!r}")
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise EdgeListParseError(lineno, f"non-integer vertex id in {raw!r}") from None
        if u < 0 or v < 0:
            raise EdgeListParseError(lineno, "vertex ids must be nonnegative")
        if len(parts) == 3:
            try:
                w = int(parts[2])
            except ValueError:
                raise EdgeListParseError(lineno, f"non-integer weight in {raw!r}") from None
            if w < 0:
                raise EdgeListParseError(lineno, "weights must be nonnegative")
        else:
            w = rng.randint(*WEIGHT_RANGE)
        if declared_n is not None and (u >= declared_n or v >= declared_n):
            raise EdgeListParseError(lineno, f"vertex id >= declared n = {declared_n}")
        max_id = max(max_id, u, v)
        edges.append((u, v, w))
    final_n = declared_n if declared_n is not None else max_id + 1
    if final_n < 0:
        final_n = 0
    g = from_edge_tuples(final_n, edges)
    if undirected:
        from graphpulse.graph import symmetrize

        g = symmetrize(g)
    return g


def parse_matrix_market(text: str, seed: int = 0, undirected: bool = False) -> GlobalGraph:
    """Minimal coordinate-format reader; ids are 1-based, values become weights."""
    lines = text.splitlines()
    it = iter(enumerate(lines, start=1))
    dims = None
    edges: list[tuple[int, int, int]] = []
    rng = random.Random(seed)
    for lineno, raw in it:
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if dims is None:
            if len(parts) != 3:
                raise EdgeListParseError(lineno, "matrix-market size line must be 'rows cols nnz'")
            rows, cols, _nnz = (int(p) for p in parts)
            dims = max(rows, cols)
            continue
        if len(parts) not in (2, 3):
            raise EdgeListParseError(lineno, f"expected 'u v [value]', got {raw!r}")
        u = int(parts[0]) - 1
        v = int(parts[1]) - 1
        if u < 0 or v < 0:
            raise EdgeListParseError(lineno, "matrix-market ids are 1-based")
        w = int(float(parts[2])) if len(parts) == 3 else rng.randint(*WEIGHT_RANGE)
        if w < 0:
            raise EdgeListParseError(lineno, "weights must be nonnegative")
        edges.append((u, v, w))
    if dims is None:
        raise GraphFormatError("matrix-market input has no size line")
    g = from_edge_tuples(dims, edges)
    if undirected:
        from graphpulse.graph import symmetrize

        g = symmetrize(g)
    return g


def load_graph_file(path: str, seed: int = 0, undirected: bool = False) -> GlobalGraph:
    if path.endswith(".bin"):
        with open(path, "rb") as fh:
            return load_snapshot(fh.read())
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".mtx") or text.lstrip().startswith("%%MatrixMarket"):
        return parse_matrix_market(text, seed=seed, undirected=undirected)
    return parse_edge_list(text, seed=seed, undirected=undirected)


def save_snapshot(g: GlobalGraph) -> bytes:
    """Little-endian binary image: magic, version, n, m (u64), offsets (i64), targets/weights (i32)."""
    head = SNAPSHOT_MAGIC + struct.pack("<IQQ", SNAPSHOT_VERSION, g.n, g.m)
    body = [
        struct.pack(f"<{g.n + 1}q", *g.offsets),
        struct.pack(f"<{g.m}i", *g.targets),
        struct.pack(f"<{g.m}i", *g.weights),
    ]
    return head + b"".join(body)


def load_snapshot(blob: bytes) -> GlobalGraph:
    if blob[:4] != SNAPSHOT_MAGIC:
        raise GraphFormatError("bad snapshot magic")
    version, n, m = struct.unpack_from("<IQQ", blob, 4)
    if version != SNAPSHOT_VERSION:
        raise GraphFormatError(f"unsupported snapshot version {version}")
    pos = 4 + struct.calcsize("<IQQ")
    offsets = list(struct.unpack_from(f"<{n + 1}q", blob, pos))
    pos += 8 * (n + 1)
    targets = list(struct.unpack_from(f"<{m}i", blob, pos))
    pos += 4 * m
    weights = list(struct.unpack_from(f"<{m}i", blob, pos))
    g = GlobalGraph(n=n, m=m, offsets=offsets, targets=targets, weights=weights)
    g.validate()
    return g


def gen_uniform(n: int, m: int, seed: int) -> GlobalGraph:
    """G(n, m) with uniform endpoints; simple (no self-loops or duplicates)."""
    if m > n * (n - 1):
        raise GraphFormatError("too many edges for a simple directed graph")
    rng = random.Random(seed)
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int, int]] = []
    while len(edges) < m:
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u == v or (u, v) in seen:
            continue
        seen.add((u, v))
        edges.append((u, v, rng.randint(*WEIGHT_RANGE)))
    return from_edge_tuples(n, edges)


def gen_rmat(scale: int, edge_factor: int, seed: int,
             a: float = 0.57, b: float = 0.19, c: float = 0.19) -> GlobalGraph:
    """Recursive-quadrant power-law generator; n = 2^scale, m = edge_factor * n.

    Duplicate and self-loop draws are rejected and retried, so adjacency
    lists contain distinct targets.
    """
    n = 1 << scale
    m = edge_factor * n
    rng = random.Random(seed)
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int, int]] = []
    attempts = 0
    max_attempts = 100 * m + 1000
    while len(edges) < m:
        attempts += 1
        if attempts > max_attempts:
            raise GraphFormatError("rmat generator failed to place enough distinct edges")
        u = v = 0
        half = n >> 1
        while half:
            r = rng.random()
            if r < a:
                pass
            elif r < a + b:
                v += half
            elif r < a + b + c:
                u += half
            else:
                u += half
                v += half
            half >>= 1
        if u == v or (u, v) in seen:
            continue
        seen.add((u, v))
        edges.append((u, v, rng.randint(*WEIGHT_RANGE)))
    edges.sort(key=lambda e: (e[0],))
    return from_edge_tuples(n, edges)


def gen_path(n: int, weight: int = 1) -> GlobalGraph:
    """Directed path 0 -> 1 -> ... -> n-1 with constant weights."""
    return from_edge_tuples(n, [(i, i + 1, weight) for i in range(n - 1)])


def gen_two_triangles() -> GlobalGraph:
    """Two disjoint undirected triangles {0,1,2} and {3,4,5}."""
    tri = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]
    edges = [(u, v, 1) for u, v in tri] + [(v, u, 1) for u, v in tri]
    edges.sort(key=lambda e: (e[0],))
    return from_edge_tuples(6, edges)


def parse_graph_spec(spec: str, seed: int = 0, undirected: bool = False) -> GlobalGraph:
    """Resolve a CLI graph argument: generator spec, named toy graph, or file path.

    Specs: "ur:N:M:SEED", "rmat:SCALE:EF:SEED", "path:N[:W]", "tri2".
    """
    if spec == "tri2":
        return gen_two_triangles()
    if ":" in spec and not _looks_like_path(spec):
        kind, *args = spec.split(":")
        try:
            if kind == "ur":
                n, m, s = (int(x) for x in args)
                g = gen_uniform(n, m, s)
            elif kind == "rmat":
                sc, ef, s = (int(x) for x in args)
                g = gen_rmat(sc, ef, s)
            elif kind == "path":
                n = int(args[0])
                w = int(args[1]) if len(args) > 1 else 1
                g = gen_path(n, w)
            else:
                raise GraphFormatError(f"unknown generator kind {kind!r}")
        except (ValueError, IndexError):
            raise GraphFormatError(f"bad generator spec {spec!r}") from None
        if undirected:
            from graphpulse.graph import symmetrize

            g = symmetrize(g)
        return g
    return load_graph_file(spec, seed=seed, undirected=undirected)


def _looks_like_path(spec: str) -> bool:
    return "/" in spec or spec.endswith((".el", ".txt", ".mtx", ".bin"))
