"""Independent result oracles: Dijkstra with saturating arithmetic, union-find
components, and direct degree counting.  These never share code with the
engine or the reference interpreter."""

from __future__ import annotations

import heapq

from graphpulse.graph import GlobalGraph
from graphpulse.ops import INF, sat_add


def dijkstra(g: GlobalGraph, source: int) -> list[int]:
    """Shortest distances with the same INF-absorbing addition the runtime uses."""
    dist = [INF] * g.n
    if not 0 <= source < g.n:
        return dist
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for j in range(g.offsets[u], g.offsets[u + 1]):
            v = g.targets[j]
            nd = sat_add(d, g.weights[j])
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra > rb:
                ra, rb = rb, ra
            self.parent[rb] = ra


def connected_components(g: GlobalGraph) -> tuple[int, list[int]]:
    """(component count, per-vertex label) treating edges as undirected;
    labels are the minimum vertex id of each component."""
    uf = UnionFind(g.n)
    for u, v, _w in g.edges():
        uf.union(u, v)
    labels = [uf.find(v) for v in range(g.n)]
    return len(set(labels)), labels


def in_degrees(g: GlobalGraph) -> list[int]:
    deg = [0] * g.n
    for t in g.targets:
        deg[t] += 1
    return deg
