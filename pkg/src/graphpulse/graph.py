"""Weighted directed CSR graphs and mirror-free block partitioning.

The partitioned form keeps no ghost or mirror vertices: each rank owns a
contiguous global-id range and holds the out-edge CSR slice for exactly those
vertices, with targets kept as global ids.  Reassembling the per-rank slices
in rank order reproduces the global CSR bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GraphFormatError(ValueError):
    """Malformed graph input (bad CSR shape, id out of bounds, parse failure)."""


class EdgeNotFound(LookupError):
    """get_edge found no edge between the requested endpoints."""


@dataclass
class GlobalGraph:
    n: int
    m: int
    offsets: list[int]
    targets: list[int]
    weights: list[int]

    def validate(self) -> None:
        if self.n < 0 or self.m < 0:
            raise GraphFormatError("negative vertex or edge count")
        if len(self.offsets) != self.n + 1:
            raise GraphFormatError(f"offsets length {len(self.offsets)} != n+1 = {self.n + 1}")
        if self.offsets[0] != 0 or self.offsets[-1] != self.m:
            raise GraphFormatError("offsets must start at 0 and end at m")
        for i in range(self.n):
            if self.offsets[i] > self.offsets[i + 1]:
                raise GraphFormatError(f"offsets not nondecreasing at vertex {i}")
        if len(self.targets) != self.m or len(self.weights) != self.m:
            raise GraphFormatError("targets/weights length != m")
        for j, t in enumerate(self.targets):
            if not 0 <= t < self.n:
                raise GraphFormatError(f"edge {j} target {t} out of range [0, {self.n})")
        for j, w in enumerate(self.weights):
            if w < 0:
                raise GraphFormatError(f"edge {j} has negative weight {w}")

    def degree(self, v: int) -> int:
        return self.offsets[v + 1] - self.offsets[v]

    def neighbors(self, v: int) -> list[int]:
        return self.targets[self.offsets[v] : self.offsets[v + 1]]

    def edges(self):
        """Yield (u, v, w) in CSR order."""
        for u in range(self.n):
            for j in range(self.offsets[u], self.offsets[u + 1]):
                yield u, self.targets[j], self.weights[j]


def from_edge_tuples(n: int, edges: list[tuple[int, int, int]]) -> GlobalGraph:
    """Build a CSR keeping per-source edges in their given order."""
    for u, v, _w in edges:
        if not 0 <= u < n:
            raise GraphFormatError(f"source id {u} out of range [0, {n})")
        if not 0 <= v < n:
            raise GraphFormatError(f"target id {v} out of range [0, {n})")
    offsets = [0] * (n + 1)
    for u, _v, _w in edges:
        offsets[u + 1] += 1
    for i in range(n):
        offsets[i + 1] += offsets[i]
    targets = [0] * len(edges)
    weights = [0] * len(edges)
    cursor = offsets[:-1].copy()
    for u, v, w in edges:
        j = cursor[u]
        targets[j] = v
        weights[j] = w
        cursor[u] = j + 1
    g = GlobalGraph(n=n, m=len(edges), offsets=offsets, targets=targets, weights=weights)
    g.validate()
    return g


def symmetrize(g: GlobalGraph) -> GlobalGraph:
    """Add the reverse of every edge (weights copied). Keeps the original edges first
    per vertex, so the result is deterministic."""
    edges = list(g.edges())
    edges.extend((v, u, w) for u, v, w in g.edges())
    return from_edge_tuples(g.n, edges)


@dataclass(frozen=True)
class Partition:
    n: int
    world_size: int
    # owned_range[r] = (lo, hi), half-open, contiguous in rank order
    owned_range: tuple[tuple[int, int], ...]

    def size_of(self, rank: int) -> int:
        lo, hi = self.owned_range[rank]
        return hi - lo


def make_partition(n: int, world_size: int) -> Partition:
    if world_size < 1:
        raise GraphFormatError("world size must be at least 1")
    if world_size > n:
        raise GraphFormatError(f"world size {world_size} exceeds vertex count {n}")
    base = n // world_size
    extra = n % world_size
    ranges = []
    lo = 0
    for r in range(world_size):
        hi = lo + base + (1 if r < extra else 0)
        ranges.append((lo, hi))
        lo = hi
    return Partition(n=n, world_size=world_size, owned_range=tuple(ranges))


def owner(v: int, p: Partition) -> int:
    """Rank whose contiguous range contains global id v (pure arithmetic)."""
    if not 0 <= v < p.n:
        raise GraphFormatError(f"vertex {v} out of range [0, {p.n})")
    base = p.n // p.world_size
    extra = p.n % p.world_size
    cut = extra * (base + 1)
    if v < cut:
        return v // (base + 1)
    return extra + (v - cut) // base


@dataclass
class LocalCsr:
    """One rank's out-edge slice. Targets stay global; offsets are rebased to 0."""

    rank: int
    lo: int                # first owned global id
    hi: int                # one past the last owned global id
    offsets: list[int]
    targets: list[int]
    weights: list[int]

    def degree(self, v: int) -> int:
        l = v - self.lo
        return self.offsets[l + 1] - self.offsets[l]

    def adj_slice(self, v: int) -> tuple[int, int]:
        l = v - self.lo
        return self.offsets[l], self.offsets[l + 1]

    def edge_search(self, v: int, nbr: int, metrics=None) -> tuple[int, int]:
        """Linear search over v's adjacency for the first edge to nbr.

        Returns an edge handle (v, position). Charges one search step per slot
        inspected; a miss charges the full degree and raises EdgeNotFound.
        """
        start, end = self.adj_slice(v)
        try:
            j = self.targets.index(nbr, start, end)
        except ValueError:
            if metrics is not None:
                metrics.edge_search_steps += end - start
            raise EdgeNotFound(f"no edge {v} -> {nbr}") from None
        if metrics is not None:
            metrics.edge_search_steps += j - start + 1
        return (v, j - start)

    def edge_at(self, v: int, i: int, metrics=None) -> tuple[int, int]:
        """Positional O(1) access; charges exactly one search step per call."""
        start, end = self.adj_slice(v)
        if not 0 <= i < end - start:
            raise GraphFormatError(f"edge index {i} out of range for vertex {v} (degree {end - start})")
        if metrics is not None:
            metrics.edge_search_steps += 1
        return (v, i)

    def edge_other(self, v: int, handle: tuple[int, int]) -> int:
        """Target endpoint of an edge handle; free of search-step charges."""
        hv, pos = handle
        start, _ = self.adj_slice(hv)
        return self.targets[start + pos]

    def edge_weight(self, handle: tuple[int, int]) -> int:
        hv, pos = handle
        start, _ = self.adj_slice(hv)
        return self.weights[start + pos]


@dataclass
class PartitionedGraph:
    partition: Partition
    locals: list[LocalCsr]
    source: GlobalGraph = field(repr=False)

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def world_size(self) -> int:
        return self.partition.world_size

    def owner(self, v: int) -> int:
        return owner(v, self.partition)

    def reassemble(self) -> GlobalGraph:
        """Concatenate per-rank edge slices in rank order back into a global CSR."""
        offsets = [0]
        targets: list[int] = []
        weights: list[int] = []
        for lc in self.locals:
            for l in range(lc.hi - lc.lo):
                targets.extend(lc.targets[lc.offsets[l] : lc.offsets[l + 1]])
                weights.extend(lc.weights[lc.offsets[l] : lc.offsets[l + 1]])
                offsets.append(len(targets))
        return GlobalGraph(
            n=self.partition.n, m=len(targets), offsets=offsets, targets=targets, weights=weights
        )


def partition_block(g: GlobalGraph, world_size: int) -> PartitionedGraph:
    """Slice the global CSR into contiguous per-rank blocks (no ghosts, no mirrors)."""
    g.validate()
    part = make_partition(g.n, world_size)
    locals_: list[LocalCsr] = []
    for r, (lo, hi) in enumerate(part.owned_range):
        base_off = g.offsets[lo]
        offsets = [g.offsets[v] - base_off for v in range(lo, hi + 1)]
        targets = g.targets[g.offsets[lo] : g.offsets[hi]]
        weights = g.weights[g.offsets[lo] : g.offsets[hi]]
        locals_.append(
            LocalCsr(rank=r, lo=lo, hi=hi, offsets=offsets, targets=targets, weights=weights)
        )
    return PartitionedGraph(partition=part, locals=locals_, source=g)
