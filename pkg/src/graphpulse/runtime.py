"""Deterministic lock-step simulation of an R-rank distributed world.

Ranks execute as generators that yield collective requests (reduction sync,
flag combine); the scheduler advances every rank to its next collective,
checks that all ranks agree on what that collective is (anything else is
rank divergence, reported instead of deadlocking), performs it, and resumes.
Cross-rank data moves only through these primitives plus the accounted
one-sided get; every counter is monotone within a run.

The reduction queue is the chunked structure of the bulk substrate: one
chain of fixed-capacity chunks per destination rank, each chunk a flat
array of adjacent (global index, value) slots, a fresh chunk allocated
whenever the current one fills.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from graphpulse.config import RunConfig
from graphpulse.graph import PartitionedGraph
from graphpulse.ops import INF, ReductionOp

PAIR_BYTES = 8  # 4-byte index + 4-byte value
VALUE_BYTES = 4


class WorldError(RuntimeError):
    pass


class CollectiveDivergenceError(WorldError):
    """Ranks disagreed about the next collective: the simulated run would deadlock."""


class NonTerminationError(WorldError):
    pass


COUNTERS = (
    "remote_gets",
    "local_gets",
    "bypassed_gets",
    "edge_search_steps",
    "queued_updates",
    "short_circuited_updates",
    "sync_rounds",
    "bytes_window_traffic",
    "allreduce_calls",
    "messages_sent",
    "comm_cost_units",
)


@dataclass
class Metrics:
    remote_gets: int = 0
    local_gets: int = 0
    bypassed_gets: int = 0
    edge_search_steps: int = 0
    queued_updates: int = 0
    short_circuited_updates: int = 0
    sync_rounds: int = 0
    bytes_window_traffic: int = 0
    allreduce_calls: int = 0
    messages_sent: int = 0
    comm_cost_units: int = 0
    per_pulse: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    # per-pulse scratch, reset at every sync boundary
    _pulse_remote_reads: dict = field(default_factory=dict)
    _pulse_distinct_remote: dict = field(default_factory=dict)

    def note_remote_read(self, prop: str, vertex: int, reader: int) -> None:
        # distinct counts are per reading rank: each rank keeps its own memo
        self._pulse_remote_reads[prop] = self._pulse_remote_reads.get(prop, 0) + 1
        self._pulse_distinct_remote.setdefault(prop, set()).add((reader, vertex))

    def close_pulse(self, prop: str, pairs_folded: int, changed: int, ranks_changed: list[bool]) -> None:
        self.per_pulse.append(
            {
                "pulse": self.sync_rounds,
                "prop": prop,
                "pairs_folded": pairs_folded,
                "changed": changed,
                "ranks_changed": list(ranks_changed),
                "remote_reads": dict(self._pulse_remote_reads),
                "distinct_remote": {p: len(s) for p, s in self._pulse_distinct_remote.items()},
            }
        )
        self._pulse_remote_reads = {}
        self._pulse_distinct_remote = {}

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in COUNTERS}
        out["per_pulse"] = self.per_pulse
        return out


class ReductionQueue:
    """Per-destination chains of fixed-capacity chunks of (index, value) pairs."""

    def __init__(self, world_size: int, chunk_pairs: int):
        self.world_size = world_size
        self.chunk_pairs = chunk_pairs
        self.chains: list[list[list[int]]] = [[] for _ in range(world_size)]

    def add(self, dest: int, idx: int, val: int) -> None:
        chain = self.chains[dest]
        if not chain or len(chain[-1]) >= 2 * self.chunk_pairs:
            chain.append([])
        chunk = chain[-1]
        chunk.append(idx)
        chunk.append(val)

    def pairs_queued(self) -> int:
        return sum(len(chunk) for chain in self.chains for chunk in chain) // 2

    def check_invariants(self) -> None:
        for chain in self.chains:
            for chunk in chain[:-1]:
                if len(chunk) != 2 * self.chunk_pairs:
                    raise WorldError("non-final reduction chunk is not full")
            if chain and len(chain[-1]) == 0:
                raise WorldError("empty trailing reduction chunk")

    def drain_plan(self) -> list[tuple[int, list[int]]]:
        """(dest, chunk) in transfer order: destination-major, chunks in chain order."""
        plan = []
        for dest in range(self.world_size):
            for chunk in self.chains[dest]:
                plan.append((dest, chunk))
        return plan

    def clear(self) -> None:
        self.chains = [[] for _ in range(self.world_size)]


# collective request tokens yielded by rank generators
@dataclass(frozen=True)
class SyncRequest:
    prop: str


@dataclass(frozen=True)
class CombineRequest:
    mode: str  # "and" | "or"
    value: bool


class World:
    def __init__(self, pgraph: PartitionedGraph, config: RunConfig):
        if config.world_size != pgraph.world_size:
            raise WorldError(
                f"config world_size {config.world_size} != graph partition {pgraph.world_size}"
            )
        self.pgraph = pgraph
        self.config = config
        self.R = pgraph.world_size
        self.props: dict[str, list[list[int]]] = {}
        self.prop_ops: dict[str, ReductionOp] = {}
        self.queues: list[dict[str, ReductionQueue]] = [dict() for _ in range(self.R)]
        self.frontiers: list[set[int]] = [set() for _ in range(self.R)]
        self.memos: list[dict[str, dict[int, int]]] = [dict() for _ in range(self.R)]
        self.metrics = Metrics()
        self.collective_log: list[tuple] = []
        self.chunk_pairs = max(1, config.buffersz_bytes // (self.R * PAIR_BYTES))
        self.pulse_limit: int | None = None

    # --- properties ---

    def declare_prop(self, name: str, init) -> None:
        if name in self.props:
            raise WorldError(f"property {name!r} declared twice")
        arrays = []
        for lo, hi in self.pgraph.partition.owned_range:
            if init == "INF":
                arrays.append([INF] * (hi - lo))
            elif init == "NODE_ID":
                arrays.append(list(range(lo, hi)))
            else:
                arrays.append([int(init)] * (hi - lo))
        self.props[name] = arrays

    def register_reduction(self, prop: str, op: ReductionOp) -> None:
        prior = self.prop_ops.get(prop)
        if prior is not None and prior is not op:
            raise WorldError(f"property {prop!r} reduced with both {prior.value} and {op.value}")
        self.prop_ops[prop] = op

    def gather_prop(self, name: str) -> list[int]:
        out: list[int] = []
        for arr in self.props[name]:
            out.extend(arr)
        return out

    # --- accounted accesses ---

    def rma_get(self, prop: str, v: int, caller: int) -> int:
        own = self.pgraph.owner(v)
        lo, _ = self.pgraph.partition.owned_range[own]
        val = self.props[prop][own][v - lo]
        m = self.metrics
        if own == caller:
            m.local_gets += 1
        else:
            m.remote_gets += 1
            m.bytes_window_traffic += VALUE_BYTES
            m.note_remote_read(prop, v, caller)
        m.comm_cost_units += self.config.get_epoch_cost + VALUE_BYTES * self.config.per_byte_cost
        return val

    def bypassed_get(self, prop: str, v: int, caller: int) -> int:
        own = self.pgraph.owner(v)
        if own != caller:
            raise WorldError(
                f"rank {caller} dereferenced rank {own}'s array for {prop!r} (vertex {v})"
            )
        lo, _ = self.pgraph.partition.owned_range[own]
        self.metrics.bypassed_gets += 1
        return self.props[prop][own][v - lo]

    def local_store(self, prop: str, v: int, value: int, caller: int) -> bool:
        """Direct guarded store emitted by the bypass pass; marks the frontier on change."""
        own = self.pgraph.owner(v)
        if own != caller:
            raise WorldError(
                f"rank {caller} wrote rank {own}'s array for {prop!r} (vertex {v})"
            )
        lo, _ = self.pgraph.partition.owned_range[own]
        arr = self.props[prop][own]
        changed = arr[v - lo] != value
        if changed:
            arr[v - lo] = value
            self.frontiers[caller].add(v)
        self.metrics.short_circuited_updates += 1
        return changed

    # --- reduction queue and short-circuiting ---

    def _queue_for(self, rank: int, prop: str) -> ReductionQueue:
        q = self.queues[rank].get(prop)
        if q is None:
            q = ReductionQueue(self.R, self.chunk_pairs)
            self.queues[rank][prop] = q
        return q

    def add_to_red(self, caller: int, prop: str, idx: int, val: int) -> None:
        dest = self.pgraph.owner(idx)
        self._queue_for(caller, prop).add(dest, idx, val)
        self.metrics.queued_updates += 1

    def short_circuit_local(self, caller: int, prop: str, idx: int, val: int, op: ReductionOp) -> bool:
        """Fold a monotonic update straight into the local array; remote targets
        are not handled and must be queued by the caller."""
        if not op.monotonic:
            return False
        own = self.pgraph.owner(idx)
        if own != caller:
            return False
        lo, _ = self.pgraph.partition.owned_range[own]
        arr = self.props[prop][own]
        cur = arr[idx - lo]
        new = op.fold(cur, val)
        if new != cur:
            arr[idx - lo] = new
            self.frontiers[caller].add(idx)
        self.metrics.short_circuited_updates += 1
        return True

    # --- frontier ---

    def frontier_nonempty(self, rank: int) -> bool:
        return bool(self.frontiers[rank])

    def frontier_drain(self, rank: int) -> list[int]:
        """Vertices marked since the previous drain, ascending and consumed."""
        out = sorted(self.frontiers[rank])
        self.frontiers[rank].clear()
        return out

    def frontier_mark(self, v: int) -> None:
        self.frontiers[self.pgraph.owner(v)].add(v)

    # --- collectives (invoked by the scheduler with all ranks arrived) ---

    def _fold_pair(self, prop: str, op: ReductionOp, idx: int, val: int) -> bool:
        dest = self.pgraph.owner(idx)
        lo, _ = self.pgraph.partition.owned_range[dest]
        arr = self.props[prop][dest]
        cur = arr[idx - lo]
        new = op.fold(cur, val)
        if new != cur:
            arr[idx - lo] = new
            self.frontiers[dest].add(idx)
            return True
        return False

    def bulk_synchronize(self, prop: str) -> None:
        """Chunk-at-a-time window exchange: per round each rank places its next
        outgoing chunk in the destination's window segment; destinations fold
        their segment; rounds repeat until every chain is drained."""
        op = self.prop_ops.get(prop)
        if op is None:
            raise WorldError(f"no reduction registered for property {prop!r}")
        m = self.metrics
        cfg = self.config
        plans = [self._queue_for(r, prop).drain_plan() for r in range(self.R)]
        for r in range(self.R):
            self._queue_for(r, prop).check_invariants()
        cursors = [0] * self.R
        pairs_folded = 0
        changed = 0
        ranks_changed = [False] * self.R
        m.messages_sent += self.R  # one window epoch per rank per sync
        while any(cursors[r] < len(plans[r]) for r in range(self.R)):
            window: list[list[tuple[int, list[int]]]] = [[] for _ in range(self.R)]
            for s in range(self.R):
                if cursors[s] < len(plans[s]):
                    dest, chunk = plans[s][cursors[s]]
                    cursors[s] += 1
                    window[dest].append((s, chunk))
                    m.bytes_window_traffic += len(chunk) * VALUE_BYTES
                    m.comm_cost_units += (
                        cfg.chunk_epoch_cost + len(chunk) * VALUE_BYTES * cfg.per_byte_cost
                    )
            for d in range(self.R):
                for _s, chunk in window[d]:
                    for k in range(0, len(chunk), 2):
                        if self._fold_pair(prop, op, chunk[k], chunk[k + 1]):
                            changed += 1
                            ranks_changed[d] = True
                        pairs_folded += 1
        for r in range(self.R):
            self.queues[r][prop].clear()
            self.memos[r].clear()  # pulse boundary: every cache memo resets
        m.sync_rounds += 1
        m.close_pulse(prop, pairs_folded, changed, ranks_changed)
        self._check_pulse_limit()

    def legacy_all_to_all_sync(self, prop: str) -> None:
        """Dense R x R exchange baseline: identical folding results, pairwise
        message accounting with per-message setup cost."""
        op = self.prop_ops.get(prop)
        if op is None:
            raise WorldError(f"no reduction registered for property {prop!r}")
        m = self.metrics
        cfg = self.config
        m.messages_sent += self.R * (self.R - 1)
        m.comm_cost_units += cfg.legacy_msg_setup_cost * self.R * (self.R - 1)
        pairs_folded = 0
        changed = 0
        ranks_changed = [False] * self.R
        for d in range(self.R):
            for s in range(self.R):
                q = self._queue_for(s, prop)
                payload: list[int] = []
                for chunk in q.chains[d]:
                    payload.extend(chunk)
                if s != d:
                    m.bytes_window_traffic += len(payload) * VALUE_BYTES
                    m.comm_cost_units += len(payload) * VALUE_BYTES * cfg.per_byte_cost
                for k in range(0, len(payload), 2):
                    if self._fold_pair(prop, op, payload[k], payload[k + 1]):
                        changed += 1
                        ranks_changed[d] = True
                    pairs_folded += 1
        for r in range(self.R):
            self.queues[r][prop].clear()
            self.memos[r].clear()
        m.sync_rounds += 1
        m.close_pulse(prop, pairs_folded, changed, ranks_changed)
        self._check_pulse_limit()

    def _check_pulse_limit(self) -> None:
        if self.pulse_limit is not None and self.metrics.sync_rounds > self.pulse_limit:
            raise NonTerminationError(
                f"pulse limit {self.pulse_limit} exceeded after {self.metrics.sync_rounds} sync rounds"
            )

    def sync_reduction(self, prop: str) -> None:
        if self.config.sync_mode == "legacy":
            self.legacy_all_to_all_sync(prop)
        else:
            self.bulk_synchronize(prop)

    def combine_flags(self, mode: str, values: list[bool]) -> bool:
        self.metrics.allreduce_calls += 1
        self.metrics.comm_cost_units += self.config.get_epoch_cost
        if mode == "and":
            return all(values)
        if mode == "or":
            return any(values)
        raise WorldError(f"unknown combine mode {mode!r}")

    # --- cache memos (cleared at every pulse boundary) ---

    def memo_for(self, rank: int, cache: str) -> dict[int, int]:
        return self.memos[rank].setdefault(cache, {})

    # --- lock-step scheduler ---

    def run_lockstep(self, make_rank_gen, collective_limit: int | None = None) -> None:
        """Drive one generator per rank; every yield must be a matching
        collective across all live ranks."""
        gens = [make_rank_gen(r) for r in range(self.R)]
        requests: list = [None] * self.R
        done = [False] * self.R
        for r in range(self.R):
            requests[r] = self._advance(gens[r], None, r, done)
        steps = 0
        while not all(done):
            if any(done):
                finished = [r for r in range(self.R) if done[r]]
                waiting = [(r, requests[r]) for r in range(self.R) if not done[r]]
                raise CollectiveDivergenceError(
                    f"ranks {finished} finished while ranks {waiting} wait at a collective"
                )
            kinds = {self._static_key(req) for req in requests}
            if len(kinds) != 1:
                detail = ", ".join(f"rank {r}: {requests[r]}" for r in range(self.R))
                raise CollectiveDivergenceError(f"collective mismatch: {detail}")
            results = self._perform(requests)
            steps += 1
            if collective_limit is not None and steps > collective_limit:
                raise NonTerminationError(
                    f"collective budget exhausted after {steps - 1} collectives "
                    f"({self.metrics.sync_rounds} sync rounds); the program is not converging"
                )
            for r in range(self.R):
                requests[r] = self._advance(gens[r], results[r], r, done)

    @staticmethod
    def _static_key(req):
        if isinstance(req, SyncRequest):
            return ("sync", req.prop)
        if isinstance(req, CombineRequest):
            return ("combine", req.mode)
        return ("?", req)

    def _advance(self, gen, send_value, rank: int, done: list[bool]):
        try:
            return next(gen) if send_value is None else gen.send(send_value)
        except StopIteration:
            done[rank] = True
            return None

    def _perform(self, requests: list) -> list:
        first = requests[0]
        if isinstance(first, SyncRequest):
            self.collective_log.append(("sync", first.prop))
            self.sync_reduction(first.prop)
            return [True] * self.R
        if isinstance(first, CombineRequest):
            self.collective_log.append(("combine", first.mode))
            result = self.combine_flags(first.mode, [req.value for req in requests])
            return [result] * self.R
        raise WorldError(f"unknown collective request {first!r}")
