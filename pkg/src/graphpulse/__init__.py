"""graphpulse: a mini graph DSL, optimization passes, and a simulated distributed runtime.

Programs written in the DSL (see docs/grammar.md) are parsed, analyzed for
reduction-exclusive statements, rewritten by up to four communication
optimization passes, and interpreted on a deterministic lock-step simulation
of an R-rank world with emulated one-sided windows and a chunked reduction
queue.  Every optimization is checked against a sequential reference
interpreter and classic oracles (Dijkstra, union-find).
"""

__version__ = "0.1.0"

from graphpulse.ops import INF, INT_MIN, ReductionOp, sat_add
from graphpulse.graph import GlobalGraph, Partition, PartitionedGraph, owner, partition_block

__all__ = [
    "INF",
    "INT_MIN",
    "ReductionOp",
    "sat_add",
    "GlobalGraph",
    "Partition",
    "PartitionedGraph",
    "owner",
    "partition_block",
]
