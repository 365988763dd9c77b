"""Concurrent block-transaction execution engine.

Builds a dependency DAG from declared read/write sets, schedules
conflict-free parallel execution, verifies miner-shared DAGs against
tampering, and benchmarks the strategies against serial and
predecessor-tree baselines.
"""

from .model import (
    ABSENT,
    Address,
    Block,
    ExecutionReport,
    StateStore,
    Transaction,
    state_digest,
)
from .dag import (
    DependencyDAG,
    LinkedListDAG,
    MatrixDAG,
    brute_force_dag,
    build_dag,
    conflicts,
    dag_from_shared,
)
from .scheduler import (
    ALL_DONE,
    NONE_AVAILABLE,
    ParallelExecutionError,
    ScheduleCursor,
    ScheduleRun,
    commit_txn,
    execute_block_parallel,
    execute_block_serial,
    select_txn,
)
from .tree import (
    PredecessorTree,
    TreeRun,
    build_predecessor_tree,
    execute_block_tree,
    tree_insert,
    tree_next_txn,
    tree_predecessors,
)
from .validator import AddressAccessIndex, Verdict, build_access_index, validate_dag
from .workload import ConflictMetrics, WorkloadSpec, conflict_metrics, generate_block, generate_blocks
from .codec import (
    BlockCodecError,
    BlockTooLargeError,
    ChecksumMismatchError,
    MalformedBlockError,
    TruncatedBlockError,
    attach_dag,
    max_block_txns,
    parse_block,
    serialize_block,
)

__all__ = [
    "ABSENT",
    "ALL_DONE",
    "Address",
    "AddressAccessIndex",
    "Block",
    "BlockCodecError",
    "BlockTooLargeError",
    "ChecksumMismatchError",
    "ConflictMetrics",
    "DependencyDAG",
    "ExecutionReport",
    "LinkedListDAG",
    "MalformedBlockError",
    "MatrixDAG",
    "NONE_AVAILABLE",
    "ParallelExecutionError",
    "PredecessorTree",
    "ScheduleCursor",
    "ScheduleRun",
    "StateStore",
    "Transaction",
    "TreeRun",
    "TruncatedBlockError",
    "Verdict",
    "WorkloadSpec",
    "attach_dag",
    "brute_force_dag",
    "build_access_index",
    "build_dag",
    "build_predecessor_tree",
    "commit_txn",
    "conflict_metrics",
    "conflicts",
    "dag_from_shared",
    "execute_block_parallel",
    "execute_block_serial",
    "execute_block_tree",
    "generate_block",
    "generate_blocks",
    "max_block_txns",
    "parse_block",
    "select_txn",
    "serialize_block",
    "state_digest",
    "tree_insert",
    "tree_next_txn",
    "tree_predecessors",
    "validate_dag",
]
