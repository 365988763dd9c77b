"""Dependency DAG construction over a block's declared read/write sets.

An edge (i, j) with i < j exists exactly when transactions i and j overlap
in a read-write, write-read, or write-write pattern; read-read overlap never
creates an edge. Construction is multi-threaded: workers claim transaction
indices from a shared atomic counter and each scans forward for conflicts,
so the edge (i, j) is always added by the worker that owns i.

Two representations are provided. The adjacency-matrix variant backs the
edge relation with a flat byte grid (direct access); the linked-list variant
keeps a per-node successor list with insert-if-absent. Both expose the same
surface and must produce identical edge sets and indegrees for any block and
any worker count.
"""

from __future__ import annotations

import threading

from .atomics import AtomicCounter, AtomicIntArray
from .model import Block, Transaction

VARIANTS = ("matrix", "linked-list")


def conflicts(a: Transaction, b: Transaction) -> bool:
    """True when a and b overlap RW, WR, or WW. Requires a.index < b.index."""
    assert a.index < b.index, "conflicts() takes the lower-index transaction first"
    return (
        not a.write_set.isdisjoint(b.write_set)
        or not a.write_set.isdisjoint(b.read_set)
        or not a.read_set.isdisjoint(b.write_set)
    )


class DependencyDAG:
    """Shared behavior of both DAG representations.

    The indegree array is atomic because workers adding edges that target
    the same transaction increment it concurrently, and the scheduler later
    claims transactions by compare-and-swapping indegree 0 -> -1.
    """

    def __init__(self, txn_count: int) -> None:
        self.txn_count = txn_count
        self.indegree = AtomicIntArray(txn_count)
        self._edge_count = AtomicCounter()

    @property
    def edge_count(self) -> int:
        return self._edge_count.value

    def add_edge(self, i: int, j: int) -> bool:
        if not 0 <= i < j < self.txn_count:
            raise ValueError(f"edge ({i}, {j}) out of range for n={self.txn_count}")
        if self._insert(i, j):
            self.indegree.add(j, 1)
            self._edge_count.inc()
            return True
        return False

    def _insert(self, i: int, j: int) -> bool:
        raise NotImplementedError

    def has_edge(self, i: int, j: int) -> bool:
        raise NotImplementedError

    def successors(self, i: int) -> list[int]:
        raise NotImplementedError

    def edges(self):
        for i in range(self.txn_count):
            for j in self.successors(i):
                yield (i, j)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges())

    def predecessor_lists(self) -> list[list[int]]:
        preds: list[list[int]] = [[] for _ in range(self.txn_count)]
        for i, j in self.edges():
            preds[j].append(i)
        return preds

    def indegree_snapshot(self) -> list[int]:
        return self.indegree.snapshot()


class MatrixDAG(DependencyDAG):
    """Adjacency-matrix representation: n*n byte grid, direct access."""

    variant = "matrix"

    def __init__(self, txn_count: int) -> None:
        super().__init__(txn_count)
        self._cells = bytearray(txn_count * txn_count)
        self._locks = [threading.Lock() for _ in range(64)]

    def _insert(self, i: int, j: int) -> bool:
        k = i * self.txn_count + j
        cells = self._cells
        if cells[k]:
            return False
        # The lock only makes the test-and-set exact when two threads race
        # the same pair; distinct pairs almost never share a stripe.
        with self._locks[k & 63]:
            if cells[k]:
                return False
            cells[k] = 1
            return True

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._cells[i * self.txn_count + j])

    def successors(self, i: int) -> list[int]:
        n = self.txn_count
        base = i * n
        end = base + n
        out = []
        k = self._cells.find(1, base, end)
        while k != -1:
            out.append(k - base)
            k = self._cells.find(1, k + 1, end)
        return out

    def matrix_bytes(self) -> bytes:
        return bytes(self._cells)


class LinkedListDAG(DependencyDAG):
    """Per-node successor lists with insert-if-absent under a node lock."""

    variant = "linked-list"

    def __init__(self, txn_count: int) -> None:
        super().__init__(txn_count)
        self._succ: list[list[int]] = [[] for _ in range(txn_count)]
        self._succ_sets: list[set[int]] = [set() for _ in range(txn_count)]
        self._node_locks = [threading.Lock() for _ in range(txn_count)]

    def _insert(self, i: int, j: int) -> bool:
        with self._node_locks[i]:
            members = self._succ_sets[i]
            if j in members:
                return False
            members.add(j)
            self._succ[i].append(j)
            return True

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._succ_sets[i]

    def successors(self, i: int) -> list[int]:
        return sorted(self._succ[i])


def _new_dag(txn_count: int, variant: str) -> DependencyDAG:
    if variant == "matrix":
        return MatrixDAG(txn_count)
    if variant == "linked-list":
        return LinkedListDAG(txn_count)
    raise ValueError(f"unknown DAG variant: {variant!r} (expected one of {VARIANTS})")


def _access_masks(block: Block) -> tuple[list[int], list[int], list[int]]:
    """Per-transaction read/write bitmasks over the block's address universe.

    Conflict for (i, j) reduces to two integer ANDs:
    write_i & (read_j | write_j)  or  read_i & write_j.
    """
    bit_of: dict[bytes, int] = {}
    read_masks: list[int] = []
    write_masks: list[int] = []
    for txn in block.transactions:
        rm = 0
        for addr in txn.read_set:
            bit = bit_of.setdefault(addr, len(bit_of))
            rm |= 1 << bit
        wm = 0
        for addr in txn.write_set:
            bit = bit_of.setdefault(addr, len(bit_of))
            wm |= 1 << bit
        read_masks.append(rm)
        write_masks.append(wm)
    combined = [r | w for r, w in zip(read_masks, write_masks)]
    return read_masks, write_masks, combined


def _scan_worker(
    dag: DependencyDAG,
    claim: AtomicCounter,
    read_masks: list[int],
    write_masks: list[int],
    combined_masks: list[int],
) -> None:
    n = dag.txn_count
    add_edge = dag.add_edge
    while True:
        i = claim.fetch_inc()
        if i >= n:
            claim.dec()
            return
        rm = read_masks[i]
        wm = write_masks[i]
        for j in range(i + 1, n):
            if (wm & combined_masks[j]) or (rm & write_masks[j]):
                add_edge(i, j)


def build_dag(block: Block, workers: int = 1, variant: str = "matrix") -> DependencyDAG:
    """Construct the block's dependency DAG with the given worker count.

    The result is independent of the worker count and of which variant is
    chosen: same edge set, same indegrees. All nodes exist up front, so
    workers never observe a partially registered graph.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = block.txn_count
    dag = _new_dag(n, variant)
    if n == 0:
        return dag
    read_masks, write_masks, combined_masks = _access_masks(block)
    claim = AtomicCounter()
    if workers == 1:
        _scan_worker(dag, claim, read_masks, write_masks, combined_masks)
        return dag
    threads = [
        threading.Thread(
            target=_scan_worker,
            args=(dag, claim, read_masks, write_masks, combined_masks),
            name=f"dag-build-{w}",
        )
        for w in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return dag


def brute_force_dag(block: Block) -> DependencyDAG:
    """Single-threaded reference builder, straight from the edge definition.

    Deliberately kept independent of build_dag's bitmask fast path: it calls
    conflicts() on the declared sets pair by pair, and exists so the
    concurrent builder has something to be checked against.
    """
    dag = MatrixDAG(block.txn_count)
    txns = block.transactions
    for i in range(block.txn_count):
        for j in range(i + 1, block.txn_count):
            if conflicts(txns[i], txns[j]):
                dag.add_edge(i, j)
    return dag


def dag_from_shared(block: Block) -> DependencyDAG:
    """Rebuild a DAG from the dependency lists embedded in a shared block."""
    if not block.has_shared_dag:
        raise ValueError("block does not carry a shared DAG")
    dag = MatrixDAG(block.txn_count)
    for txn in block.transactions:
        for dep in txn.declared_dependencies:
            if not 0 <= dep < txn.index:
                raise ValueError(
                    f"transaction {txn.index} declares invalid dependency {dep}"
                )
            dag.add_edge(dep, txn.index)
    return dag
