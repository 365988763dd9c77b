"""Predecessor-tree scheduler: the address-keyed parallel baseline.

Every address in the block maps to a leaf of a byte-keyed prefix tree whose
node records which transactions read and write it. Construction is serial.
To grant a transaction, the scheduler re-checks the completion status of all
lower-index transactions sharing an address with it in a conflicting
pattern — that per-address bookkeeping, serialized behind one lock, is the
cost this design pays relative to the DAG scheduler, and it is preserved
here on purpose.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from . import families
from .model import Block, ExecutionReport, StateStore, Transaction, state_digest
from .scheduler import ALL_DONE, NONE_AVAILABLE, _BACKOFF_SECONDS, _report_from_log

UNSCHEDULED = 0
RUNNING = 1
DONE = 2


class _TrieNode:
    __slots__ = ("children", "read_list", "write_list", "leaf_id")

    def __init__(self) -> None:
        self.children: dict[int, _TrieNode] = {}
        self.read_list: list[int] = []
        self.write_list: list[int] = []
        self.leaf_id = -1


class PredecessorTree:
    """Prefix tree over address bytes with per-node read/write lists."""

    def __init__(self) -> None:
        self.root = _TrieNode()
        self.leaf_count = 0
        self.txn_count = 0
        # Per transaction: (node, writes_here) for each touched address, so
        # grant checks do not re-walk the trie.
        self._txn_nodes: list[list[tuple[_TrieNode, bool]]] = []

    def _descend(self, address: bytes) -> _TrieNode:
        node = self.root
        for byte in address:
            child = node.children.get(byte)
            if child is None:
                child = _TrieNode()
                node.children[byte] = child
            node = child
        if node.leaf_id < 0:
            node.leaf_id = self.leaf_count
            self.leaf_count += 1
        return node

    def node(self, address: bytes) -> _TrieNode | None:
        node = self.root
        for byte in address:
            node = node.children.get(byte)
            if node is None:
                return None
        return node


def tree_insert(tree: PredecessorTree, txn: Transaction) -> None:
    """Register a transaction's addresses; must be called in index order."""
    if txn.index != tree.txn_count:
        raise ValueError(
            f"insertions must follow index order: got {txn.index}, expected {tree.txn_count}"
        )
    entry: list[tuple[_TrieNode, bool]] = []
    for address in sorted(txn.read_set | txn.write_set):
        node = tree._descend(address)
        writes = address in txn.write_set
        if address in txn.read_set:
            node.read_list.append(txn.index)
        if writes:
            node.write_list.append(txn.index)
        entry.append((node, writes))
    tree._txn_nodes.append(entry)
    tree.txn_count += 1


def build_predecessor_tree(block: Block) -> PredecessorTree:
    tree = PredecessorTree()
    for txn in block.transactions:
        tree_insert(tree, txn)
    return tree


@dataclass
class TreeRun:
    """Per-run scheduling state: txn status plus per-node done-prefix hints.

    The hint arrays track how many leading entries of each node's lists are
    DONE; they only ever advance, which is safe because status transitions
    are monotonic. A fresh TreeRun makes the tree reusable across runs.
    """

    tree: PredecessorTree
    status: list[int] = field(init=False)
    done_count: int = field(init=False, default=0)
    _first_pending: int = field(init=False, default=0)
    _read_ptr: list[int] = field(init=False)
    _write_ptr: list[int] = field(init=False)

    def __post_init__(self) -> None:
        self.status = [UNSCHEDULED] * self.tree.txn_count
        self._read_ptr = [0] * self.tree.leaf_count
        self._write_ptr = [0] * self.tree.leaf_count

    def mark_done(self, index: int) -> None:
        if self.status[index] != RUNNING:
            raise ValueError(f"transaction {index} is not running")
        self.status[index] = DONE
        self.done_count += 1


def _lower_entries_done(lst: list[int], ptrs: list[int], leaf: int, status: list[int], limit: int) -> bool:
    p = ptrs[leaf]
    size = len(lst)
    while p < size and status[lst[p]] == DONE:
        p += 1
    ptrs[leaf] = p
    return p >= size or lst[p] >= limit


def _grantable(tree: PredecessorTree, run: TreeRun, index: int) -> bool:
    # A read competes with earlier writers; a write also competes with
    # earlier readers. Read-read sharing never blocks.
    status = run.status
    for node, writes in tree._txn_nodes[index]:
        leaf = node.leaf_id
        if not _lower_entries_done(node.write_list, run._write_ptr, leaf, status, index):
            return False
        if writes and not _lower_entries_done(node.read_list, run._read_ptr, leaf, status, index):
            return False
    return True


def tree_next_txn(tree: PredecessorTree, run: TreeRun):
    """Grant the lowest-index unscheduled transaction whose conflicting
    predecessors are all done, marking it RUNNING; callers serialize this
    behind one lock."""
    n = tree.txn_count
    status = run.status
    first = run._first_pending
    while first < n and status[first] != UNSCHEDULED:
        first += 1
    run._first_pending = first
    for i in range(first, n):
        if status[i] != UNSCHEDULED:
            continue
        if _grantable(tree, run, i):
            status[i] = RUNNING
            return i
    return ALL_DONE if run.done_count >= n else NONE_AVAILABLE


def tree_predecessors(tree: PredecessorTree, index: int) -> set[int]:
    """Lower-index transactions this one must wait for (test/inspection aid)."""
    preds: set[int] = set()
    for node, writes in tree._txn_nodes[index]:
        for other in node.write_list:
            if other < index:
                preds.add(other)
        if writes:
            for other in node.read_list:
                if other < index:
                    preds.add(other)
    return preds


def _tree_worker(tree, run, lock, block, store, processor, sim_work_s, log, stop, errors):
    try:
        while not stop.is_set():
            with lock:
                granted = tree_next_txn(tree, run)
            if granted is ALL_DONE:
                return
            if granted is NONE_AVAILABLE:
                time.sleep(_BACKOFF_SECONDS)
                continue
            ok = processor(block.transactions[granted], store)
            if sim_work_s:
                time.sleep(sim_work_s)
            with lock:
                log.append((granted, ok))
                run.mark_done(granted)
    except BaseException as exc:  # noqa: BLE001
        errors.append(exc)
        stop.set()


def execute_block_tree(
    block: Block,
    tree: PredecessorTree,
    store: StateStore,
    workers: int,
    processor=None,
    sim_work_us: int = 0,
) -> ExecutionReport:
    """Run the block through the predecessor-tree scheduler."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if tree.txn_count != block.txn_count:
        raise ValueError("tree does not match block")
    processor = processor or families.apply_transaction
    run = TreeRun(tree)
    lock = threading.Lock()
    log: list[tuple[int, bool]] = []
    stop = threading.Event()
    errors: list[BaseException] = []
    sim_work_s = sim_work_us / 1e6
    started = time.perf_counter()
    threads = [
        threading.Thread(
            target=_tree_worker,
            args=(tree, run, lock, block, store, processor, sim_work_s, log, stop, errors),
            name=f"tree-exec-{w}",
        )
        for w in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall = time.perf_counter() - started
    report = _report_from_log(log, store, wall)
    if errors:
        raise RuntimeError(
            f"tree worker failed after {len(log)} of {block.txn_count} commits"
        ) from errors[0]
    return report
