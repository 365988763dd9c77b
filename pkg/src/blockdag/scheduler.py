"""Block execution: DAG-driven parallel scheduling plus the serial baseline.

A transaction is runnable when its indegree is zero. Workers claim one by
atomically swapping that zero to -1, execute the family processor, append to
the shared commit log, and only then decrement each successor's indegree.
Appending before the decrement is what makes the recorded schedule a
topological order: no successor can even be claimed until its predecessor
is already in the log.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

from . import families
from .dag import DependencyDAG
from .model import Block, ExecutionReport, StateStore, state_digest


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str) -> None:
        self._name = name

    def __repr__(self) -> str:
        return self._name


NONE_AVAILABLE = _Sentinel("NONE_AVAILABLE")
ALL_DONE = _Sentinel("ALL_DONE")

# Idle workers yield first, then nap briefly, so a spinning thread does not
# starve the one doing useful work of the interpreter lock.
_BACKOFF_SECONDS = 50e-6


@dataclass
class ScheduleCursor:
    """Per-worker scan hint: the last index this worker claimed."""

    pos: int = 0


class ScheduleRun:
    """Execution-time state for one pass over a DAG.

    Indegree -1 marks "claimed"; it cannot distinguish in-flight from
    finished, so commit keeps a separate per-transaction flag plus a count
    that drives the all-done answer.
    """

    def __init__(self, dag: DependencyDAG) -> None:
        self.dag = dag
        self._committed = bytearray(dag.txn_count)
        self._commit_lock = threading.Lock()
        self.committed_count = 0

    def is_committed(self, index: int) -> bool:
        return bool(self._committed[index])

    def _mark_committed(self, index: int) -> None:
        with self._commit_lock:
            assert not self._committed[index], f"transaction {index} committed twice"
            self._committed[index] = 1
            self.committed_count += 1


def select_txn(run: ScheduleRun, cursor: ScheduleCursor):
    """Claim a zero-indegree transaction, scanning from the cursor and wrapping.

    Returns the claimed index, NONE_AVAILABLE when unfinished transactions
    exist but none is claimable right now (caller retries), or ALL_DONE once
    every transaction has been claimed and committed.
    """
    n = run.dag.txn_count
    if run.committed_count >= n:
        return ALL_DONE
    indegree = run.dag.indegree
    start = cursor.pos
    for i in range(start, n):
        if indegree.get(i) == 0 and indegree.compare_and_swap(i, 0, -1):
            cursor.pos = i
            return i
    for i in range(0, start):
        if indegree.get(i) == 0 and indegree.compare_and_swap(i, 0, -1):
            cursor.pos = i
            return i
    return ALL_DONE if run.committed_count >= n else NONE_AVAILABLE


def commit_txn(run: ScheduleRun, index: int) -> None:
    """Mark the claimed transaction done and release its successors."""
    run._mark_committed(index)
    indegree = run.dag.indegree
    for j in run.dag.successors(index):
        indegree.add(j, -1)


class ParallelExecutionError(RuntimeError):
    """A worker died mid-run; carries whatever was committed before the abort."""

    def __init__(self, message: str, report: ExecutionReport) -> None:
        super().__init__(message)
        self.report = report


def _run_worker(
    run: ScheduleRun,
    cursor: ScheduleCursor,
    block: Block,
    store: StateStore,
    processor,
    sim_work_s: float,
    log: list,
    log_lock: threading.Lock,
    stop: threading.Event,
    errors: list,
) -> None:
    try:
        while not stop.is_set():
            selected = select_txn(run, cursor)
            if selected is ALL_DONE:
                return
            if selected is NONE_AVAILABLE:
                time.sleep(_BACKOFF_SECONDS)
                continue
            ok = processor(block.transactions[selected], store)
            if sim_work_s:
                time.sleep(sim_work_s)
            with log_lock:
                log.append((selected, ok))
            commit_txn(run, selected)
    except BaseException as exc:  # noqa: BLE001 - surfaced as run failure
        errors.append(exc)
        stop.set()


def _report_from_log(log: list, store: StateStore, wall: float) -> ExecutionReport:
    return ExecutionReport(
        schedule=[i for i, _ in log],
        final_digest=state_digest(store),
        wall_time=wall,
        txn_successes=sum(1 for _, ok in log if ok),
        txn_failures=sum(1 for _, ok in log if not ok),
    )


def execute_block_parallel(
    block: Block,
    dag: DependencyDAG,
    store: StateStore,
    workers: int,
    processor=None,
    sim_work_us: int = 0,
) -> ExecutionReport:
    """Execute every transaction exactly once, conflict-free, in parallel.

    The DAG's indegree array is consumed by the run; build a fresh DAG (or
    one per repetition) to execute the same block again.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if dag.txn_count != block.txn_count:
        raise ValueError("DAG does not match block")
    processor = processor or families.apply_transaction
    run = ScheduleRun(dag)
    log: list[tuple[int, bool]] = []
    log_lock = threading.Lock()
    stop = threading.Event()
    errors: list[BaseException] = []
    sim_work_s = sim_work_us / 1e6
    n = block.txn_count
    started = time.perf_counter()
    threads = []
    for w in range(workers):
        cursor = ScheduleCursor(pos=(w * n) // workers if n else 0)
        t = threading.Thread(
            target=_run_worker,
            args=(run, cursor, block, store, processor, sim_work_s, log, log_lock, stop, errors),
            name=f"exec-{w}",
        )
        threads.append(t)
        t.start()
    for t in threads:
        t.join()
    wall = time.perf_counter() - started
    report = _report_from_log(log, store, wall)
    if errors:
        raise ParallelExecutionError(
            f"worker failed after {len(log)} of {n} commits: {errors[0]!r}",
            report,
        ) from errors[0]
    return report


def execute_block_serial(
    block: Block,
    store: StateStore,
    processor=None,
    sim_work_us: int = 0,
) -> ExecutionReport:
    """Execute transactions in index order; the reference history."""
    processor = processor or families.apply_transaction
    sim_work_s = sim_work_us / 1e6
    log: list[tuple[int, bool]] = []
    started = time.perf_counter()
    for txn in block.transactions:
        ok = processor(txn, store)
        if sim_work_s:
            time.sleep(sim_work_s)
        log.append((txn.index, ok))
    wall = time.perf_counter() - started
    return _report_from_log(log, store, wall)
