"""Core vocabulary: transactions, blocks, the state store, and run reports.

Addresses are opaque byte strings namespaced by a family prefix. A
transaction declares the addresses it will read and write up front; nothing
in the engine ever infers access sets by executing transaction logic.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Mapping

if TYPE_CHECKING:
    from .families import FamilyOp

Address = bytes


class _AbsentType:
    """Sentinel for reads of addresses that hold no value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ABSENT"

    def __bool__(self) -> bool:
        return False


ABSENT = _AbsentType()


@dataclass(frozen=True)
class Transaction:
    """One block entry: position, declared access sets, and family payload.

    ``declared_dependencies`` is populated only when a block carries a
    shared dependency DAG; each entry is the index of a predecessor
    transaction (strictly lower than ``index``).
    """

    index: int
    read_set: frozenset[Address]
    write_set: frozenset[Address]
    payload: "FamilyOp"
    declared_dependencies: tuple[int, ...] | None = None


@dataclass(frozen=True)
class Block:
    """Ordered transaction list, optionally carrying a shared indegree array."""

    transactions: tuple[Transaction, ...]
    shared_indegree: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        for pos, txn in enumerate(self.transactions):
            if txn.index != pos:
                raise ValueError(
                    f"transaction at position {pos} has index {txn.index}"
                )
        if self.shared_indegree is not None and len(self.shared_indegree) != len(
            self.transactions
        ):
            raise ValueError("shared_indegree length does not match txn count")

    @property
    def txn_count(self) -> int:
        return len(self.transactions)

    @property
    def has_shared_dag(self) -> bool:
        return self.shared_indegree is not None and all(
            t.declared_dependencies is not None for t in self.transactions
        )


class StateStore:
    """Mutable address -> value map shared by the executors.

    Individual get/set calls are atomic under CPython; the schedulers
    guarantee that no two in-flight transactions touch the same address, so
    no store-wide lock is taken on any execution path. Values must be
    treated as immutable by processors: update by writing a new value, never
    by mutating a fetched one in place.
    """

    __slots__ = ("_entries",)

    def __init__(self, initial: Mapping[Address, object] | None = None) -> None:
        self._entries: dict[Address, object] = dict(initial) if initial else {}

    def get(self, address: Address):
        return self._entries.get(address, ABSENT)

    def set(self, address: Address, value) -> None:
        self._entries[address] = value

    def __contains__(self, address: Address) -> bool:
        return address in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> Iterator[tuple[Address, object]]:
        return iter(self._entries.items())

    def copy(self) -> "StateStore":
        return StateStore(self._entries)


def _canonical_value(value) -> bytes:
    # Canonical JSON keeps the digest independent of dict insertion order.
    return json.dumps(value, sort_keys=True, separators=(",", ":")).encode()


def state_digest(store: StateStore) -> bytes:
    """SHA-256 over the sorted entry set; insertion order never matters."""
    h = hashlib.sha256()
    for address in sorted(store._entries):
        encoded = _canonical_value(store._entries[address])
        h.update(struct.pack("<I", len(address)))
        h.update(address)
        h.update(struct.pack("<I", len(encoded)))
        h.update(encoded)
    return h.digest()


@dataclass
class ExecutionReport:
    """Outcome of one block run: commit order, end-state digest, timings."""

    schedule: list[int] = field(default_factory=list)
    final_digest: bytes = b""
    wall_time: float = 0.0
    txn_successes: int = 0
    txn_failures: int = 0
    validator_verdict: str | None = None

    @property
    def txn_count(self) -> int:
        return self.txn_successes + self.txn_failures
