"""Small lock-backed atomic primitives shared by the concurrent modules.

CPython's GIL makes single bytecode operations atomic, but read-modify-write
sequences (``x += 1``, compare-and-swap) are not. These helpers provide the
few atomic operations the DAG builder, scheduler, and validator rely on.
"""

from __future__ import annotations

import threading


class AtomicCounter:
    """Monotonic claim counter with fetch-and-increment semantics."""

    __slots__ = ("_value", "_lock")

    def __init__(self, start: int = 0) -> None:
        self._value = start
        self._lock = threading.Lock()

    def fetch_inc(self) -> int:
        with self._lock:
            value = self._value
            self._value = value + 1
            return value

    def dec(self) -> None:
        with self._lock:
            self._value -= 1

    def inc(self) -> int:
        with self._lock:
            self._value += 1
            return self._value

    @property
    def value(self) -> int:
        return self._value


class AtomicIntArray:
    """Fixed-size integer array with atomic add and compare-and-swap per slot.

    Slots are guarded by striped locks so concurrent updates to different
    indices rarely contend. Plain reads go through the GIL unlocked.
    """

    __slots__ = ("_values", "_locks")

    def __init__(self, size: int, *, stripes: int = 64) -> None:
        self._values = [0] * size
        self._locks = [threading.Lock() for _ in range(max(1, min(stripes, size or 1)))]

    def __len__(self) -> int:
        return len(self._values)

    def get(self, index: int) -> int:
        return self._values[index]

    def add(self, index: int, delta: int) -> int:
        with self._locks[index % len(self._locks)]:
            value = self._values[index] + delta
            self._values[index] = value
            return value

    def compare_and_swap(self, index: int, expected: int, new: int) -> bool:
        with self._locks[index % len(self._locks)]:
            if self._values[index] != expected:
                return False
            self._values[index] = new
            return True

    def snapshot(self) -> list[int]:
        return list(self._values)


class AtomicOnce:
    """Write-once cell: the first set wins, later sets are ignored."""

    __slots__ = ("_value", "_lock")

    def __init__(self) -> None:
        self._value = None
        self._lock = threading.Lock()

    def set_if_unset(self, value) -> bool:
        with self._lock:
            if self._value is not None:
                return False
            self._value = value
            return True

    @property
    def value(self):
        return self._value

    def is_set(self) -> bool:
        return self._value is not None
