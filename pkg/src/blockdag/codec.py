"""Binary wire format for blocks, with or without an embedded shared DAG.

The shared DAG travels inside each transaction's dependency list (its
incoming edges), with the indegree array in a block trailer; outgoing
adjacency is rebuilt on the consuming side. All integers are little-endian
and fixed-width, variable fields are length-prefixed, and the whole message
ends in a CRC-32 so a corrupted block is always a parse error, never a
silently different block. Full byte layout: docs/wire-format.md.
"""

from __future__ import annotations

import os
import struct
import zlib

from .dag import DependencyDAG
from .model import Block, Transaction
from .families import FamilyOp

WIRE_VERSION = 1
_FLAG_SHARED_DAG = 0x01
DEFAULT_MAX_TXNS = 4096
_MIN_SIZE = 14  # version + flags + total_length + txn_count + checksum

_FAMILY_TAGS = {"wallet": 0, "intkey": 1, "voting": 2, "insurance": 3}
_FAMILY_NAMES = {tag: name for name, tag in _FAMILY_TAGS.items()}
_OPCODE_TAGS = {
    "wallet": {"create": 0, "deposit": 1, "withdraw": 2, "transfer": 3},
    "intkey": {"set": 0, "inc": 1, "dec": 2},
    "voting": {"create_party": 0, "add_voter": 1, "vote": 2},
    "insurance": {"create_record": 0, "update_record": 1, "read_record": 2},
}
_OPCODE_NAMES = {
    family: {tag: name for name, tag in table.items()}
    for family, table in _OPCODE_TAGS.items()
}

_ARG_INT = 0
_ARG_STR = 1
_ARG_PAIRS = 2


class BlockCodecError(Exception):
    """Base class for every block parse/serialize failure."""


class TruncatedBlockError(BlockCodecError):
    pass


class ChecksumMismatchError(BlockCodecError):
    pass


class MalformedBlockError(BlockCodecError):
    pass


class BlockTooLargeError(BlockCodecError):
    pass


def max_block_txns() -> int:
    """Block size cap; BLOCKDAG_MAX_TXNS overrides the default of 4096."""
    raw = os.environ.get("BLOCKDAG_MAX_TXNS")
    if raw is None:
        return DEFAULT_MAX_TXNS
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"BLOCKDAG_MAX_TXNS is not an integer: {raw!r}") from None


def attach_dag(block: Block, dag: DependencyDAG) -> Block:
    """New block carrying the DAG: per-transaction predecessor lists plus
    the indegree trailer."""
    if dag.txn_count != block.txn_count:
        raise ValueError("DAG does not match block")
    preds = dag.predecessor_lists()
    transactions = tuple(
        Transaction(
            index=txn.index,
            read_set=txn.read_set,
            write_set=txn.write_set,
            payload=txn.payload,
            declared_dependencies=tuple(preds[txn.index]),
        )
        for txn in block.transactions
    )
    return Block(
        transactions=transactions,
        shared_indegree=tuple(len(p) for p in preds),
    )


class _Writer:
    def __init__(self) -> None:
        self.buf = bytearray()

    def u8(self, v: int) -> None:
        self.buf.append(v)

    def u16(self, v: int) -> None:
        self.buf += struct.pack("<H", v)

    def u32(self, v: int) -> None:
        self.buf += struct.pack("<I", v)

    def u64(self, v: int) -> None:
        self.buf += struct.pack("<Q", v)

    def blob16(self, data: bytes) -> None:
        if len(data) > 0xFFFF:
            raise ValueError("field too long for u16 length prefix")
        self.u16(len(data))
        self.buf += data


class _Reader:
    def __init__(self, data: bytes, offset: int, end: int) -> None:
        self.data = data
        self.offset = offset
        self.end = end

    def _take(self, size: int) -> bytes:
        if self.offset + size > self.end:
            raise TruncatedBlockError(
                f"needed {size} bytes at offset {self.offset}, have {self.end - self.offset}"
            )
        piece = self.data[self.offset : self.offset + size]
        self.offset += size
        return piece

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def blob16(self) -> bytes:
        return self._take(self.u16())


def _write_arg(w: _Writer, arg) -> None:
    if isinstance(arg, bool):
        raise ValueError("boolean op arguments are not supported on the wire")
    if isinstance(arg, int):
        w.u8(_ARG_INT)
        w.u64(arg)
    elif isinstance(arg, str):
        w.u8(_ARG_STR)
        w.blob16(arg.encode())
    elif isinstance(arg, tuple):
        w.u8(_ARG_PAIRS)
        w.u16(len(arg))
        for key, value in arg:
            w.blob16(key.encode())
            w.blob16(value.encode())
    else:
        raise ValueError(f"unsupported op argument type: {type(arg).__name__}")


def _read_arg(r: _Reader):
    tag = r.u8()
    if tag == _ARG_INT:
        return r.u64()
    if tag == _ARG_STR:
        return r.blob16().decode()
    if tag == _ARG_PAIRS:
        count = r.u16()
        return tuple((r.blob16().decode(), r.blob16().decode()) for _ in range(count))
    raise MalformedBlockError(f"unknown argument tag {tag}")


def serialize_block(block: Block, dag: DependencyDAG | None = None) -> bytes:
    """Deterministic bytes for a block; same input always yields same output.

    When a DAG is given it is embedded (replacing whatever shared-DAG fields
    the block already has); otherwise the block's own fields are written
    as-is, shared section included only if present.
    """
    cap = max_block_txns()
    if block.txn_count > cap:
        raise BlockTooLargeError(f"block has {block.txn_count} txns, cap is {cap}")
    if dag is not None:
        block = attach_dag(block, dag)
    has_dag = block.has_shared_dag
    w = _Writer()
    w.u8(WIRE_VERSION)
    w.u8(_FLAG_SHARED_DAG if has_dag else 0)
    w.u32(0)  # total length, patched below
    w.u32(block.txn_count)
    for txn in block.transactions:
        op: FamilyOp = txn.payload
        try:
            w.u8(_FAMILY_TAGS[op.family])
            w.u8(_OPCODE_TAGS[op.family][op.opcode])
        except KeyError:
            raise ValueError(f"op {op.family}/{op.opcode} has no wire tag") from None
        w.u8(len(op.args))
        for arg in op.args:
            _write_arg(w, arg)
        for address_set in (txn.read_set, txn.write_set):
            w.u16(len(address_set))
            for address in sorted(address_set):
                w.blob16(address)
        if has_dag:
            deps = txn.declared_dependencies
            w.u32(len(deps))
            for dep in deps:
                w.u32(dep)
    if has_dag:
        for entry in block.shared_indegree:
            w.u32(entry)
    struct.pack_into("<I", w.buf, 2, len(w.buf) + 4)
    w.u32(zlib.crc32(w.buf))
    return bytes(w.buf)


def parse_block(data: bytes) -> Block:
    """Parse wire bytes back into a Block, or raise a descriptive error."""
    if len(data) < _MIN_SIZE:
        raise TruncatedBlockError(f"{len(data)} bytes is below the minimum of {_MIN_SIZE}")
    declared_total = struct.unpack_from("<I", data, 2)[0]
    if len(data) < declared_total:
        raise TruncatedBlockError(
            f"declared length {declared_total}, got {len(data)} bytes"
        )
    if len(data) > declared_total:
        raise MalformedBlockError("trailing bytes after declared length")
    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise ChecksumMismatchError("checksum mismatch")
    version = data[0]
    if version != WIRE_VERSION:
        raise MalformedBlockError(f"unsupported version {version}")
    flags = data[1]
    if flags & ~_FLAG_SHARED_DAG:
        raise MalformedBlockError(f"unknown flag bits 0x{flags:02x}")
    has_dag = bool(flags & _FLAG_SHARED_DAG)
    r = _Reader(data, 6, len(data) - 4)
    txn_count = r.u32()
    cap = max_block_txns()
    if txn_count > cap:
        raise BlockTooLargeError(f"block declares {txn_count} txns, cap is {cap}")
    transactions = []
    for index in range(txn_count):
        family_tag = r.u8()
        opcode_tag = r.u8()
        family = _FAMILY_NAMES.get(family_tag)
        if family is None:
            raise MalformedBlockError(f"unknown family tag {family_tag}")
        opcode = _OPCODE_NAMES[family].get(opcode_tag)
        if opcode is None:
            raise MalformedBlockError(f"unknown {family} opcode tag {opcode_tag}")
        argc = r.u8()
        args = tuple(_read_arg(r) for _ in range(argc))
        sets = []
        for _ in range(2):
            count = r.u16()
            sets.append(frozenset(r.blob16() for _ in range(count)))
        deps = None
        if has_dag:
            dep_count = r.u32()
            deps = tuple(r.u32() for _ in range(dep_count))
            for dep in deps:
                if dep >= index:
                    raise MalformedBlockError(
                        f"transaction {index} declares dependency {dep} not below it"
                    )
        transactions.append(
            Transaction(
                index=index,
                read_set=sets[0],
                write_set=sets[1],
                payload=FamilyOp(family, opcode, args),
                declared_dependencies=deps,
            )
        )
    shared_indegree = None
    if has_dag:
        shared_indegree = tuple(r.u32() for _ in range(txn_count))
        for index, entry in enumerate(shared_indegree):
            if entry >= max(txn_count, 1):
                raise MalformedBlockError(
                    f"indegree {entry} for transaction {index} out of range"
                )
    if r.offset != r.end:
        raise MalformedBlockError(f"{r.end - r.offset} undeclared bytes in body")
    return Block(transactions=tuple(transactions), shared_indegree=shared_indegree)
