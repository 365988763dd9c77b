"""The four smart-contract workloads and their deterministic processors.

Each op factory fixes the declared read/write sets at build time; the
processors never touch an address outside those sets. Logical failures
(overdraft, double vote, missing key) return False and leave state
untouched — they are recorded, not raised, and never block successors.

The voting family deliberately declares coarse access sets: every op reads
and writes the two global registry addresses, so any two voting
transactions in a block conflict. That pathology is intentional and is
exercised by the benchmark suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .model import ABSENT, Address, Block, StateStore, Transaction

WALLET = "wallet"
INTKEY = "intkey"
VOTING = "voting"
INSURANCE = "insurance"
FAMILIES = (WALLET, INTKEY, VOTING, INSURANCE)

U64_MAX = 2**64 - 1

VOTING_PARTIES_ADDR: Address = b"voting/parties"
VOTING_VOTERS_ADDR: Address = b"voting/voters"


@dataclass(frozen=True)
class FamilyOp:
    """Family tag plus opcode and its (hashable) arguments."""

    family: str
    opcode: str
    args: tuple


def wallet_addr(account: str) -> Address:
    return b"wallet/" + account.encode()


def intkey_addr(key: str) -> Address:
    return b"intkey/" + key.encode()


def insurance_addr(record_id: str) -> Address:
    return b"insurance/" + record_id.encode()


def _check_amount(amount: int) -> int:
    if not isinstance(amount, int) or amount < 0 or amount > U64_MAX:
        raise ValueError(f"amount out of range: {amount!r}")
    return amount


def wallet_create(account: str) -> FamilyOp:
    return FamilyOp(WALLET, "create", (account,))


def wallet_deposit(account: str, amount: int) -> FamilyOp:
    return FamilyOp(WALLET, "deposit", (account, _check_amount(amount)))


def wallet_withdraw(account: str, amount: int) -> FamilyOp:
    return FamilyOp(WALLET, "withdraw", (account, _check_amount(amount)))


def wallet_transfer(src: str, dst: str, amount: int) -> FamilyOp:
    return FamilyOp(WALLET, "transfer", (src, dst, _check_amount(amount)))


def intkey_set(key: str, value: int) -> FamilyOp:
    return FamilyOp(INTKEY, "set", (key, _check_amount(value)))


def intkey_inc(key: str, delta: int) -> FamilyOp:
    return FamilyOp(INTKEY, "inc", (key, _check_amount(delta)))


def intkey_dec(key: str, delta: int) -> FamilyOp:
    return FamilyOp(INTKEY, "dec", (key, _check_amount(delta)))


def voting_create_party(party: str) -> FamilyOp:
    return FamilyOp(VOTING, "create_party", (party,))


def voting_add_voter(voter: str) -> FamilyOp:
    return FamilyOp(VOTING, "add_voter", (voter,))


def voting_vote(voter: str, party: str) -> FamilyOp:
    return FamilyOp(VOTING, "vote", (voter, party))


def insurance_create(record_id: str, fields: Mapping[str, str]) -> FamilyOp:
    return FamilyOp(INSURANCE, "create_record", (record_id, tuple(sorted(fields.items()))))


def insurance_update(record_id: str, fields: Mapping[str, str]) -> FamilyOp:
    return FamilyOp(INSURANCE, "update_record", (record_id, tuple(sorted(fields.items()))))


def insurance_read(record_id: str) -> FamilyOp:
    return FamilyOp(INSURANCE, "read_record", (record_id,))


def declared_sets(op: FamilyOp) -> tuple[frozenset[Address], frozenset[Address]]:
    """Read and write address sets implied by an op, fixed at build time."""
    if op.family == WALLET:
        if op.opcode == "transfer":
            addrs = frozenset({wallet_addr(op.args[0]), wallet_addr(op.args[1])})
        else:
            addrs = frozenset({wallet_addr(op.args[0])})
        return addrs, addrs
    if op.family == INTKEY:
        addrs = frozenset({intkey_addr(op.args[0])})
        return addrs, addrs
    if op.family == VOTING:
        # Coarse by design: the whole voter and party registries.
        addrs = frozenset({VOTING_VOTERS_ADDR, VOTING_PARTIES_ADDR})
        return addrs, addrs
    if op.family == INSURANCE:
        addr = frozenset({insurance_addr(op.args[0])})
        if op.opcode == "read_record":
            return addr, frozenset()
        return addr, addr
    raise ValueError(f"unknown family: {op.family!r}")


def make_transaction(
    index: int, op: FamilyOp, dependencies: tuple[int, ...] | None = None
) -> Transaction:
    read_set, write_set = declared_sets(op)
    return Transaction(
        index=index,
        read_set=read_set,
        write_set=write_set,
        payload=op,
        declared_dependencies=dependencies,
    )


def block_from_ops(ops) -> Block:
    """Assemble a block, assigning indices by position."""
    return Block(tuple(make_transaction(i, op) for i, op in enumerate(ops)))


def _apply_wallet(op: FamilyOp, store: StateStore) -> bool:
    opcode = op.opcode
    if opcode == "create":
        addr = wallet_addr(op.args[0])
        if store.get(addr) is not ABSENT:
            return False
        store.set(addr, 0)
        return True
    if opcode == "deposit":
        addr = wallet_addr(op.args[0])
        balance = store.get(addr)
        if balance is ABSENT:
            balance = 0
        new_balance = balance + op.args[1]
        if new_balance > U64_MAX:
            return False
        store.set(addr, new_balance)
        return True
    if opcode == "withdraw":
        addr = wallet_addr(op.args[0])
        balance = store.get(addr)
        if balance is ABSENT or balance < op.args[1]:
            return False
        store.set(addr, balance - op.args[1])
        return True
    if opcode == "transfer":
        src = wallet_addr(op.args[0])
        dst = wallet_addr(op.args[1])
        amount = op.args[2]
        src_balance = store.get(src)
        if src_balance is ABSENT or src_balance < amount:
            return False
        if src == dst:
            return True  # self-transfer moves nothing

        dst_balance = store.get(dst)
        if dst_balance is ABSENT:
            dst_balance = 0
        if dst_balance + amount > U64_MAX:
            return False
        store.set(src, src_balance - amount)
        store.set(dst, dst_balance + amount)
        return True
    raise ValueError(f"unknown wallet opcode: {opcode!r}")


def _apply_intkey(op: FamilyOp, store: StateStore) -> bool:
    addr = intkey_addr(op.args[0])
    value = store.get(addr)
    if op.opcode == "set":
        # Set-if-absent: observing absence is the point of the sentinel.
        if value is not ABSENT:
            return False
        store.set(addr, op.args[1])
        return True
    if op.opcode == "inc":
        if value is ABSENT or value + op.args[1] > U64_MAX:
            return False
        store.set(addr, value + op.args[1])
        return True
    if op.opcode == "dec":
        if value is ABSENT or value < op.args[1]:
            return False
        store.set(addr, value - op.args[1])
        return True
    raise ValueError(f"unknown intkey opcode: {op.opcode!r}")


def _apply_voting(op: FamilyOp, store: StateStore) -> bool:
    parties = store.get(VOTING_PARTIES_ADDR)
    voters = store.get(VOTING_VOTERS_ADDR)
    parties = {} if parties is ABSENT else parties
    voters = {} if voters is ABSENT else voters
    if op.opcode == "create_party":
        party = op.args[0]
        if party in parties:
            return False
        updated = dict(parties)
        updated[party] = 0
        store.set(VOTING_PARTIES_ADDR, updated)
        return True
    if op.opcode == "add_voter":
        voter = op.args[0]
        if voter in voters:
            return False
        updated = dict(voters)
        updated[voter] = None
        store.set(VOTING_VOTERS_ADDR, updated)
        return True
    if op.opcode == "vote":
        voter, party = op.args
        if voter not in voters or party not in parties:
            return False
        if voters[voter] is not None:
            return False
        new_voters = dict(voters)
        new_voters[voter] = party
        new_parties = dict(parties)
        new_parties[party] += 1
        store.set(VOTING_VOTERS_ADDR, new_voters)
        store.set(VOTING_PARTIES_ADDR, new_parties)
        return True
    raise ValueError(f"unknown voting opcode: {op.opcode!r}")


def _apply_insurance(op: FamilyOp, store: StateStore) -> bool:
    addr = insurance_addr(op.args[0])
    record = store.get(addr)
    if op.opcode == "create_record":
        if record is not ABSENT:
            return False
        store.set(addr, dict(op.args[1]))
        return True
    if op.opcode == "update_record":
        if record is ABSENT:
            return False
        updated = dict(record)
        updated.update(op.args[1])
        store.set(addr, updated)
        return True
    if op.opcode == "read_record":
        return record is not ABSENT
    raise ValueError(f"unknown insurance opcode: {op.opcode!r}")


_APPLIERS = {
    WALLET: _apply_wallet,
    INTKEY: _apply_intkey,
    VOTING: _apply_voting,
    INSURANCE: _apply_insurance,
}


def apply_op(op: FamilyOp, store: StateStore) -> bool:
    """Run one op against the store; False means logical failure, no change."""
    return _APPLIERS[op.family](op, store)


def apply_transaction(txn: Transaction, store: StateStore) -> bool:
    return apply_op(txn.payload, store)
