"""
Register, flag and memory effects of instructions.

Only the effects needed to decide whether two adjacent instructions can be
reordered are modelled. Sub-registers collapse to their 32-bit parent.
Mnemonics missing from the table are handled conservatively: every mentioned
register counts as read and written, and the instruction is never moved.
"""

from dataclasses import dataclass
from typing import Optional

from opcode_sim.models.instruction import Instruction
from opcode_sim.models.operand import OperandKind, parent_register


@dataclass(frozen=True)
class Effect:
    """Effect of a mnemonic on its operands and on implicit machine state."""

    dest_read: bool = True
    dest_written: bool = True
    sources_written: bool = False
    implicit_reads: frozenset[str] = frozenset()
    implicit_writes: frozenset[str] = frozenset()
    reads_flags: bool = False
    writes_flags: bool = False
    stack_read: bool = False
    stack_written: bool = False
    address_only: bool = False  # lea computes an address without touching memory
    control_transfer: bool = False


_ESP = frozenset({"esp"})

_MOVE = Effect(dest_read=False)
_ARITH = Effect(writes_flags=True)
_CARRY_ARITH = Effect(reads_flags=True, writes_flags=True)
_COMPARE = Effect(dest_written=False, writes_flags=True)
_JUMP = Effect(dest_written=False, control_transfer=True)
_COND_JUMP = Effect(dest_written=False, reads_flags=True, control_transfer=True)
_MUL_DIV = Effect(
    implicit_reads=frozenset({"eax", "edx"}),
    implicit_writes=frozenset({"eax", "edx"}),
    writes_flags=True,
)

SEMANTICS: dict[str, Effect] = {
    "mov": _MOVE,
    "movzx": _MOVE,
    "movsx": _MOVE,
    "lea": Effect(dest_read=False, address_only=True),
    "xchg": Effect(sources_written=True),
    "add": _ARITH,
    "sub": _ARITH,
    "and": _ARITH,
    "or": _ARITH,
    "xor": _ARITH,
    "shl": _ARITH,
    "sal": _ARITH,
    "shr": _ARITH,
    "sar": _ARITH,
    "rol": _ARITH,
    "ror": _ARITH,
    "inc": _ARITH,
    "dec": _ARITH,
    "neg": _ARITH,
    "not": Effect(),
    "adc": _CARRY_ARITH,
    "sbb": _CARRY_ARITH,
    "cmp": _COMPARE,
    "test": _COMPARE,
    "mul": _MUL_DIV,
    "imul": _MUL_DIV,
    "div": _MUL_DIV,
    "idiv": _MUL_DIV,
    "cdq": Effect(implicit_reads=frozenset({"eax"}), implicit_writes=frozenset({"edx"})),
    "nop": Effect(dest_read=False, dest_written=False),
    "push": Effect(
        dest_written=False, implicit_reads=_ESP, implicit_writes=_ESP, stack_written=True
    ),
    "pop": Effect(
        dest_read=False, implicit_reads=_ESP, implicit_writes=_ESP, stack_read=True
    ),
    "leave": Effect(
        implicit_reads=frozenset({"ebp"}),
        implicit_writes=frozenset({"esp", "ebp"}),
        stack_read=True,
    ),
    "call": Effect(
        dest_written=False,
        implicit_reads=_ESP,
        implicit_writes=frozenset({"esp", "eax", "ecx", "edx"}),
        writes_flags=True,
        stack_read=True,
        stack_written=True,
        control_transfer=True,
    ),
    "ret": Effect(
        dest_written=False, implicit_reads=_ESP, implicit_writes=_ESP,
        stack_read=True, control_transfer=True,
    ),
    "retn": Effect(
        dest_written=False, implicit_reads=_ESP, implicit_writes=_ESP,
        stack_read=True, control_transfer=True,
    ),
    "jmp": _JUMP,
    "jecxz": Effect(dest_written=False, implicit_reads=frozenset({"ecx"}), control_transfer=True),
    "loop": Effect(
        dest_written=False,
        implicit_reads=frozenset({"ecx"}),
        implicit_writes=frozenset({"ecx"}),
        control_transfer=True,
    ),
}

CONDITIONAL_JUMPS = (
    "ja", "jae", "jb", "jbe", "jc", "je", "jg", "jge", "jl", "jle",
    "jna", "jnae", "jnb", "jnbe", "jnc", "jne", "jng", "jnge", "jnl", "jnle",
    "jno", "jnp", "jns", "jnz", "jo", "jp", "jpe", "jpo", "js", "jz",
)
SEMANTICS.update({mnemonic: _COND_JUMP for mnemonic in CONDITIONAL_JUMPS})


def effect_of(instr: Instruction) -> Optional[Effect]:
    """Table entry for an instruction's mnemonic (None when unknown)."""
    return SEMANTICS.get(instr.mnemonic)


def mentioned_registers(instr: Instruction) -> frozenset[str]:
    """Parent registers of every register the instruction mentions."""
    return frozenset(parent_register(reg) for op in instr.operands for reg in op.registers)


def registers_read(instr: Instruction) -> frozenset[str]:
    """
    Registers whose value the instruction observes.

    Memory-operand base/index registers are always read. Unknown mnemonics
    report every mentioned register.
    """
    effect = effect_of(instr)
    if effect is None:
        return mentioned_registers(instr)

    read = set(effect.implicit_reads)
    for position, op in enumerate(instr.operands):
        if op.kind is OperandKind.MEMORY:
            read.update(parent_register(reg) for reg in op.registers)
        elif op.kind is OperandKind.REGISTER and (position > 0 or effect.dest_read):
            read.add(parent_register(op.register))  # type: ignore[arg-type]
    return frozenset(read)


def registers_written(instr: Instruction) -> frozenset[str]:
    """
    Registers whose value the instruction may change.

    Writes to a sub-register (al, ax, dh) report the parent register.
    """
    effect = effect_of(instr)
    if effect is None:
        return mentioned_registers(instr)

    written = set(effect.implicit_writes)
    for position, op in enumerate(instr.operands):
        if op.kind is not OperandKind.REGISTER:
            continue
        if (position == 0 and effect.dest_written) or (position > 0 and effect.sources_written):
            written.add(parent_register(op.register))  # type: ignore[arg-type]
    return frozenset(written)


def memory_access(instr: Instruction) -> tuple[bool, bool]:
    """(reads memory, writes memory) including implicit stack traffic."""
    effect = effect_of(instr)
    has_memory = any(op.kind is OperandKind.MEMORY for op in instr.operands)
    if effect is None:
        return has_memory, has_memory

    reads, writes = effect.stack_read, effect.stack_written
    if effect.address_only:
        return reads, writes
    for position, op in enumerate(instr.operands):
        if op.kind is not OperandKind.MEMORY:
            continue
        if position == 0:
            reads = reads or effect.dest_read
            writes = writes or effect.dest_written
        else:
            reads = True
            writes = writes or effect.sources_written
    return reads, writes


def is_control_transfer(instr: Instruction) -> bool:
    """Jumps, calls and returns."""
    effect = effect_of(instr)
    return effect is not None and effect.control_transfer


def is_movable(instr: Instruction) -> bool:
    """Whether permutation may move this instruction at all."""
    effect = effect_of(instr)
    return effect is not None and not effect.control_transfer


def can_swap(first: Instruction, second: Instruction) -> bool:
    """
    Check whether two adjacent instructions can be exchanged.

    Requires writes(first) ∩ (reads(second) ∪ writes(second)) = ∅ and
    writes(second) ∩ reads(first) = ∅, with the flags register and memory
    treated as two more locations. Control transfers and unknown mnemonics
    never move.
    """
    if not (is_movable(first) and is_movable(second)):
        return False

    reads_1, writes_1 = registers_read(first), registers_written(first)
    reads_2, writes_2 = registers_read(second), registers_written(second)
    if writes_1 & (reads_2 | writes_2) or writes_2 & reads_1:
        return False

    effect_1, effect_2 = SEMANTICS[first.mnemonic], SEMANTICS[second.mnemonic]
    if effect_1.writes_flags and (effect_2.reads_flags or effect_2.writes_flags):
        return False
    if effect_2.writes_flags and effect_1.reads_flags:
        return False

    mem_read_1, mem_write_1 = memory_access(first)
    mem_read_2, mem_write_2 = memory_access(second)
    if mem_write_1 and (mem_read_2 or mem_write_2):
        return False
    if mem_write_2 and mem_read_1:
        return False

    return True
