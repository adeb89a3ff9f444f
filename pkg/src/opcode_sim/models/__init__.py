"""Assembly domain models."""

from opcode_sim.models.operand import Operand, OperandKind, REGISTERS, GENERAL_PURPOSE
from opcode_sim.models.instruction import Instruction
from opcode_sim.models.program import Label, Subroutine, Program

__all__ = [
    "Operand",
    "OperandKind",
    "REGISTERS",
    "GENERAL_PURPOSE",
    "Instruction",
    "Label",
    "Subroutine",
    "Program",
]
