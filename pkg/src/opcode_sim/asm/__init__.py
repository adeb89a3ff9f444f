"""Listing parser and instruction semantics."""

from opcode_sim.asm.parser import parse_program, serialize_program, load_program
from opcode_sim.asm.semantics import registers_read, registers_written, can_swap

__all__ = [
    "parse_program",
    "serialize_program",
    "load_program",
    "registers_read",
    "registers_written",
    "can_swap",
]
