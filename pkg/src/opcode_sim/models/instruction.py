"""Instruction model."""

import re
from dataclasses import dataclass, field

from opcode_sim.models.operand import Operand

MNEMONIC_PATTERN = re.compile(r"[a-z][a-z0-9_.]*")
MAX_OPERANDS = 3


def is_mnemonic(token: str) -> bool:
    """Check whether a token is a valid canonical (lowercase) mnemonic."""
    return MNEMONIC_PATTERN.fullmatch(token) is not None


@dataclass(frozen=True)
class Instruction:
    """A mnemonic with up to three operands."""

    mnemonic: str
    operands: tuple[Operand, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not is_mnemonic(self.mnemonic):
            raise ValueError(f"Invalid mnemonic: {self.mnemonic!r}")
        if len(self.operands) > MAX_OPERANDS:
            raise ValueError(f"{self.mnemonic} has {len(self.operands)} operands (max {MAX_OPERANDS})")
        # Accept lists from callers but store a tuple
        if not isinstance(self.operands, tuple):
            object.__setattr__(self, "operands", tuple(self.operands))

    def rename_registers(self, mapping: dict[str, str]) -> "Instruction":
        """Copy with every register occurrence renamed via `mapping`."""
        return Instruction(self.mnemonic, tuple(op.rename(mapping) for op in self.operands))

    def to_text(self) -> str:
        """Canonical listing text: single space after mnemonic, ', ' between operands."""
        if not self.operands:
            return self.mnemonic
        return f"{self.mnemonic} " + ", ".join(op.to_text() for op in self.operands)

    def __repr__(self) -> str:
        return f"Instruction({self.to_text()})"
