"""Operand model and the x86 register table."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional


# name -> (parent register, role)
# role is one of "full" (32-bit), "word" (16-bit), "high" (ah..dh), "low" (al..dl)
REGISTERS: dict[str, tuple[str, str]] = {
    "eax": ("eax", "full"), "ax": ("eax", "word"), "ah": ("eax", "high"), "al": ("eax", "low"),
    "ebx": ("ebx", "full"), "bx": ("ebx", "word"), "bh": ("ebx", "high"), "bl": ("ebx", "low"),
    "ecx": ("ecx", "full"), "cx": ("ecx", "word"), "ch": ("ecx", "high"), "cl": ("ecx", "low"),
    "edx": ("edx", "full"), "dx": ("edx", "word"), "dh": ("edx", "high"), "dl": ("edx", "low"),
    "esi": ("esi", "full"), "si": ("esi", "word"),
    "edi": ("edi", "full"), "di": ("edi", "word"),
    "ebp": ("ebp", "full"), "bp": ("ebp", "word"),
    "esp": ("esp", "full"), "sp": ("esp", "word"),
}

GENERAL_PURPOSE = ("eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp")

# (parent, role) -> name
_BY_ROLE: dict[tuple[str, str], str] = {entry: name for name, entry in REGISTERS.items()}

MEMORY_SIZES = ("byte", "word", "dword")
SCALES = (1, 2, 4, 8)


def is_register(name: str) -> bool:
    """Check whether a (lowercase) token names a register."""
    return name in REGISTERS


def parent_register(name: str) -> str:
    """Full 32-bit register that a register name aliases."""
    return REGISTERS[name][0]


def register_role(name: str) -> str:
    """Role of a register name within its parent (full/word/high/low)."""
    return REGISTERS[name][1]


def alias_of(parent: str, role: str) -> Optional[str]:
    """Register name with the given role inside `parent`, if the machine has one."""
    return _BY_ROLE.get((parent, role))


def format_int(value: int) -> str:
    """Canonical text for an integer: small values decimal, the rest 0x hex."""
    if -10 < value < 10:
        return str(value)
    sign = "-" if value < 0 else ""
    return f"{sign}0x{abs(value):x}"


class OperandKind(Enum):
    """Kinds of instruction operands."""

    REGISTER = "register"
    IMMEDIATE = "immediate"
    MEMORY = "memory"
    LABEL = "label"


@dataclass(frozen=True)
class Operand:
    """
    One instruction operand.

    Only the fields belonging to `kind` are set:
    register -> register; immediate -> value;
    memory -> base, index, scale, displacement, size; label -> target.
    """

    kind: OperandKind
    register: Optional[str] = None
    value: Optional[int] = None
    base: Optional[str] = None
    index: Optional[str] = None
    scale: Optional[int] = None
    displacement: Optional[int] = None
    size: Optional[str] = None
    target: Optional[str] = None

    def __post_init__(self) -> None:
        populated = {
            name
            for name in ("register", "value", "base", "index", "scale", "displacement", "size", "target")
            if getattr(self, name) is not None
        }
        if self.kind is OperandKind.REGISTER:
            allowed, required = {"register"}, {"register"}
            if self.register is not None and not is_register(self.register):
                raise ValueError(f"Unknown register: {self.register}")
        elif self.kind is OperandKind.IMMEDIATE:
            allowed, required = {"value"}, {"value"}
        elif self.kind is OperandKind.MEMORY:
            allowed = {"base", "index", "scale", "displacement", "size"}
            required = {"base", "displacement"}
            for reg in (self.base, self.index):
                if reg is not None and not is_register(reg):
                    raise ValueError(f"Unknown register: {reg}")
            if (self.index is None) != (self.scale is None):
                raise ValueError("Memory index and scale must be given together")
            if self.scale is not None and self.scale not in SCALES:
                raise ValueError(f"Invalid scale: {self.scale}")
            if self.size is not None and self.size not in MEMORY_SIZES:
                raise ValueError(f"Invalid memory size: {self.size}")
        else:
            allowed, required = {"target"}, {"target"}

        if not required <= populated or not populated <= allowed:
            raise ValueError(f"Fields {sorted(populated)} do not fit a {self.kind.value} operand")

    @classmethod
    def reg(cls, name: str) -> "Operand":
        return cls(OperandKind.REGISTER, register=name)

    @classmethod
    def imm(cls, value: int) -> "Operand":
        return cls(OperandKind.IMMEDIATE, value=value)

    @classmethod
    def mem(
        cls,
        base: str,
        index: Optional[str] = None,
        scale: Optional[int] = None,
        displacement: int = 0,
        size: Optional[str] = None,
    ) -> "Operand":
        if index is not None and scale is None:
            scale = 1
        return cls(
            OperandKind.MEMORY,
            base=base,
            index=index,
            scale=scale,
            displacement=displacement,
            size=size,
        )

    @classmethod
    def label(cls, target: str) -> "Operand":
        return cls(OperandKind.LABEL, target=target)

    @property
    def registers(self) -> tuple[str, ...]:
        """Register names mentioned by this operand, in textual order."""
        if self.kind is OperandKind.REGISTER:
            return (self.register,)  # type: ignore[return-value]
        if self.kind is OperandKind.MEMORY:
            return tuple(r for r in (self.base, self.index) if r is not None)
        return ()

    def rename(self, mapping: dict[str, str]) -> "Operand":
        """Copy with register names replaced via `mapping` (names not in it stay)."""
        if self.kind is OperandKind.REGISTER:
            return Operand.reg(mapping.get(self.register, self.register))  # type: ignore[arg-type]
        if self.kind is OperandKind.MEMORY:
            return Operand(
                OperandKind.MEMORY,
                base=mapping.get(self.base, self.base),  # type: ignore[arg-type]
                index=mapping.get(self.index, self.index) if self.index else None,
                scale=self.scale,
                displacement=self.displacement,
                size=self.size,
            )
        return self

    def to_text(self) -> str:
        """Canonical listing text for this operand."""
        if self.kind is OperandKind.REGISTER:
            return self.register  # type: ignore[return-value]
        if self.kind is OperandKind.IMMEDIATE:
            return format_int(self.value)  # type: ignore[arg-type]
        if self.kind is OperandKind.LABEL:
            return self.target  # type: ignore[return-value]

        address = self.base or ""
        if self.index is not None:
            address += f"+{self.index}"
            if self.scale != 1:
                address += f"*{self.scale}"
        if self.displacement:
            text = format_int(self.displacement)
            address += text if text.startswith("-") else f"+{text}"
        prefix = f"{self.size} ptr " if self.size else ""
        return f"{prefix}[{address}]"

    def __repr__(self) -> str:
        return f"Operand({self.to_text()})"
