"""
Parse `.oasm` assembly listings into programs.

Listing format:
    ; comment to end of line
    proc <name>
    <label>:
        <mnemonic> [<op1>[, <op2>[, <op3>]]]
    endp

Operands are registers, immediates (decimal, 0x-hex, or hex with a trailing
`h` that starts with a digit), labels, or memory references of the forms
`[reg]`, `[reg+disp]`, `[reg+reg*scale+disp]` with an optional
`byte|word|dword ptr` prefix.
"""

import re
from pathlib import Path
from typing import Optional

from opcode_sim.errors import (
    DuplicateSubroutine,
    EmptyListing,
    ListingSyntaxError,
    OrphanInstruction,
)
from opcode_sim.models.instruction import MAX_OPERANDS, Instruction
from opcode_sim.models.operand import MEMORY_SIZES, SCALES, Operand, is_register
from opcode_sim.models.program import Label, Program, Subroutine

LISTING_SUFFIX = ".oasm"

_PROC = re.compile(r"proc\s+(?P<name>\S+)", re.IGNORECASE)
_ENDP = re.compile(r"endp", re.IGNORECASE)
_LABEL = re.compile(r"(?P<name>[A-Za-z_.$@?][\w.$@?]*):")
_NAME = re.compile(r"[A-Za-z_.$@?][\w.$@?]*")
_MNEMONIC = re.compile(r"[A-Za-z][A-Za-z0-9_.]*")
_SIZE_PREFIX = re.compile(r"(?P<size>[a-z]+)\s+ptr\s+(?P<rest>\[.*)", re.IGNORECASE)
_DECIMAL = re.compile(r"-?[0-9]+")
_HEX_PREFIX = re.compile(r"-?0x[0-9a-f]+")
_HEX_SUFFIX = re.compile(r"-?[0-9][0-9a-f]*h")
_TERM = re.compile(r"([+-]?)([^+-]+)")


class _Block:
    """Subroutine under construction."""

    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.body: list[Instruction] = []
        self.labels: list[Label] = []

    def build(self) -> Subroutine:
        return Subroutine(name=self.name, body=tuple(self.body), labels=tuple(self.labels))


def parse_int(token: str) -> Optional[int]:
    """Parse an immediate token; returns None if it is not a number."""
    text = token.lower()
    if _HEX_PREFIX.fullmatch(text):
        return int(text, 16)
    if _HEX_SUFFIX.fullmatch(text):
        return int(text[:-1], 16)
    if _DECIMAL.fullmatch(text):
        return int(text, 10)
    return None


def _parse_memory(text: str, size: Optional[str], line: int) -> Operand:
    """Parse the inside of a `[...]` reference."""
    inner = re.sub(r"\s+", "", text[1:-1]).lower()
    if not inner:
        raise ListingSyntaxError(line, "empty memory reference")

    base: Optional[str] = None
    index: Optional[str] = None
    scale: Optional[int] = None
    displacement: Optional[int] = None

    consumed = "".join(sign + body for sign, body in _TERM.findall(inner))
    if consumed != inner:
        raise ListingSyntaxError(line, f"malformed memory reference [{inner}]")

    for sign, term in _TERM.findall(inner):
        if "*" in term:
            reg, _, factor = term.partition("*")
            factor_value = parse_int(factor)
            if sign == "-" or not is_register(reg) or factor_value not in SCALES:
                raise ListingSyntaxError(line, f"bad scaled index {term!r}")
            if index is not None:
                raise ListingSyntaxError(line, "memory reference has two index registers")
            index, scale = reg, factor_value
        elif is_register(term):
            if sign == "-":
                raise ListingSyntaxError(line, f"register {term} cannot be subtracted")
            if base is None:
                base = term
            elif index is None:
                index, scale = term, 1
            else:
                raise ListingSyntaxError(line, "memory reference has too many registers")
        else:
            value = parse_int(term)
            if value is None:
                raise ListingSyntaxError(line, f"bad displacement {term!r}")
            if displacement is not None:
                raise ListingSyntaxError(line, "memory reference has two displacements")
            displacement = -value if sign == "-" else value

    if base is None:
        raise ListingSyntaxError(line, f"memory reference [{inner}] has no base register")
    return Operand.mem(base, index, scale, displacement or 0, size)


def parse_operand(text: str, line: int = 0) -> Operand:
    """Parse a single operand token."""
    token = text.strip()
    if not token:
        raise ListingSyntaxError(line, "empty operand")

    sized = _SIZE_PREFIX.fullmatch(token)
    if sized:
        size = sized.group("size").lower()
        if size not in MEMORY_SIZES:
            raise ListingSyntaxError(line, f"unknown operand size {size!r}")
        token = sized.group("rest").strip()
        if not token.endswith("]"):
            raise ListingSyntaxError(line, f"unterminated memory reference {token!r}")
        return _parse_memory(token, size, line)

    if token.startswith("["):
        if not token.endswith("]"):
            raise ListingSyntaxError(line, f"unterminated memory reference {token!r}")
        return _parse_memory(token, None, line)

    lowered = token.lower()
    if is_register(lowered):
        return Operand.reg(lowered)

    value = parse_int(token)
    if value is not None:
        return Operand.imm(value)

    if _NAME.fullmatch(token):
        return Operand.label(token)

    raise ListingSyntaxError(line, f"unrecognised operand {token!r}")


def _split_operands(text: str, line: int) -> list[str]:
    """Split an operand list on commas outside brackets."""
    parts: list[str] = []
    depth = 0
    current = ""
    for char in text:
        if char == "[":
            depth += 1
        elif char == "]":
            depth -= 1
            if depth < 0:
                raise ListingSyntaxError(line, "unbalanced ']'")
        if char == "," and depth == 0:
            parts.append(current)
            current = ""
        else:
            current += char
    if depth != 0:
        raise ListingSyntaxError(line, "unbalanced '['")
    parts.append(current)
    return parts


def parse_instruction(text: str, line: int = 0) -> Instruction:
    """Parse one instruction statement (no label, no comment)."""
    match = _MNEMONIC.match(text)
    if not match:
        raise ListingSyntaxError(line, f"expected a mnemonic, got {text!r}")

    mnemonic = match.group(0).lower()
    rest = text[match.end():]
    if rest and not (rest[0].isspace() or rest[0] == "["):
        raise ListingSyntaxError(line, f"unexpected {rest[0]!r} after mnemonic {mnemonic}")

    rest = rest.strip()
    operands: list[Operand] = []
    if rest:
        pieces = _split_operands(rest, line)
        if len(pieces) > MAX_OPERANDS:
            raise ListingSyntaxError(line, f"{mnemonic} has {len(pieces)} operands (max {MAX_OPERANDS})")
        operands = [parse_operand(piece, line) for piece in pieces]

    return Instruction(mnemonic, tuple(operands))


def _strip_comment(raw: str) -> str:
    return raw.split(";", 1)[0].strip()


def parse_program(text: str, id: str, source: Optional[str] = None) -> Program:
    """
    Parse a listing into a Program.

    Args:
        text: Listing text
        id: Program id (usually the file stem)
        source: Optional file name used in error messages

    Returns:
        Program whose subroutines appear in source order

    Raises:
        ListingSyntaxError: malformed line
        DuplicateSubroutine: repeated proc name
        OrphanInstruction: instruction outside any proc/endp block
        EmptyListing: no proc blocks at all
    """
    subroutines: list[Subroutine] = []
    seen: set[str] = set()
    block: Optional[_Block] = None

    for number, raw in enumerate(text.split("\n"), 1):
        statement = _strip_comment(raw.rstrip("\r"))
        if not statement:
            continue

        proc = _PROC.fullmatch(statement)
        if proc:
            if block is not None:
                raise ListingSyntaxError(number, f"nested proc inside {block.name}", source)
            name = proc.group("name")
            if not _NAME.fullmatch(name):
                raise ListingSyntaxError(number, f"invalid subroutine name {name!r}", source)
            if name in seen:
                raise DuplicateSubroutine(number, f"subroutine {name} already defined", source)
            seen.add(name)
            block = _Block(name, number)
            continue

        if _ENDP.fullmatch(statement):
            if block is None:
                raise ListingSyntaxError(number, "endp without matching proc", source)
            subroutines.append(block.build())
            block = None
            continue

        label = _LABEL.fullmatch(statement)
        if label:
            if block is None:
                raise ListingSyntaxError(number, "label outside any proc", source)
            name = label.group("name")
            if any(existing.name == name for existing in block.labels):
                raise ListingSyntaxError(number, f"label {name} defined twice", source)
            block.labels.append(Label(name, len(block.body)))
            continue

        if block is None:
            raise OrphanInstruction(number, f"instruction outside proc: {statement!r}", source)
        try:
            block.body.append(parse_instruction(statement, number))
        except ListingSyntaxError as exc:
            raise ListingSyntaxError(exc.line, exc.reason, source) from None

    if block is not None:
        raise ListingSyntaxError(block.line, f"proc {block.name} is never closed", source)
    if not subroutines:
        raise EmptyListing(f"{source or id}: listing contains no proc blocks")

    return Program(id=id, subroutines=tuple(subroutines))


def serialize_program(program: Program) -> str:
    """Render a Program back to canonical listing text (byte-stable)."""
    lines: list[str] = []
    for i, sub in enumerate(program.subroutines):
        if i:
            lines.append("")
        lines.append(f"proc {sub.name}")
        for position, instruction in enumerate(sub.body):
            lines.extend(f"{label.name}:" for label in sub.labels_at(position))
            lines.append(f"    {instruction.to_text()}")
        lines.extend(f"{label.name}:" for label in sub.labels_at(len(sub.body)))
        lines.append("endp")
    return "\n".join(lines) + "\n"


def load_program(path: Path) -> Program:
    """
    Load a `.oasm` file; the program id is the file stem.

    Raises:
        ListingSyntaxError: the file is not valid UTF-8 (reported at the
            line holding the first bad byte)
    """
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw.count(b"\n", 0, exc.start) + 1
        raise ListingSyntaxError(line, f"invalid UTF-8 byte 0x{raw[exc.start]:02x}", str(path)) from None
    return parse_program(text, id=path.stem, source=str(path))
