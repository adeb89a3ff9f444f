"""Synthetic program generator and a plain reference implementation of the distance."""

import random
from collections import Counter
from typing import Optional

from opcode_sim.models.instruction import Instruction
from opcode_sim.models.operand import Operand
from opcode_sim.models.program import Program, Subroutine

MNEMONIC_POOL = ("mov", "push", "pop", "add", "sub", "xor", "cmp", "lea", "inc", "dec", "and", "or")
REGISTER_POOL = ("eax", "ebx", "ecx", "edx", "esi", "edi")


def random_instruction(rng: random.Random, mnemonic: str) -> Instruction:
    """A well-formed instruction with register, immediate or memory operands."""
    dest = Operand.reg(rng.choice(REGISTER_POOL))
    if mnemonic in ("push", "pop", "inc", "dec"):
        return Instruction(mnemonic, (dest,))
    if mnemonic == "lea":
        return Instruction(mnemonic, (dest, Operand.mem(rng.choice(REGISTER_POOL), displacement=rng.randrange(64))))
    roll = rng.random()
    if roll < 0.4:
        source = Operand.reg(rng.choice(REGISTER_POOL))
    elif roll < 0.8:
        source = Operand.imm(rng.randrange(-300, 300))
    else:
        source = Operand.mem(rng.choice(REGISTER_POOL), displacement=4 * rng.randrange(8))
    return Instruction(mnemonic, (dest, source))


def random_program(
    rng: random.Random,
    program_id: str,
    max_subroutines: int = 4,
    max_mnemonics: int = 6,
    max_body: int = 20,
    pool: Optional[tuple[str, ...]] = None,
) -> Program:
    """Random program with 1..max_subroutines non-empty subroutines."""
    mnemonics = rng.sample(pool or MNEMONIC_POOL, max_mnemonics)
    subroutines = []
    for i in range(rng.randint(1, max_subroutines)):
        body = tuple(random_instruction(rng, rng.choice(mnemonics)) for _ in range(rng.randint(1, max_body)))
        subroutines.append(Subroutine(f"sub_{i}", body))
    return Program(program_id, tuple(subroutines))


# Reference implementation: dicts and loops only


def reference_histograms(program: Program) -> list[dict[str, float]]:
    result = []
    for sub in program.subroutines:
        if not sub.body:
            continue
        counts = Counter(instr.mnemonic for instr in sub.body)
        total = sum(counts.values())
        result.append({m: c / total for m, c in counts.items()})
    return result


def reference_histogram_distance(x: dict[str, float], y: dict[str, float], r: float = 2.0) -> float:
    total = 0.0
    for mnemonic in set(x) | set(y):
        total += abs(x.get(mnemonic, 0.0) - y.get(mnemonic, 0.0)) ** r
    return total


def reference_directed(p1: Program, p2: Program, r: float = 2.0) -> float:
    h1, h2 = reference_histograms(p1), reference_histograms(p2)
    minima = [min(reference_histogram_distance(x, y, r) for y in h2) for x in h1]
    return sum(minima) / len(minima)


def reference_distance(p1: Program, p2: Program, r: float = 2.0) -> float:
    return (reference_directed(p1, p2, r) + reference_directed(p2, p1, r)) / 2
