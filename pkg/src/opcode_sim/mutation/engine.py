"""
Deterministic metamorphic mutation engine.

Every operation draws its randomness from `random.Random(seed)` (MT19937
seeded with the integer seed), using only `random()`, `randrange()`,
`choice()` and `shuffle()`, so equal (program, config) pairs produce equal
outputs.
"""

import hashlib
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence

from opcode_sim.asm.parser import serialize_program
from opcode_sim.asm.semantics import can_swap
from opcode_sim.errors import EmptyRulebook, InvalidPermutation
from opcode_sim.models.instruction import Instruction
from opcode_sim.models.operand import GENERAL_PURPOSE, REGISTERS, alias_of, parent_register, register_role
from opcode_sim.models.program import Label, Program, Subroutine
from opcode_sim.mutation.rules import InstructionTemplate, Rulebook, default_rulebook

logger = logging.getLogger(__name__)

SEED_MODULUS = 2**64

# Registers that garbage code and random register exchange may touch
SCRATCH_REGISTERS = ("eax", "ebx", "ecx", "edx", "esi", "edi")
BYTE_ADDRESSABLE = ("eax", "ebx", "ecx", "edx")

# Single dead instructions and undo pairs
GARBAGE_FORMS: tuple[tuple[InstructionTemplate, ...], ...] = tuple(
    tuple(InstructionTemplate.parse(text) for text in form)
    for form in (
        ["add {r}, 0"],
        ["mov {r}, {r}"],
        ["or {r}, 0"],
        ["and {r}, -1"],
        ["push {r}", "pop {r}"],
        ["inc {r}", "sub {r}, 1"],
    )
)

NOP = Instruction("nop")


class Technique(Enum):
    """Obfuscation techniques."""

    GARBAGE = "garbage"
    GARBAGE_NOP = "garbage_nop"
    REGSWAP = "regswap"
    SUBSTITUTE = "substitute"
    PERMUTE = "permute"
    TRANSPOSE_MODULES = "transpose_modules"


HISTOGRAM_PRESERVING = frozenset({Technique.REGSWAP, Technique.PERMUTE, Technique.TRANSPOSE_MODULES})


@dataclass(frozen=True)
class MutationConfig:
    """One mutation step."""

    technique: Technique
    seed: int = 0
    density: float = 0.1
    rulebook: Optional[Rulebook] = None  # substitute only; None means the shipped rulebook
    permutation: Optional[Mapping[str, str]] = None  # regswap only; None means drawn from seed

    def __post_init__(self) -> None:
        if not isinstance(self.technique, Technique):
            object.__setattr__(self, "technique", Technique(self.technique))
        if not 0 <= self.seed < SEED_MODULUS:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"Density must be in [0, 1], got {self.density}")

    def derive(self, offset: int) -> "MutationConfig":
        """Copy with seed shifted by `offset` (wrapping at 2**64)."""
        return replace(self, seed=(self.seed + offset) % SEED_MODULUS)

    def resolved_rulebook(self) -> Rulebook:
        return self.rulebook if self.rulebook is not None else default_rulebook()

    def to_dict(self) -> dict:
        data: dict = {
            "technique": self.technique.value,
            "seed": self.seed,
            "density": self.density,
            "rulebook_digest": None,
        }
        if self.technique is Technique.SUBSTITUTE:
            data["rulebook_digest"] = self.resolved_rulebook().digest()
        if self.permutation is not None:
            data["permutation"] = dict(sorted(self.permutation.items()))
        return data


@dataclass
class Family:
    """Variants of one base program plus their lineage manifest."""

    base: Program
    variants: list[Program] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


def program_digest(program: Program) -> str:
    """SHA-256 of the canonical listing of a program."""
    return hashlib.sha256(serialize_program(program).encode("utf-8")).hexdigest()


def _splice(sub: Subroutine, pieces: Sequence[tuple[Instruction, ...]]) -> Subroutine:
    """
    Rebuild a body from one replacement piece per original instruction.

    A label that pointed at instruction i points at the start of piece i.
    """
    body: list[Instruction] = []
    starts: list[int] = []
    for piece in pieces:
        starts.append(len(body))
        body.extend(piece)
    starts.append(len(body))
    labels = tuple(Label(label.name, starts[label.position]) for label in sub.labels)
    return sub.replace_body(tuple(body), labels)


def _require(cfg: MutationConfig, *techniques: Technique) -> None:
    if cfg.technique not in techniques:
        names = ", ".join(t.value for t in techniques)
        raise ValueError(f"Technique {cfg.technique.value} given where {names} expected")


def insert_garbage(program: Program, cfg: MutationConfig) -> Program:
    """
    Insert dead code before instructions with probability `density`.

    `garbage` draws a dead instruction (add R,0 / mov R,R / or R,0 / and R,-1)
    or an undo pair (push R; pop R / inc R; sub R,1) with a random scratch
    register; `garbage_nop` inserts a literal nop.
    """
    _require(cfg, Technique.GARBAGE, Technique.GARBAGE_NOP)
    rng = random.Random(cfg.seed)
    subroutines = []

    for sub in program.subroutines:
        pieces: list[tuple[Instruction, ...]] = []
        inserted = 0
        for instr in sub.body:
            if rng.random() < cfg.density:
                if cfg.technique is Technique.GARBAGE_NOP:
                    junk: tuple[Instruction, ...] = (NOP,)
                else:
                    form = rng.choice(GARBAGE_FORMS)
                    register = rng.choice(SCRATCH_REGISTERS)
                    junk = tuple(template.render({"r": register}) for template in form)
                pieces.append(junk + (instr,))
                inserted += 1
            else:
                pieces.append((instr,))
        logger.debug("%s/%s: %d garbage insertions", program.id, sub.name, inserted)
        subroutines.append(_splice(sub, pieces))

    return program.with_subroutines(tuple(subroutines))


def validate_permutation(permutation: Mapping[str, str]) -> None:
    """
    Check that a register mapping is a bijection on general-purpose registers.

    Raises:
        InvalidPermutation: if not bijective, not 32-bit general purpose, or touching esp
    """
    allowed = set(GENERAL_PURPOSE) - {"esp"}
    for source, target in permutation.items():
        for reg in (source, target):
            if reg == "esp":
                raise InvalidPermutation("esp cannot be exchanged")
            if reg not in allowed:
                raise InvalidPermutation(f"{reg} is not a 32-bit general-purpose register")
    if set(permutation.keys()) != set(permutation.values()):
        raise InvalidPermutation("Register mapping is not a bijection over its domain")


def random_register_permutation(program: Program, rng: random.Random) -> dict[str, str]:
    """
    Draw a register exchange over the scratch registers.

    Registers whose 8-bit halves the program uses are only exchanged among
    eax/ebx/ecx/edx.
    """
    byte_users = {
        parent_register(reg)
        for instr in program.instructions()
        for op in instr.operands
        for reg in op.registers
        if register_role(reg) in ("high", "low")
    }
    if not byte_users:
        targets = list(SCRATCH_REGISTERS)
        rng.shuffle(targets)
        return dict(zip(SCRATCH_REGISTERS, targets))

    mapping: dict[str, str] = {}
    for group in (BYTE_ADDRESSABLE, ("esi", "edi")):
        targets = list(group)
        rng.shuffle(targets)
        mapping.update(zip(group, targets))
    return mapping


def _alias_mapping(program: Program, permutation: Mapping[str, str]) -> dict[str, str]:
    """Extend a parent-register mapping to every sub-register the program uses."""
    used = {reg for instr in program.instructions() for op in instr.operands for reg in op.registers}
    mapping: dict[str, str] = {}
    for name, (parent, role) in REGISTERS.items():
        target_parent = permutation.get(parent, parent)
        if target_parent == parent:
            continue
        alias = alias_of(target_parent, role)
        if alias is None:
            if name in used:
                raise InvalidPermutation(f"{name} has no counterpart in {target_parent}")
            continue
        mapping[name] = alias
    return mapping


def swap_registers(
    program: Program,
    permutation: Optional[Mapping[str, str]] = None,
    seed: int = 0,
) -> Program:
    """
    Rename every register occurrence through a bijection.

    Args:
        program: Program to rewrite
        permutation: Parent-register mapping; drawn from `seed` when None
        seed: Seed for the drawn mapping

    Raises:
        InvalidPermutation: mapping is not a bijection, touches esp, or
            would rename an 8-bit register onto esi/edi/ebp
    """
    if permutation is None:
        permutation = random_register_permutation(program, random.Random(seed))
    validate_permutation(permutation)
    mapping = _alias_mapping(program, permutation)

    subroutines = tuple(
        sub.replace_body(tuple(instr.rename_registers(mapping) for instr in sub.body))
        for sub in program.subroutines
    )
    return program.with_subroutines(subroutines)


def substitute_instructions(program: Program, cfg: MutationConfig) -> Program:
    """
    Replace instruction sequences by equivalents from the rulebook.

    At each site where some rule matches, a rule is applied with probability
    `density`, chosen uniformly among the applicable ones. Patterns never
    span a label.

    Raises:
        EmptyRulebook: if the rulebook has no rules
    """
    _require(cfg, Technique.SUBSTITUTE)
    rulebook = cfg.resolved_rulebook()
    if len(rulebook) == 0:
        raise EmptyRulebook("Substitution needs at least one rule")

    rng = random.Random(cfg.seed)
    subroutines = []
    for sub in program.subroutines:
        body = sub.body
        blocked = sub.label_positions
        pieces: list[tuple[Instruction, ...]] = []
        i = 0
        while i < len(body):
            applicable = []
            for rule in rulebook.rules:
                span = len(rule.pattern)
                if any(i + k in blocked for k in range(1, span)):
                    continue
                bindings = rule.match_at(body, i)
                if bindings is not None:
                    applicable.append((rule, bindings))

            if applicable and rng.random() < cfg.density:
                rule, bindings = rng.choice(applicable)
                logger.debug("%s/%s[%d]: %s", program.id, sub.name, i, rule.name)
                span = len(rule.pattern)
                pieces.append(rule.rewrite(bindings))
                pieces.extend(() for _ in range(span - 1))
                i += span
            else:
                pieces.append((body[i],))
                i += 1
        subroutines.append(_splice(sub, pieces))

    return program.with_subroutines(tuple(subroutines))


def permute_instructions(program: Program, cfg: MutationConfig) -> Program:
    """
    Swap dependency-free adjacent instructions.

    Makes round(density * len(body)) attempts per subroutine; each attempt
    picks an adjacent pair and swaps it if `can_swap` allows and no label
    points at either instruction.
    """
    _require(cfg, Technique.PERMUTE)
    rng = random.Random(cfg.seed)
    subroutines = []

    for sub in program.subroutines:
        body = list(sub.body)
        if len(body) < 2:
            subroutines.append(sub)
            continue
        blocked = sub.label_positions
        swaps = 0
        for _ in range(round(cfg.density * len(body))):
            i = rng.randrange(len(body) - 1)
            if i in blocked or i + 1 in blocked:
                continue
            if can_swap(body[i], body[i + 1]):
                body[i], body[i + 1] = body[i + 1], body[i]
                swaps += 1
        logger.debug("%s/%s: %d swaps", program.id, sub.name, swaps)
        subroutines.append(sub.replace_body(tuple(body)))

    return program.with_subroutines(tuple(subroutines))


def transpose_modules(program: Program, cfg: MutationConfig) -> Program:
    """Reorder subroutines by a seeded shuffle; bodies are untouched."""
    _require(cfg, Technique.TRANSPOSE_MODULES)
    order = list(program.subroutines)
    random.Random(cfg.seed).shuffle(order)
    return program.with_subroutines(tuple(order))


def mutate(program: Program, cfg: MutationConfig) -> Program:
    """Apply one mutation step."""
    if cfg.technique in (Technique.GARBAGE, Technique.GARBAGE_NOP):
        return insert_garbage(program, cfg)
    if cfg.technique is Technique.REGSWAP:
        return swap_registers(program, cfg.permutation, cfg.seed)
    if cfg.technique is Technique.SUBSTITUTE:
        return substitute_instructions(program, cfg)
    if cfg.technique is Technique.PERMUTE:
        return permute_instructions(program, cfg)
    return transpose_modules(program, cfg)


def make_family(base: Program, n: int, techniques: Sequence[MutationConfig]) -> Family:
    """
    Generate `n` variants by composing the given steps.

    Variant k (1-based) is named `<base id>_v<k>` and runs every step with its
    seed shifted by k - 1. With no steps every variant is the base itself.
    """
    if n < 1:
        raise ValueError(f"Family size must be >= 1, got {n}")

    family = Family(base=base)
    records = []
    for k in range(1, n + 1):
        steps = [cfg.derive(k - 1) for cfg in techniques]
        variant = base
        for step in steps:
            variant = mutate(variant, step)
        if steps:
            variant = variant.with_subroutines(variant.subroutines, id=f"{base.id}_v{k}")
        family.variants.append(variant)
        records.append(
            {
                "id": variant.id,
                "seed": steps[0].seed if steps else None,
                "steps": [step.to_dict() for step in steps],
                "digest": program_digest(variant),
            }
        )
        logger.info("Generated %s (%d steps)", variant.id, len(steps))

    family.manifest = {
        "base": {"id": base.id, "digest": program_digest(base)},
        "count": n,
        "variants": records,
    }
    return family
