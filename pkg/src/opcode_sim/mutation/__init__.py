"""Metamorphic mutation engine."""

from opcode_sim.mutation.engine import (
    Family,
    MutationConfig,
    Technique,
    insert_garbage,
    make_family,
    mutate,
    permute_instructions,
    substitute_instructions,
    swap_registers,
    transpose_modules,
)
from opcode_sim.mutation.rules import Rulebook, SubstitutionRule, default_rulebook, load_rulebook

__all__ = [
    "Family",
    "MutationConfig",
    "Technique",
    "insert_garbage",
    "make_family",
    "mutate",
    "permute_instructions",
    "substitute_instructions",
    "swap_registers",
    "transpose_modules",
    "Rulebook",
    "SubstitutionRule",
    "default_rulebook",
    "load_rulebook",
]
