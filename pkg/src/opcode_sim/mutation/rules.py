"""Instruction substitution rules and the shipped rulebook."""

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from itertools import permutations
from pathlib import Path
from typing import Iterable, Optional, Union

import yaml

from opcode_sim.asm.parser import parse_instruction
from opcode_sim.errors import InvalidRule, ListingSyntaxError
from opcode_sim.models.instruction import Instruction
from opcode_sim.models.operand import Operand, OperandKind

_PLACEHOLDER = re.compile(r"\{(?P<name>[a-z][a-z0-9_]*)\}")


@dataclass(frozen=True)
class Placeholder:
    """Register slot in an instruction template."""

    name: str


TemplateOperand = Union[Operand, Placeholder]


@dataclass(frozen=True)
class InstructionTemplate:
    """Mnemonic plus literal operands and register placeholders."""

    mnemonic: str
    operands: tuple[TemplateOperand, ...]

    @classmethod
    def parse(cls, text: str) -> "InstructionTemplate":
        """Parse `mov {r}, 0` style template text."""
        names: dict[str, str] = {}

        def stash(match: re.Match) -> str:
            token = f"__slot{len(names)}"
            names[token] = match.group("name")
            return token

        try:
            instr = parse_instruction(_PLACEHOLDER.sub(stash, text.strip()))
        except ListingSyntaxError as exc:
            raise InvalidRule(f"Bad template {text!r}: {exc.reason}") from None

        operands: list[TemplateOperand] = []
        for op in instr.operands:
            if op.kind is OperandKind.LABEL and op.target in names:
                operands.append(Placeholder(names[op.target]))  # type: ignore[index]
            else:
                operands.append(op)
        return cls(instr.mnemonic, tuple(operands))

    @property
    def placeholders(self) -> set[str]:
        return {op.name for op in self.operands if isinstance(op, Placeholder)}

    def match(self, instr: Instruction, bindings: dict[str, str]) -> Optional[dict[str, str]]:
        """Extend `bindings` so that the template equals `instr`, or return None."""
        if instr.mnemonic != self.mnemonic or len(instr.operands) != len(self.operands):
            return None
        bound = dict(bindings)
        for template_op, op in zip(self.operands, instr.operands):
            if isinstance(template_op, Placeholder):
                if op.kind is not OperandKind.REGISTER:
                    return None
                previous = bound.setdefault(template_op.name, op.register)  # type: ignore[arg-type]
                if previous != op.register:
                    return None
            elif template_op != op:
                return None
        return bound

    def render(self, bindings: dict[str, str]) -> Instruction:
        """Instantiate the template with bound registers."""
        operands = tuple(
            Operand.reg(bindings[op.name]) if isinstance(op, Placeholder) else op
            for op in self.operands
        )
        return Instruction(self.mnemonic, operands)

    def to_text(self) -> str:
        parts = [f"{{{op.name}}}" if isinstance(op, Placeholder) else op.to_text() for op in self.operands]
        return self.mnemonic + (" " + ", ".join(parts) if parts else "")


@dataclass(frozen=True)
class SubstitutionRule:
    """Directed rewrite of an instruction sequence into an equivalent one."""

    name: str
    pattern: tuple[InstructionTemplate, ...]
    replacement: tuple[InstructionTemplate, ...]

    def __post_init__(self) -> None:
        if not self.pattern or not self.replacement:
            raise InvalidRule(f"Rule {self.name} needs a pattern and a replacement")
        bound = set().union(*(t.placeholders for t in self.pattern))
        used = set().union(*(t.placeholders for t in self.replacement))
        if not used <= bound:
            raise InvalidRule(f"Rule {self.name} uses unbound placeholders: {sorted(used - bound)}")

    @classmethod
    def from_text(cls, name: str, pattern: Iterable[str], replacement: Iterable[str]) -> "SubstitutionRule":
        return cls(
            name=name,
            pattern=tuple(InstructionTemplate.parse(t) for t in pattern),
            replacement=tuple(InstructionTemplate.parse(t) for t in replacement),
        )

    def match_at(self, body: tuple[Instruction, ...], index: int) -> Optional[dict[str, str]]:
        """Bindings if the pattern matches `body` starting at `index`."""
        if index + len(self.pattern) > len(body):
            return None
        bindings: Optional[dict[str, str]] = {}
        for offset, template in enumerate(self.pattern):
            bindings = template.match(body[index + offset], bindings)  # type: ignore[arg-type]
            if bindings is None:
                return None
        return bindings

    def rewrite(self, bindings: dict[str, str]) -> tuple[Instruction, ...]:
        """Replacement instructions for a successful match."""
        return tuple(template.render(bindings) for template in self.replacement)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pattern": [t.to_text() for t in self.pattern],
            "replacement": [t.to_text() for t in self.replacement],
        }


@dataclass(frozen=True)
class Rulebook:
    """Ordered collection of substitution rules."""

    rules: tuple[SubstitutionRule, ...]

    def __len__(self) -> int:
        return len(self.rules)

    def get(self, name: str) -> SubstitutionRule:
        for rule in self.rules:
            if rule.name == name:
                return rule
        raise KeyError(name)

    def select(self, names: Iterable[str]) -> "Rulebook":
        """Sub-rulebook with the named rules, in the given order."""
        return Rulebook(tuple(self.get(name) for name in names))

    def inverse(self, rule: SubstitutionRule) -> Optional[SubstitutionRule]:
        """Rule that undoes `rule`, if the rulebook has one."""
        for candidate in self.rules:
            if candidate.pattern == rule.replacement and candidate.replacement == rule.pattern:
                return candidate
        return None

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the rules."""
        payload = json.dumps([rule.to_dict() for rule in self.rules], sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def rulebook_from_dict(data: dict) -> Rulebook:
    """Expand equivalence classes into directed rules."""
    if not isinstance(data, dict) or not isinstance(data.get("equivalences"), list):
        raise InvalidRule("Rulebook must contain an 'equivalences' list")

    rules: list[SubstitutionRule] = []
    for entry in data["equivalences"]:
        if not isinstance(entry, dict):
            raise InvalidRule(f"Equivalence entry must be a mapping, got {entry!r}")
        name = entry.get("name")
        forms = entry.get("forms")
        if not name or not isinstance(forms, dict) or len(forms) < 2:
            raise InvalidRule(f"Equivalence {name!r} needs a name and at least two forms")
        for form, text in forms.items():
            if isinstance(text, str):
                continue
            if not isinstance(text, list) or not text or not all(isinstance(t, str) for t in text):
                raise InvalidRule(f"Form {name}/{form} must be a template or a list of templates, got {text!r}")
        forms = {form: [text] if isinstance(text, str) else list(text) for form, text in forms.items()}
        for source, target in permutations(forms, 2):
            rules.append(
                SubstitutionRule.from_text(f"{name}/{source}->{target}", forms[source], forms[target])
            )
    return Rulebook(tuple(rules))


def load_rulebook(path: Path) -> Rulebook:
    """Load a rulebook YAML file."""
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise InvalidRule(f"{path}: invalid YAML ({exc})") from None
    except UnicodeDecodeError:
        raise InvalidRule(f"{path}: not UTF-8 text") from None
    return rulebook_from_dict(data)


def default_rulebook() -> Rulebook:
    """The shipped rulebook (zero idioms, self-test, frame setup)."""
    text = resources.files("opcode_sim.mutation").joinpath("rulebook.yaml").read_text(encoding="utf-8")
    return rulebook_from_dict(yaml.safe_load(text))
