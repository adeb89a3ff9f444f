"""Subroutine and Program models."""

from dataclasses import dataclass, field
from typing import Iterator, Optional

from opcode_sim.models.instruction import Instruction


@dataclass(frozen=True)
class Label:
    """A named position inside a subroutine body (index of the next instruction)."""

    name: str
    position: int


@dataclass(frozen=True)
class Subroutine:
    """Named, ordered instruction sequence: the unit of histogram extraction."""

    name: str
    body: tuple[Instruction, ...] = field(default_factory=tuple)
    labels: tuple[Label, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("Subroutine name must be nonempty")
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))

        names = [label.name for label in self.labels]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate label in subroutine {self.name}")
        for label in self.labels:
            if not 0 <= label.position <= len(self.body):
                raise ValueError(f"Label {label.name} points outside subroutine {self.name}")

    @property
    def is_empty(self) -> bool:
        """Empty bodies are parsed but carry no histogram."""
        return len(self.body) == 0

    @property
    def label_positions(self) -> frozenset[int]:
        """Body indices that some label points at."""
        return frozenset(label.position for label in self.labels)

    def labels_at(self, position: int) -> list[Label]:
        """Labels placed right before instruction `position`, in source order."""
        return [label for label in self.labels if label.position == position]

    def replace_body(
        self, body: tuple[Instruction, ...], labels: Optional[tuple[Label, ...]] = None
    ) -> "Subroutine":
        """Copy with a new body; labels are kept unless given."""
        return Subroutine(
            name=self.name,
            body=body,
            labels=self.labels if labels is None else labels,
        )

    def __len__(self) -> int:
        return len(self.body)

    def __repr__(self) -> str:
        return f"Subroutine({self.name}: {len(self.body)} instructions)"


@dataclass(frozen=True)
class Program:
    """Named ordered collection of subroutines: the unit of comparison."""

    id: str
    subroutines: tuple[Subroutine, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.subroutines, tuple):
            object.__setattr__(self, "subroutines", tuple(self.subroutines))
        if not self.subroutines:
            raise ValueError(f"Program {self.id} has no subroutines")
        names = [sub.name for sub in self.subroutines]
        if len(set(names)) != len(names):
            raise ValueError(f"Program {self.id} has duplicate subroutine names")

    def get(self, name: str) -> Optional[Subroutine]:
        """Get a subroutine by name."""
        for sub in self.subroutines:
            if sub.name == name:
                return sub
        return None

    def instructions(self) -> Iterator[Instruction]:
        """Iterate over every instruction in source order."""
        for sub in self.subroutines:
            yield from sub.body

    def with_subroutines(self, subroutines: tuple[Subroutine, ...], id: Optional[str] = None) -> "Program":
        """Copy with new subroutines (and optionally a new id)."""
        return Program(id=self.id if id is None else id, subroutines=subroutines)

    def __len__(self) -> int:
        return len(self.subroutines)

    def __repr__(self) -> str:
        return f"Program({self.id}: {len(self.subroutines)} subroutines)"
