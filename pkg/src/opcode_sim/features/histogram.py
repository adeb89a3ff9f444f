"""Per-subroutine opcode frequency histograms."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from opcode_sim.errors import EmptySubroutine, KindMismatch, NoFeatures, ZeroMass
from opcode_sim.models.program import Program, Subroutine

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-9


class HistogramKind(Enum):
    """Raw counts or L1-normalized frequencies."""

    RAW = "raw"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class OpcodeHistogram:
    """
    Sparse mnemonic -> value map.

    Absent mnemonics have value zero; zero-valued bins are never stored.
    `source` is (program id, subroutine name).
    """

    bins: Mapping[str, float]
    kind: HistogramKind = HistogramKind.RAW
    source: tuple[str, str] = ("", "")

    def __post_init__(self) -> None:
        bins = dict(sorted(self.bins.items()))
        if any(value <= 0 for value in bins.values()):
            raise ValueError("Histogram bins must be positive (absent means zero)")
        if self.kind is HistogramKind.RAW:
            if any(int(value) != value for value in bins.values()):
                raise ValueError("Raw histogram bins must be integer counts")
        elif any(value > 1 for value in bins.values()):
            raise ValueError("Normalized histogram bins must lie in (0, 1]")
        object.__setattr__(self, "bins", bins)

    @property
    def total(self) -> float:
        """Sum of all bin values."""
        return sum(self.bins.values())

    @property
    def is_normalized(self) -> bool:
        return self.kind is HistogramKind.NORMALIZED

    def get(self, mnemonic: str) -> float:
        """Value of a bin (zero when absent)."""
        return self.bins.get(mnemonic, 0)

    def __repr__(self) -> str:
        program, subroutine = self.source
        return f"OpcodeHistogram({program}/{subroutine}, {self.kind.value}, {len(self.bins)} bins)"


@dataclass(frozen=True)
class HistogramSet:
    """One normalized histogram per non-empty subroutine, in subroutine order."""

    program_id: str
    histograms: tuple[OpcodeHistogram, ...]
    skipped: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not isinstance(self.histograms, tuple):
            object.__setattr__(self, "histograms", tuple(self.histograms))
        if not isinstance(self.skipped, tuple):
            object.__setattr__(self, "skipped", tuple(self.skipped))
        kinds = {h.kind for h in self.histograms}
        if len(kinds) > 1:
            raise ValueError(f"Histogram set {self.program_id} mixes raw and normalized histograms")

    @property
    def subroutine_names(self) -> list[str]:
        return [h.source[1] for h in self.histograms]

    def __len__(self) -> int:
        return len(self.histograms)

    def __repr__(self) -> str:
        return f"HistogramSet({self.program_id}: {len(self.histograms)} histograms)"


def build_histogram(sub: Subroutine, program_id: str = "") -> OpcodeHistogram:
    """
    Count mnemonic occurrences in a subroutine body.

    Raises:
        EmptySubroutine: if the body has no instructions
    """
    if sub.is_empty:
        raise EmptySubroutine(f"Subroutine {sub.name} has no instructions")
    counts = Counter(instr.mnemonic for instr in sub.body)
    return OpcodeHistogram(dict(counts), HistogramKind.RAW, (program_id, sub.name))


def normalize(histogram: OpcodeHistogram) -> OpcodeHistogram:
    """
    Divide every bin by the total count.

    Raises:
        ZeroMass: if the histogram has no mass
    """
    if histogram.is_normalized:
        raise KindMismatch(f"Histogram {histogram.source} is already normalized")
    total = histogram.total
    if total <= 0:
        raise ZeroMass(f"Histogram {histogram.source} has zero mass")
    bins = {mnemonic: count / total for mnemonic, count in histogram.bins.items()}
    return OpcodeHistogram(bins, HistogramKind.NORMALIZED, histogram.source)


def extract_features(program: Program) -> HistogramSet:
    """
    Build the normalized histogram set of a program.

    Empty subroutines are skipped and listed in `HistogramSet.skipped`.

    Raises:
        NoFeatures: if every subroutine is empty
    """
    histograms: list[OpcodeHistogram] = []
    skipped: list[str] = []

    for sub in program.subroutines:
        if sub.is_empty:
            skipped.append(sub.name)
            continue
        histograms.append(normalize(build_histogram(sub, program.id)))

    if skipped:
        logger.warning("%s: skipped empty subroutines: %s", program.id, ", ".join(skipped))
    if not histograms:
        raise NoFeatures(f"Program {program.id} has no non-empty subroutines")

    return HistogramSet(program.id, tuple(histograms), tuple(skipped))
