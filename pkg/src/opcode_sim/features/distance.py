"""
Minkowski-form histogram distances and program comparison.

Two programs are compared by matching every subroutine histogram of one
against all histograms of the other and keeping the minimum (min-match).
The directed distance is the mean of those minima; the program distance is
the average of both directions.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Optional, Sequence

import numpy as np

from opcode_sim.errors import DuplicateId, EmptySet, KindMismatch, TooFewPrograms
from opcode_sim.features.histogram import HistogramSet, OpcodeHistogram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricSpec:
    """
    Parameters of the Minkowski-form distance.

    With root off the distance is sum(w_i * |x_i - y_i|^r) as printed for the
    Euclidean case (no square root). Weights default to 1 for every mnemonic.
    """

    r: float = 2.0
    weights: Optional[Mapping[str, float]] = None
    root: bool = False

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"Minkowski exponent must be >= 1, got {self.r}")
        if self.weights is not None:
            if any(w <= 0 for w in self.weights.values()):
                raise ValueError("Metric weights must be positive")
            object.__setattr__(self, "weights", dict(sorted(self.weights.items())))

    def weight(self, mnemonic: str) -> float:
        """Weight of one bin."""
        if self.weights is None:
            return 1.0
        return self.weights.get(mnemonic, 1.0)

    def to_dict(self) -> dict:
        return {"r": self.r, "root": self.root, "weights": dict(self.weights or {})}


DEFAULT_METRIC = MetricSpec()


@dataclass(frozen=True)
class SubroutineMatch:
    """Best target subroutine for one query subroutine."""

    query: str
    target: str
    target_index: int
    distance: float


@dataclass(frozen=True)
class MatchReport:
    """Minimum-distance vector of a query program against a target program."""

    query_id: str
    target_id: str
    matches: tuple[SubroutineMatch, ...]

    @property
    def minima(self) -> list[float]:
        return [m.distance for m in self.matches]

    @property
    def average(self) -> float:
        """Directed distance: mean of the minima."""
        return float(np.mean(self.minima))


@dataclass
class DistanceMatrix:
    """Symmetric pairwise program distances with zero diagonal."""

    labels: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.labels = tuple(self.labels)
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise ValueError(f"Matrix shape {self.values.shape} does not match {n} labels")

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def get(self, a: str, b: str) -> float:
        """Distance between two programs by id."""
        return float(self.values[self.index_of(a), self.index_of(b)])

    def pairs(self) -> list[tuple[str, str, float]]:
        """All unordered off-diagonal pairs in row-major order."""
        return [
            (self.labels[i], self.labels[j], float(self.values[i, j]))
            for i, j in combinations(range(len(self.labels)), 2)
        ]

    def to_dict(self) -> dict:
        """Lossless form (full float precision)."""
        return {
            "labels": list(self.labels),
            "values": [[float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DistanceMatrix":
        return cls(labels=tuple(data["labels"]), values=np.array(data["values"], dtype=float))

    def __len__(self) -> int:
        return len(self.labels)


def _require_normalized(*histograms: OpcodeHistogram) -> None:
    for h in histograms:
        if not h.is_normalized:
            raise KindMismatch(f"Histogram {h.source} is raw; normalize it before comparing")


def histogram_distance(
    x: OpcodeHistogram, y: OpcodeHistogram, metric: MetricSpec = DEFAULT_METRIC
) -> float:
    """
    Minkowski-form distance between two normalized histograms.

    Only parallel bins are compared; the vocabulary is the sorted union of
    both bin sets (absent bins are zero).

    Raises:
        KindMismatch: if either histogram is raw
    """
    _require_normalized(x, y)
    vocabulary = sorted(set(x.bins) | set(y.bins))
    xs = np.array([x.get(m) for m in vocabulary], dtype=float)
    ys = np.array([y.get(m) for m in vocabulary], dtype=float)
    weights = np.array([metric.weight(m) for m in vocabulary], dtype=float)

    total = float(np.sum(weights * np.abs(xs - ys) ** metric.r))
    if metric.root:
        return total ** (1.0 / metric.r)
    return total


def min_match(
    query: HistogramSet, target: HistogramSet, metric: MetricSpec = DEFAULT_METRIC
) -> MatchReport:
    """
    Match each query histogram with its closest target histogram.

    Ties go to the smallest target index.

    Raises:
        EmptySet: if either set has no histograms
    """
    for hs in (query, target):
        if len(hs) == 0:
            raise EmptySet(f"Histogram set {hs.program_id} is empty")

    matches = []
    for h in query.histograms:
        distances = np.array([histogram_distance(h, g, metric) for g in target.histograms])
        j = int(np.argmin(distances))
        matches.append(
            SubroutineMatch(
                query=h.source[1],
                target=target.histograms[j].source[1],
                target_index=j,
                distance=float(distances[j]),
            )
        )
    return MatchReport(query.program_id, target.program_id, tuple(matches))


def directed_distance(
    p1: HistogramSet, p2: HistogramSet, metric: MetricSpec = DEFAULT_METRIC
) -> float:
    """Mean minimum distance from p1's subroutines into p2 (not symmetric)."""
    return min_match(p1, p2, metric).average


def symmetric_distance(
    p1: HistogramSet, p2: HistogramSet, metric: MetricSpec = DEFAULT_METRIC
) -> float:
    """Average of the two directed distances."""
    return (directed_distance(p1, p2, metric) + directed_distance(p2, p1, metric)) / 2


def distance_matrix(
    programs: Sequence[HistogramSet],
    metric: MetricSpec = DEFAULT_METRIC,
    workers: int = 1,
) -> DistanceMatrix:
    """
    Evaluate every unordered pair once and mirror it.

    Args:
        programs: Feature sets with distinct program ids
        metric: Distance parameters
        workers: Thread count for pair evaluation (output does not depend on it)

    Raises:
        TooFewPrograms: fewer than two programs
        DuplicateId: two programs share an id
    """
    if len(programs) < 2:
        raise TooFewPrograms(f"Distance matrix needs at least 2 programs, got {len(programs)}")
    labels = [p.program_id for p in programs]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise DuplicateId(f"Duplicate program ids: {', '.join(duplicates)}")

    n = len(programs)
    index_pairs = list(combinations(range(n), 2))
    logger.info("Evaluating %d program pairs with %d worker(s)", len(index_pairs), workers)

    def evaluate(pair: tuple[int, int]) -> float:
        i, j = pair
        return symmetric_distance(programs[i], programs[j], metric)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, index_pairs))
    else:
        results = [evaluate(pair) for pair in index_pairs]

    values = np.zeros((n, n), dtype=float)
    for (i, j), value in zip(index_pairs, results):
        values[i, j] = value
        values[j, i] = value

    return DistanceMatrix(labels=tuple(labels), values=values)
