"""Threshold classification of program distance matrices."""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Optional

import numpy as np

from opcode_sim.errors import InvalidLabels, InvalidMatrix
from opcode_sim.features.distance import DistanceMatrix

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.057
MATRIX_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ClassifierConfig:
    """Distances at or below `threshold` mark two programs as variants."""

    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError(f"Threshold must be >= 0, got {self.threshold}")


@dataclass
class Classification:
    """Below-threshold pairs and the single-linkage clusters they induce."""

    threshold: float
    pairs: list[tuple[str, str, float]] = field(default_factory=list)
    clusters: list[list[str]] = field(default_factory=list)

    def cluster_of(self, label: str) -> list[str]:
        for cluster in self.clusters:
            if label in cluster:
                return cluster
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "pairs": [{"a": a, "b": b, "distance": d} for a, b, d in self.pairs],
            "clusters": [list(c) for c in self.clusters],
        }


@dataclass(frozen=True)
class Calibration:
    """
    Result of threshold calibration against known families.

    `threshold` is None when the largest intra-family distance is not below
    the smallest inter-family distance (no threshold separates them).
    """

    intra_max: float
    inter_min: float
    threshold: Optional[float]

    @property
    def valid(self) -> bool:
        return self.threshold is not None

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "threshold": self.threshold,
            "intra_max": self.intra_max,
            "inter_min": self.inter_min,
        }


class UnionFind:
    """Disjoint sets over 0..size-1 with path compression and union by rank."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [1] * size

    def find(self, u: int) -> int:
        if self.parent[u] != u:
            self.parent[u] = self.find(self.parent[u])
        return self.parent[u]

    def union(self, u: int, v: int) -> None:
        root_u, root_v = self.find(u), self.find(v)
        if root_u == root_v:
            return
        if self.rank[root_u] < self.rank[root_v]:
            root_u, root_v = root_v, root_u
        self.parent[root_v] = root_u
        if self.rank[root_u] == self.rank[root_v]:
            self.rank[root_u] += 1


def validate_matrix(matrix: DistanceMatrix) -> None:
    """
    Raises:
        InvalidMatrix: if the matrix is asymmetric or has a nonzero diagonal
    """
    values = matrix.values
    if np.any(np.abs(np.diag(values)) > MATRIX_TOLERANCE):
        raise InvalidMatrix("Distance matrix has a nonzero diagonal")
    if np.any(np.abs(values - values.T) > MATRIX_TOLERANCE):
        raise InvalidMatrix("Distance matrix is not symmetric")
    if np.any(values < 0):
        raise InvalidMatrix("Distance matrix has negative entries")


def classify(matrix: DistanceMatrix, cfg: ClassifierConfig = ClassifierConfig()) -> Classification:
    """
    Pair programs whose distance is <= threshold and cluster them.

    Clusters are connected components of the pair graph (single linkage);
    programs without a pair form singleton clusters. Clusters are listed in
    order of their first member's position in the matrix.
    """
    validate_matrix(matrix)
    n = len(matrix.labels)
    uf = UnionFind(n)
    result = Classification(threshold=cfg.threshold)

    for i, j in combinations(range(n), 2):
        distance = float(matrix.values[i, j])
        if distance <= cfg.threshold:
            result.pairs.append((matrix.labels[i], matrix.labels[j], distance))
            uf.union(i, j)

    clusters: dict[int, list[str]] = {}
    for i in range(n):
        clusters.setdefault(uf.find(i), []).append(matrix.labels[i])
    result.clusters = list(clusters.values())

    logger.info(
        "Threshold %.6g: %d pairs, %d clusters", cfg.threshold, len(result.pairs), len(result.clusters)
    )
    return result


def calibrate_threshold(matrix: DistanceMatrix, labels: Mapping[str, str]) -> Calibration:
    """
    Largest threshold that produces no cross-family pair.

    Returns the largest intra-family distance when it is below the smallest
    inter-family distance; otherwise reports the overlap with both bounds.

    Raises:
        InvalidLabels: if a program is unlabeled or fewer than two families exist
    """
    validate_matrix(matrix)
    missing = [label for label in matrix.labels if label not in labels]
    if missing:
        raise InvalidLabels(f"No family label for: {', '.join(missing)}")
    families = {labels[label] for label in matrix.labels}
    if len(families) < 2:
        raise InvalidLabels("Calibration needs at least two families")

    intra = [0.0]
    inter = []
    for a, b, distance in matrix.pairs():
        (intra if labels[a] == labels[b] else inter).append(distance)

    intra_max, inter_min = max(intra), min(inter)
    threshold = intra_max if intra_max < inter_min else None
    if threshold is None:
        logger.warning("Families overlap: intra max %.6g >= inter min %.6g", intra_max, inter_min)
    return Calibration(intra_max=intra_max, inter_min=inter_min, threshold=threshold)
