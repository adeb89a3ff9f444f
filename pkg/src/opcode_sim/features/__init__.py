"""Feature extraction and distance modules."""

from opcode_sim.features.histogram import (
    HistogramKind,
    HistogramSet,
    OpcodeHistogram,
    build_histogram,
    extract_features,
    normalize,
)
from opcode_sim.features.distance import (
    DistanceMatrix,
    MatchReport,
    MetricSpec,
    directed_distance,
    distance_matrix,
    histogram_distance,
    min_match,
    symmetric_distance,
)

__all__ = [
    "HistogramKind",
    "HistogramSet",
    "OpcodeHistogram",
    "build_histogram",
    "extract_features",
    "normalize",
    "DistanceMatrix",
    "MatchReport",
    "MetricSpec",
    "directed_distance",
    "distance_matrix",
    "histogram_distance",
    "min_match",
    "symmetric_distance",
]
