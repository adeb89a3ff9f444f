"""Opcode histogram similarity for disassembled programs."""

from opcode_sim.models.program import Program, Subroutine
from opcode_sim.features.histogram import HistogramSet, OpcodeHistogram
from opcode_sim.features.distance import DistanceMatrix, MetricSpec
from opcode_sim.mutation.engine import MutationConfig, Technique
from opcode_sim.classify.threshold import Classification, ClassifierConfig

__all__ = [
    "Program",
    "Subroutine",
    "HistogramSet",
    "OpcodeHistogram",
    "DistanceMatrix",
    "MetricSpec",
    "MutationConfig",
    "Technique",
    "Classification",
    "ClassifierConfig",
]
