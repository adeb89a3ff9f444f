"""Threshold classification modules."""

from opcode_sim.classify.threshold import (
    Calibration,
    Classification,
    ClassifierConfig,
    calibrate_threshold,
    classify,
)

__all__ = ["Calibration", "Classification", "ClassifierConfig", "calibrate_threshold", "classify"]
