"""Load analysis configuration and family label files (YAML or JSON)."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from opcode_sim.classify.threshold import DEFAULT_THRESHOLD
from opcode_sim.errors import UsageError
from opcode_sim.features.distance import MetricSpec


@dataclass
class AnalysisConfig:
    """Metric and classifier defaults read from a config file."""

    metric: MetricSpec = field(default_factory=MetricSpec)
    threshold: float = DEFAULT_THRESHOLD


def _read_yaml(path: Path) -> object:
    if not path.exists():
        raise UsageError(f"File not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            return yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise UsageError(f"{path}: invalid YAML ({exc})") from None
    except UnicodeDecodeError:
        raise UsageError(f"{path}: not UTF-8 text") from None


def load_weights(path: Path) -> dict[str, float]:
    """Mnemonic -> weight mapping."""
    data = _read_yaml(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: weights must be a mnemonic -> number mapping")
    try:
        return {str(k).lower(): float(v) for k, v in data.items()}
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: weights must be numbers ({exc})") from None


def load_analysis_config(path: Optional[Path]) -> AnalysisConfig:
    """
    Load an analysis config.

    Example:
        metric:
          r: 2
          root: false
          weights: {nop: 0.5}
        classifier:
          threshold: 0.057
    """
    if path is None:
        return AnalysisConfig()

    data = _read_yaml(path) or {}
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a mapping")
    metric_data = data.get("metric") or {}
    classifier_data = data.get("classifier") or {}

    weights = metric_data.get("weights") or None
    try:
        metric = MetricSpec(
            r=float(metric_data.get("r", 2.0)),
            root=bool(metric_data.get("root", False)),
            weights={str(k).lower(): float(v) for k, v in weights.items()} if weights else None,
        )
        threshold = float(classifier_data.get("threshold", DEFAULT_THRESHOLD))
    except (TypeError, ValueError, AttributeError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    return AnalysisConfig(metric=metric, threshold=threshold)


def load_labels(path: Path) -> dict[str, str]:
    """
    Load family labels.

    Accepts either a flat `program id -> family` mapping or
    `families: {family: [program ids]}`.
    """
    data = _read_yaml(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: labels must be a mapping")

    if isinstance(data.get("families"), dict):
        labels: dict[str, str] = {}
        for family, members in data["families"].items():
            if members is not None and not isinstance(members, list):
                raise UsageError(f"{path}: family {family!r} must list its program ids")
            for member in members or []:
                labels[str(member)] = str(family)
        return labels
    return {str(k): str(v) for k, v in data.items()}
