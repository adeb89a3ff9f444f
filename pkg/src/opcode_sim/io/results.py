"""Output writing and formatting."""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from opcode_sim.classify.threshold import Calibration, Classification
from opcode_sim.errors import ParseError
from opcode_sim.features.distance import DistanceMatrix, MatchReport


def write_text_atomic(path: Path, text: str) -> Path:
    """Write a file via a temporary sibling and an atomic replace."""
    write_files_atomic({path: text})
    return path


def write_files_atomic(files: Mapping[Path, str]) -> list[Path]:
    """
    Publish several files together.

    Every file is staged next to its destination first; nothing is replaced
    until all staging writes succeeded. If publishing fails half way, the
    files already published are removed.
    """
    staged: list[tuple[Path, Path]] = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
            staged.append((Path(tmp_name), path))
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise

    published: list[Path] = []
    try:
        for tmp, path in staged:
            os.replace(tmp, path)
            published.append(path)
    except BaseException:
        for path in published:
            path.unlink(missing_ok=True)
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    return published


def dump_json(data: object) -> str:
    """Stable JSON text used for every JSON output."""
    return json.dumps(data, indent=2) + "\n"


def matrix_to_csv(matrix: DistanceMatrix) -> str:
    """CSV with a header row/column of program ids and 3-decimal values."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([""] + list(matrix.labels))
    for label, row in zip(matrix.labels, matrix.values):
        writer.writerow([label] + [f"{value:.3f}" for value in row])
    return buffer.getvalue()


def matrix_to_json(matrix: DistanceMatrix, metric: Optional[dict] = None) -> str:
    """Lossless JSON form of a matrix."""
    data = matrix.to_dict()
    if metric is not None:
        data["metric"] = metric
    return dump_json(data)


def load_matrix(path: Path) -> DistanceMatrix:
    """Load a matrix from its JSON (lossless) or CSV (3 decimals) form."""
    try:
        if path.suffix.lower() == ".csv":
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.reader(f))
            labels = tuple(rows[0][1:])
            values = np.array([[float(v) for v in row[1:]] for row in rows[1:]], dtype=float)
            return DistanceMatrix(labels=labels, values=values)
        with open(path, encoding="utf-8") as f:
            return DistanceMatrix.from_dict(json.load(f))
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise ParseError(f"{path}: not a distance matrix ({exc})") from None


def format_matrix_table(matrix: DistanceMatrix, threshold: Optional[float] = None) -> str:
    """
    Render a matrix as a text table.

    With a threshold, off-diagonal cells at or below it are flagged with `*`.
    """
    width = max(8, max(len(label) for label in matrix.labels) + 1)
    lines = []
    lines.append("")
    lines.append("-" * (width * (len(matrix.labels) + 1)))
    title = "DISTANCE MATRIX"
    if threshold is not None:
        title += f" (* = distance <= {threshold:g})"
    lines.append(title)
    lines.append("-" * (width * (len(matrix.labels) + 1)))

    header = f"{'':<{width}}" + "".join(f"{label:>{width}}" for label in matrix.labels)
    lines.append(header)
    for i, label in enumerate(matrix.labels):
        row = f"{label:<{width}}"
        for j, value in enumerate(matrix.values[i]):
            cell = f"{value:.3f}"
            if threshold is not None and i != j and value <= threshold:
                cell = "*" + cell
            row += f"{cell:>{width}}"
        lines.append(row)
    return "\n".join(lines)


def format_match_report(report: MatchReport) -> str:
    """Per-subroutine pairing of a directed comparison."""
    lines = []
    lines.append("")
    lines.append(f"{report.query_id} -> {report.target_id}")
    lines.append("-" * 50)
    lines.append(f"{'Subroutine':<20} {'Best match':<20} {'Distance':>8}")
    for match in report.matches:
        lines.append(f"{match.query:<20} {match.target:<20} {match.distance:>8.3f}")
    lines.append(f"{'average':<41} {report.average:>8.3f}")
    return "\n".join(lines)


def format_classification(result: Classification) -> str:
    """Pairs and clusters as text."""
    lines = []
    lines.append("")
    lines.append("=" * 50)
    lines.append(f"CLASSIFICATION (threshold {result.threshold:g})")
    lines.append("=" * 50)
    lines.append(f"Pairs at or below threshold: {len(result.pairs)}")
    for a, b, distance in result.pairs:
        lines.append(f"  {a:<20} {b:<20} {distance:.3f}")
    lines.append(f"\nClusters: {len(result.clusters)}")
    for i, cluster in enumerate(result.clusters, 1):
        lines.append(f"{i:>3}. {', '.join(cluster)}")
    return "\n".join(lines)


def format_calibration(calibration: Calibration) -> str:
    """Calibration bounds and the resulting threshold."""
    lines = []
    lines.append("")
    lines.append("=" * 50)
    lines.append("THRESHOLD CALIBRATION")
    lines.append("=" * 50)
    lines.append(f"Max intra-family distance: {calibration.intra_max:.6f}")
    lines.append(f"Min inter-family distance: {calibration.inter_min:.6f}")
    if calibration.valid:
        lines.append(f"Threshold: {calibration.threshold:.6f}")
    else:
        lines.append("No valid threshold: families overlap")
    return "\n".join(lines)
