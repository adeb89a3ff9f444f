"""Read and write `.hist.json` histogram caches."""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from opcode_sim.errors import CacheFormatError
from opcode_sim.features.histogram import MASS_TOLERANCE, HistogramKind, HistogramSet, OpcodeHistogram
from opcode_sim.io.results import dump_json

CACHE_SUFFIX = ".hist.json"
CACHE_FORMAT = "opcode-sim/histograms"
CACHE_VERSION = 1


@dataclass(frozen=True)
class CachedFeatures:
    """Histogram set together with the digest of the listing it came from."""

    features: HistogramSet
    digest: str


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes."""
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cache_path_for(listing: Path, directory: Optional[Path] = None) -> Path:
    """`<dir>/<stem>.hist.json` for a listing path."""
    return (directory or listing.parent) / f"{listing.stem}{CACHE_SUFFIX}"


def cache_stem(path: Path) -> str:
    """Program id encoded in a cache file name."""
    return path.name[: -len(CACHE_SUFFIX)]


def histograms_to_dict(features: HistogramSet, digest: str) -> dict:
    return {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "id": features.program_id,
        "digest": digest,
        "skipped": list(features.skipped),
        "histograms": [
            {"subroutine": h.source[1], "bins": dict(sorted(h.bins.items()))}
            for h in features.histograms
        ],
    }


def histograms_from_dict(data: dict) -> CachedFeatures:
    """
    Rebuild a cached histogram set.

    Raises:
        CacheFormatError: missing fields, bad bins, or mass not summing to 1
    """
    try:
        if data.get("format") != CACHE_FORMAT:
            raise CacheFormatError(f"Not a histogram cache (format={data.get('format')!r})")
        program_id = data["id"]
        histograms = []
        for record in data["histograms"]:
            histogram = OpcodeHistogram(
                {str(k): float(v) for k, v in record["bins"].items()},
                HistogramKind.NORMALIZED,
                (program_id, record["subroutine"]),
            )
            if abs(histogram.total - 1.0) > MASS_TOLERANCE:
                raise CacheFormatError(f"{program_id}/{record['subroutine']}: bins do not sum to 1")
            histograms.append(histogram)
        features = HistogramSet(program_id, tuple(histograms), tuple(data.get("skipped", [])))
        return CachedFeatures(features=features, digest=data["digest"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CacheFormatError(f"Malformed histogram cache: {exc}") from None


def render_histogram_cache(features: HistogramSet, digest: str) -> str:
    """Cache document text for a histogram set."""
    return dump_json(histograms_to_dict(features, digest))


def load_histogram_cache(path: Path) -> CachedFeatures:
    """Load a `.hist.json` file."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise CacheFormatError(f"{path}: invalid JSON ({exc})") from None
    except UnicodeDecodeError:
        raise CacheFormatError(f"{path}: not UTF-8 text") from None
    return histograms_from_dict(data)
