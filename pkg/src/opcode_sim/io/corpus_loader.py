"""Load programs and their features from listings or histogram caches."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from opcode_sim.asm.parser import LISTING_SUFFIX, load_program
from opcode_sim.errors import UsageError
from opcode_sim.features.histogram import HistogramSet, extract_features
from opcode_sim.io.histogram_cache import (
    CACHE_SUFFIX,
    cache_stem,
    file_digest,
    load_histogram_cache,
)

logger = logging.getLogger(__name__)


@dataclass
class CorpusEntry:
    """Listing and/or cache file for one program id."""

    stem: str
    listing: Optional[Path] = None
    cache: Optional[Path] = None


def is_listing(path: Path) -> bool:
    return path.suffix.lower() == LISTING_SUFFIX


def is_cache(path: Path) -> bool:
    return path.name.lower().endswith(CACHE_SUFFIX)


def _with_id(features: HistogramSet, program_id: str) -> HistogramSet:
    if features.program_id == program_id:
        return features
    return HistogramSet(program_id, features.histograms, features.skipped)


def load_entry(entry: CorpusEntry) -> HistogramSet:
    """
    Features for one corpus entry.

    A cache is used only when its digest matches the listing next to it;
    a stale cache is ignored and the listing re-read.
    """
    if entry.cache is not None:
        cached = load_histogram_cache(entry.cache)
        if entry.listing is None:
            return _with_id(cached.features, entry.stem)
        if cached.digest == file_digest(entry.listing):
            logger.debug("%s: using cache %s", entry.stem, entry.cache)
            return _with_id(cached.features, entry.stem)
        logger.warning("%s: stale histogram cache %s, regenerating", entry.stem, entry.cache)

    if entry.listing is None:
        raise UsageError(f"No listing or cache for {entry.stem}")
    return extract_features(load_program(entry.listing))


def load_features(path: Path) -> HistogramSet:
    """Features from a single `.oasm` listing or `.hist.json` cache."""
    if not path.exists():
        raise UsageError(f"Input file not found: {path}")
    if is_cache(path):
        return load_entry(CorpusEntry(stem=cache_stem(path), cache=path))
    if is_listing(path):
        return load_entry(CorpusEntry(stem=path.stem, listing=path))
    raise UsageError(f"Unsupported input {path} (expected {LISTING_SUFFIX} or {CACHE_SUFFIX})")


def scan_corpus(directory: Path) -> list[CorpusEntry]:
    """Listings and caches in a directory, grouped by stem, sorted by stem."""
    if not directory.is_dir():
        raise UsageError(f"Not a directory: {directory}")

    entries: dict[str, CorpusEntry] = {}
    for path in directory.iterdir():
        if not path.is_file():
            continue
        if is_cache(path):
            stem = cache_stem(path)
            entries.setdefault(stem, CorpusEntry(stem)).cache = path
        elif is_listing(path):
            entries.setdefault(path.stem, CorpusEntry(path.stem)).listing = path
    return [entries[stem] for stem in sorted(entries)]


def collect_corpus(directory: Path) -> list[HistogramSet]:
    """Features for every program in a directory, in lexicographic stem order."""
    entries = scan_corpus(directory)
    logger.info("Loading %d programs from %s", len(entries), directory)
    return [load_entry(entry) for entry in entries]
