"""Normalization of raw predictions and frequency-weighted ranking across augmented inputs."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from ..smiles import SmilesError, parse_smiles
from ..smiles.canon import canonical_fragments, fragment_size_key

DEDUP_FIRST = "dedup_first"
KEEP_ALL = "keep_all"
MODES = (DEDUP_FIRST, KEEP_ALL)

POSITION_DECAY = 0.001  # weight of beam position i is 1 / (1 + POSITION_DECAY * i)


@lru_cache(maxsize=262144)
def normalize_prediction(raw_text: str) -> str | None:
    """Canonical form with fragments in largest-first order, or None if the text does not parse."""
    text = raw_text.strip()
    if not text:
        return None
    try:
        mol = parse_smiles(text)
    except SmilesError:
        return None
    frags = canonical_fragments(mol)
    if not frags:
        return None
    frags.sort(key=lambda f: fragment_size_key(*f))
    return ".".join(t for _, t in frags)


def largest_fragment_text(normalized: str) -> str:
    """Largest fragment of an already normalized string (its first fragment)."""
    return normalized.split(".", 1)[0]


@dataclass(frozen=True)
class PredictionEntry:
    reaction_id: str
    variant_index: int  # 0 is the canonical input
    beam_position: int  # position in the raw beam, 0-based
    raw_text: str
    decoder_score: float = math.nan

    @property
    def normalized(self) -> str | None:
        return normalize_prediction(self.raw_text)


@dataclass(frozen=True)
class RankedCandidate:
    canonical_text: str
    rank_value: float
    occurrence_count: int


def position_weight(i: int) -> float:
    return 1.0 / (1.0 + POSITION_DECAY * i)


def cleaned_beams(entries: Iterable[PredictionEntry], mode: str = DEDUP_FIRST) -> dict[int, list[str]]:
    """Per variant: normalized predictions in beam order, invalid ones removed.

    Under ``dedup_first`` a string repeated within one beam keeps only its
    first occurrence. List positions are the re-indexed beam positions.
    """
    if mode not in MODES:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    by_variant: dict[int, list[PredictionEntry]] = defaultdict(list)
    seen_keys = set()
    for e in entries:
        key = (e.reaction_id, e.variant_index, e.beam_position)
        if key in seen_keys:
            raise ValueError(f"duplicate prediction entry {key}")
        seen_keys.add(key)
        by_variant[e.variant_index].append(e)
    beams: dict[int, list[str]] = {}
    for n in sorted(by_variant):
        kept: list[str] = []
        for e in sorted(by_variant[n], key=lambda e: e.beam_position):
            text = e.normalized
            if text is None or (mode == DEDUP_FIRST and text in kept):
                continue
            kept.append(text)
        beams[n] = kept
    return beams


def rank_predictions(entries: Iterable[PredictionEntry], mode: str = DEDUP_FIRST) -> list[RankedCandidate]:
    """Distinct predictions for one reaction, best first.

    Each surviving prediction at re-indexed position i adds 1/(1 + 0.001 i)
    to its string's rank. Equal ranks keep first-occurrence order over
    (variant, position).
    """
    rank: dict[str, float] = {}
    count: dict[str, int] = {}
    first: dict[str, tuple[int, int]] = {}
    for n, beam in cleaned_beams(entries, mode).items():
        for i, text in enumerate(beam):
            rank[text] = rank.get(text, 0.0) + position_weight(i)
            count[text] = count.get(text, 0) + 1
            first.setdefault(text, (n, i))
    order = sorted(rank, key=lambda t: (-rank[t], first[t]))
    return [RankedCandidate(t, rank[t], count[t]) for t in order]


def group_by_reaction(entries: Iterable[PredictionEntry]) -> dict[str, list[PredictionEntry]]:
    groups: dict[str, list[PredictionEntry]] = defaultdict(list)
    for e in entries:
        groups[e.reaction_id].append(e)
    return dict(groups)


def confidence(entries: Sequence[PredictionEntry]) -> float | None:
    """Share of valid predictions equal to the most frequent one; None without valid predictions."""
    counts: dict[str, int] = defaultdict(int)
    for e in entries:
        text = e.normalized
        if text is not None:
            counts[text] += 1
    total = sum(counts.values())
    if total == 0:
        return None
    return max(counts.values()) / total
