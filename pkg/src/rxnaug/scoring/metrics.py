"""Accuracy metrics over ranked predictions and grouped reports."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..smiles import contains_stereo
from .ranking import (
    DEDUP_FIRST,
    PredictionEntry,
    RankedCandidate,
    confidence,
    group_by_reaction,
    largest_fragment_text,
    normalize_prediction,
    rank_predictions,
)


def _texts(ranked: Sequence[RankedCandidate | str]) -> list[str]:
    return [c.canonical_text if isinstance(c, RankedCandidate) else c for c in ranked]


def top_n_hit(ranked: Sequence[RankedCandidate | str], target: str, n: int) -> bool:
    want = normalize_prediction(target)
    return want is not None and want in _texts(ranked)[:n]


def maxfrag_hit(ranked: Sequence[RankedCandidate | str], target: str, n: int) -> bool:
    want = normalize_prediction(target)
    if want is None:
        return False
    reduced: list[str] = []
    for text in _texts(ranked):
        frag = largest_fragment_text(text)
        if frag not in reduced:
            reduced.append(frag)
    return largest_fragment_text(want) in reduced[:n]


def _accuracy(hit, ranked: Mapping[str, Sequence], targets: Mapping[str, str], n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    if not targets:
        return math.nan
    return sum(hit(ranked.get(rid, ()), tgt, n) for rid, tgt in targets.items()) / len(targets)


def top_n_accuracy(ranked: Mapping[str, Sequence], targets: Mapping[str, str], n: int) -> float:
    """Share of target reactions whose normalized target is among the first ``n`` candidates.

    Reactions without valid predictions count as misses.
    """
    return _accuracy(top_n_hit, ranked, targets, n)


def maxfrag_accuracy(ranked: Mapping[str, Sequence], targets: Mapping[str, str], n: int) -> float:
    """Top-n on largest fragments: candidates reduced, then deduplicated in order."""
    return _accuracy(maxfrag_hit, ranked, targets, n)


def relative_error_reduction(old: float, new: float) -> float:
    """Fractional drop of the error rate when accuracy (in percent) moves from ``old`` to ``new``."""
    if old >= 100:
        raise ValueError("old accuracy must be below 100%")
    return ((100 - old) - (100 - new)) / (100 - old)


@dataclass(frozen=True)
class ConfidenceBin:
    lower: float
    upper: float
    accuracy: float  # NaN for an empty bin
    density: float
    count: int


def confidence_bins(confidences: Sequence[float], correct: Sequence[bool], edges: Sequence[float] = (),
                    cumulative_below: float | None = None) -> list[ConfidenceBin]:
    """Accuracy and share of reactions per confidence bin.

    Bins are [0, e1), [e1, e2), ... [ek, 1]. With ``cumulative_below`` set,
    each bin whose upper edge is at or below it reports the accuracy of all
    reactions from 0 up to its upper edge, which steadies sparse low bins.
    """
    if len(confidences) != len(correct):
        raise ValueError("confidences and correctness flags differ in length")
    if not confidences:
        raise ValueError("no reactions to bin")
    bounds = [0.0, *sorted(edges), 1.0]
    if any(not 0 < e < 1 for e in edges) or len(set(bounds)) != len(bounds):
        raise ValueError("edges must be distinct and strictly inside (0, 1)")

    def index(c: float) -> int:
        for b in range(len(bounds) - 2, -1, -1):
            if c >= bounds[b]:
                return b
        return 0

    members: list[list[bool]] = [[] for _ in range(len(bounds) - 1)]
    for c, ok in zip(confidences, correct):
        members[index(c)].append(bool(ok))
    total = len(confidences)
    out = []
    for b, hits in enumerate(members):
        lo, hi = bounds[b], bounds[b + 1]
        pool = hits
        if cumulative_below is not None and hi <= cumulative_below:
            pool = [h for m in members[: b + 1] for h in m]
        acc = sum(pool) / len(pool) if pool else math.nan
        out.append(ConfidenceBin(lo, hi, acc, len(hits) / total, len(hits)))
    return out


@dataclass
class ReactionOutcome:
    reaction_id: str
    target: str
    class_label: str | None = None
    ranked: list[RankedCandidate] = field(default_factory=list)
    confidence: float | None = None
    hits: dict[str, bool] = field(default_factory=dict)  # metric name -> correct

    @property
    def stereo(self) -> bool:
        return contains_stereo(self.target)


def metric_names(n_values: Sequence[int], maxfrag: bool) -> list[str]:
    names = [f"top{n}" for n in n_values]
    if maxfrag:
        names += [f"maxfrag_top{n}" for n in n_values]
    return names


def score_reactions(entries: Iterable[PredictionEntry], targets: Mapping[str, str],
                    n_values: Sequence[int] = (1, 2, 5), maxfrag: bool = True, mode: str = DEDUP_FIRST,
                    class_labels: Mapping[str, str | None] | None = None) -> list[ReactionOutcome]:
    """Rank every target reaction's predictions and record hits per metric, in target order."""
    if not n_values or any(n < 1 for n in n_values) or list(n_values) != sorted(set(n_values)):
        raise ValueError("n_values must be positive and strictly ascending")
    groups = group_by_reaction(entries)
    out = []
    for rid, target in targets.items():
        group = groups.get(rid, [])
        ranked = rank_predictions(group, mode)
        o = ReactionOutcome(rid, target, (class_labels or {}).get(rid), ranked, confidence(group))
        for n in n_values:
            o.hits[f"top{n}"] = top_n_hit(ranked, target, n)
            if maxfrag:
                o.hits[f"maxfrag_top{n}"] = maxfrag_hit(ranked, target, n)
        out.append(o)
    return out


GROUP_KEYS = ("stereo", "class")


@dataclass(frozen=True)
class ReportRow:
    metric: str
    group: str
    value: float
    count: int


def subset_report(outcomes: Sequence[ReactionOutcome], keys: Sequence[str] = ()) -> list[ReportRow]:
    """Every metric over all reactions, then per group of each requested key."""
    for key in keys:
        if key not in GROUP_KEYS:
            raise ValueError(f"unknown grouping key {key!r}; expected one of {GROUP_KEYS}")
    groups: dict[str, list[ReactionOutcome]] = {"all": list(outcomes)}
    for key in keys:
        split: dict[str, list[ReactionOutcome]] = defaultdict(list)
        for o in outcomes:
            if key == "stereo":
                split["stereo" if o.stereo else "no_stereo"].append(o)
            else:
                split[f"class={o.class_label}"].append(o)
        groups.update(sorted(split.items()))
    metrics: list[str] = []
    for o in outcomes:
        metrics += [m for m in o.hits if m not in metrics]
    rows = []
    for metric in metrics:
        for name, members in groups.items():
            value = sum(o.hits[metric] for o in members) / len(members) if members else math.nan
            rows.append(ReportRow(metric, name, value, len(members)))
    return rows


@dataclass(frozen=True)
class BeamPositionRow:
    position: int
    accuracy: float  # matching share of the valid predictions at this position
    invalid_rate: float
    count: int


def beam_position_report(entries: Iterable[PredictionEntry], targets: Mapping[str, str]) -> list[BeamPositionRow]:
    """Accuracy and invalid share per raw beam position, over every variant of every reaction."""
    stats: dict[int, list[int]] = defaultdict(lambda: [0, 0, 0])  # total, invalid, correct
    wanted = {rid: normalize_prediction(t) for rid, t in targets.items()}
    for e in entries:
        if e.reaction_id not in wanted:
            continue
        s = stats[e.beam_position]
        s[0] += 1
        text = e.normalized
        if text is None:
            s[1] += 1
        elif text == wanted[e.reaction_id]:
            s[2] += 1
    rows = []
    for pos in sorted(stats):
        total, invalid, correct = stats[pos]
        valid = total - invalid
        rows.append(BeamPositionRow(pos, correct / valid if valid else 0.0, invalid / total, total))
    return rows
