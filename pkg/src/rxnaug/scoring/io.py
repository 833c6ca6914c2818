"""Prediction files (TSV) and report tables (CSV).

Prediction file layout::

    #rxnaug-predictions v1
    reaction_id<TAB>variant_index<TAB>beam_position<TAB>decoder_score<TAB>raw_text
    ...

Report files start with ``#rxnaug-report v1`` followed by a CSV header.
"""

from __future__ import annotations

import csv
import io
import math
import os
from typing import Iterable, Sequence

from ..reactions import atomic_write_text
from .metrics import BeamPositionRow, ConfidenceBin, ReportRow
from .ranking import PredictionEntry

PREDICTION_HEADER = "#rxnaug-predictions v1"
PREDICTION_COLUMNS = ("reaction_id", "variant_index", "beam_position", "decoder_score", "raw_text")
REPORT_HEADER = "#rxnaug-report v1"


class PredictionFormatError(ValueError):
    def __init__(self, message: str, lineno: int):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


def format_predictions(entries: Iterable[PredictionEntry]) -> str:
    lines = [PREDICTION_HEADER, "\t".join(PREDICTION_COLUMNS)]
    for e in entries:
        for text in (e.reaction_id, e.raw_text):
            if "\t" in text or "\n" in text or "\r" in text:
                raise ValueError(f"tab or line break in prediction field {text!r}")
        lines.append(f"{e.reaction_id}\t{e.variant_index}\t{e.beam_position}\t{e.decoder_score!r}\t{e.raw_text}")
    return "\n".join(lines) + "\n"


def write_predictions(entries: Iterable[PredictionEntry], path: str | os.PathLike) -> None:
    atomic_write_text(path, format_predictions(entries))


def parse_predictions(text: str) -> list[PredictionEntry]:
    # only LF (or CRLF) ends a line; str.splitlines would also split on form feeds and the like
    lines = [l[:-1] if l.endswith("\r") else l for l in text.split("\n")]
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != PREDICTION_HEADER:
        raise PredictionFormatError(f"missing {PREDICTION_HEADER!r} header", 1)
    if len(lines) < 2 or tuple(lines[1].split("\t")) != PREDICTION_COLUMNS:
        raise PredictionFormatError("unexpected column header", 2)
    out = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise PredictionFormatError(f"expected 5 tab-separated fields, got {len(parts)}", lineno)
        rid, n, i, score, raw = parts
        try:
            entry = PredictionEntry(rid, int(n), int(i), raw, float(score))
        except ValueError as exc:
            raise PredictionFormatError(str(exc), lineno) from None
        if entry.variant_index < 0 or entry.beam_position < 0:
            raise PredictionFormatError("negative variant or beam index", lineno)
        out.append(entry)
    return out


def read_predictions(path: str | os.PathLike) -> list[PredictionEntry]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_predictions(fh.read())


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if isinstance(v, float) and math.isnan(v) else v for v in row])
    return buf.getvalue()


def _split_metric(metric: str) -> tuple[str, str]:
    # "maxfrag_top5" -> ("maxfrag_top", "5")
    stem = metric.rstrip("0123456789")
    return stem, metric[len(stem):]


def write_report(rows: Iterable[ReportRow], path: str | os.PathLike) -> None:
    """Columns metric, group, n, value, count."""
    body = []
    for r in rows:
        stem, n = _split_metric(r.metric)
        body.append((stem, r.group, n, f"{r.value:.6f}" if not math.isnan(r.value) else math.nan, r.count))
    atomic_write_text(path, _csv(("metric", "group", "n", "value", "count"), body))


def write_confidence_curve(bins: Iterable[ConfidenceBin], path: str | os.PathLike) -> None:
    atomic_write_text(path, _csv(("confidence_upper", "accuracy"),
                                 [(f"{b.upper:g}", b.accuracy if math.isnan(b.accuracy) else f"{b.accuracy:.6f}")
                                  for b in bins]))


def write_beam_position_curve(rows: Iterable[BeamPositionRow], path: str | os.PathLike) -> None:
    atomic_write_text(path, _csv(("beam_position", "accuracy", "invalid_rate"),
                                 [(r.position, f"{r.accuracy:.6f}", f"{r.invalid_rate:.6f}") for r in rows]))


def read_report(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if first != REPORT_HEADER:
            raise PredictionFormatError(f"missing {REPORT_HEADER!r} header", 1)
        return list(csv.DictReader(fh))
