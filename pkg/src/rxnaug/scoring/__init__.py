"""Normalization, ranking and accuracy metrics for predicted reactions."""

from .accuracy import character_accuracy, sequence_accuracy
from .io import (PredictionFormatError, read_predictions, read_report, write_beam_position_curve,
                 write_confidence_curve, write_predictions, write_report)
from .metrics import (BeamPositionRow, ConfidenceBin, ReactionOutcome, ReportRow, beam_position_report,
                      confidence_bins, maxfrag_accuracy, maxfrag_hit, relative_error_reduction, score_reactions,
                      subset_report, top_n_accuracy, top_n_hit)
from .ranking import (DEDUP_FIRST, KEEP_ALL, PredictionEntry, RankedCandidate, cleaned_beams, confidence,
                      group_by_reaction, normalize_prediction, position_weight, rank_predictions)
