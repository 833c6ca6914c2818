"""End-to-end runs: augment, train, average, predict with test-time augmentation, score."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import torch

from .augment import AugmentationSpec, augment, augment_test_sources
from .model import (DecodeConfig, ModelConfig, Seq2SeqTransformer, TrainConfig, UnknownCharacterError, Vocabulary,
                    average_checkpoints, beam_decode_batch, build_vocab, evaluate, train)
from .reactions import AugmentedPair, ReactionRecord
from .scoring import PredictionEntry, ReactionOutcome, score_reactions
from .toy import toy_split


def predict_entries(model: Seq2SeqTransformer, vocab: Vocabulary, sources: Sequence[AugmentedPair],
                    decode: DecodeConfig, batch_size: int = 50) -> list[PredictionEntry]:
    """Beam predictions for each augmented source, one entry per beam position.

    Sources containing characters the vocabulary lacks get no predictions.
    """
    usable = []
    for p in sources:
        try:
            vocab.encode(p.source)
        except UnknownCharacterError:
            continue
        usable.append(p)
    beams = beam_decode_batch(model, vocab, [p.source for p in usable], decode, batch_size=batch_size)
    out = []
    for p, beam in zip(usable, beams):
        for i, (text, score) in enumerate(beam):
            out.append(PredictionEntry(p.reaction_id, p.variant_index, i, text, score))
    return out


def reference_targets(records: Sequence[ReactionRecord]) -> dict[str, str]:
    return {r.id: r.canonical_pair()[1] for r in records}


@dataclass(frozen=True)
class ToyExperimentConfig:
    protocol: str = "x1"
    n_train: int = 500
    n_test: int = 100
    data_seed: int = 0
    seed: int = 0
    test_augmentations: int = 10
    decode: DecodeConfig = DecodeConfig(beam=5, max_output_length=60)
    model: ModelConfig = ModelConfig(dropout=0.0)
    training: TrainConfig = TrainConfig(epochs=100, batch_chars=800, learning_rate=2e-3, warmup_steps=200,
                                        eval_subsample=100, eval_every=2)
    average: bool = True


@dataclass
class ToyExperimentResult:
    config: ToyExperimentConfig
    outcomes: list[ReactionOutcome]
    entries: list[PredictionEntry]
    train_exact_match: float  # of the model used for prediction
    history: list = field(default_factory=list)
    seconds: float = 0.0

    def accuracy(self, metric: str = "top1") -> float:
        return sum(o.hits[metric] for o in self.outcomes) / len(self.outcomes)


def run_toy_experiment(cfg: ToyExperimentConfig) -> ToyExperimentResult:
    start = time.perf_counter()
    train_records, test_records = toy_split(cfg.n_train, cfg.n_test, cfg.data_seed)
    pairs = augment(train_records, AugmentationSpec.from_name(cfg.protocol, master_seed=cfg.seed))
    vocab = build_vocab(pairs)
    torch.manual_seed(cfg.seed)
    model = Seq2SeqTransformer(cfg.model, len(vocab))
    result = train(model, vocab, pairs, replace(cfg.training, seed=cfg.seed))
    if cfg.average and len(result.best) > 1:
        ckpt = average_checkpoints(result.best)
        ckpt.vocab = vocab
        model = ckpt.build_model()
    else:
        model.load_state_dict(result.best[0].params)
    # train accuracy of the model actually used; the first variant of each record is canonical
    canonical = [p for p in pairs if p.variant_index == 0 and not p.inverted]
    _, train_exact = evaluate(model, vocab, canonical[: cfg.training.eval_subsample or len(canonical)])
    sources = augment_test_sources(test_records, cfg.test_augmentations, master_seed=cfg.seed)
    entries = predict_entries(model, vocab, sources, cfg.decode)
    outcomes = score_reactions(entries, reference_targets(test_records), n_values=(1, 5),
                               class_labels={r.id: r.class_label for r in test_records})
    return ToyExperimentResult(cfg, outcomes, entries, train_exact, result.history, time.perf_counter() - start)
