"""Training loop: character-budget batches, Adam with warmup, best-checkpoint tracking."""

from __future__ import annotations

import csv
import math
import os
import random
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import torch
from torch import Tensor
from torch.nn import functional as F

from ..scoring.accuracy import character_accuracy
from .checkpoint import Checkpoint
from .decode import DecodeConfig, greedy_decode_batch
from .transformer import Seq2SeqTransformer
from .vocab import BOS_ID, EOS_ID, PAD_ID, Vocabulary

LOG_COLUMNS = ("epoch", "loss", "char_acc", "exact_acc")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_chars: int = 3000
    learning_rate: float = 1e-3  # peak, reached at the end of warmup
    warmup_steps: int = 200
    betas: tuple[float, float] = (0.9, 0.98)
    eps: float = 1e-9
    max_grad_norm: float | None = None
    seed: int = 0
    keep_best: int = 5
    eval_subsample: int | None = None  # None: measure accuracy on every training pair
    eval_every: int = 1
    stop_at_exact_match: float | None = None
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_chars < 1 or self.keep_best < 1 or self.eval_every < 1:
            raise ValueError("epochs, batch_chars, keep_best and eval_every must be positive")
        if self.learning_rate <= 0 or self.warmup_steps < 0:
            raise ValueError("learning rate must be positive and warmup non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


class NonFiniteLossError(FloatingPointError):
    def __init__(self, epoch: int, step: int, value: float, pair_ids: Sequence):
        self.epoch, self.step, self.value, self.pair_ids = epoch, step, value, list(pair_ids)
        shown = ", ".join(map(str, self.pair_ids[:10])) + (" ..." if len(self.pair_ids) > 10 else "")
        super().__init__(f"loss became {value} at epoch {epoch}, step {step}; batch pairs: {shown}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    char_acc: float
    exact_acc: float


@dataclass
class TrainResult:
    best: list[Checkpoint]  # highest train exact match first
    history: list[EpochStats]
    steps: int
    seconds: float


def warmup_inverse_sqrt(step: int, warmup: int) -> float:
    """Learning-rate multiplier: linear rise to 1 over ``warmup`` steps, then inverse square-root decay."""
    step = max(step, 1)
    if warmup == 0:
        return 1.0 / math.sqrt(step)
    return min(step / warmup, math.sqrt(warmup / step))


def char_batches(lengths: Sequence[int], batch_chars: int, order: Sequence[int] | None = None) -> list[list[int]]:
    """Fill batches greedily in ``order`` while their character total stays within ``batch_chars``.

    A pair longer than the budget gets a batch of its own.
    """
    order = range(len(lengths)) if order is None else order
    batches: list[list[int]] = []
    current: list[int] = []
    used = 0
    for i in order:
        n = lengths[i]
        if current and used + n > batch_chars:
            batches.append(current)
            current, used = [], 0
        current.append(i)
        used += n
    if current:
        batches.append(current)
    return batches


def _pad(seqs: Sequence[Sequence[int]]) -> Tensor:
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), PAD_ID, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.tensor(s, dtype=torch.long)
    return out


class EncodedPairs:
    """Token ids for (source, target) pairs; raises on characters outside the vocabulary."""

    def __init__(self, vocab: Vocabulary, pairs: Sequence):
        self.sources: list[list[int]] = []
        self.targets: list[list[int]] = []
        self.texts: list[tuple[str, str]] = []
        self.ids: list = []
        for i, item in enumerate(pairs):
            src, tgt = (item.source, item.target) if hasattr(item, "source") else item
            pair_id = getattr(item, "reaction_id", "") or i
            self.ids.append(pair_id)
            self.sources.append(vocab.encode(src, pair_id=pair_id))
            self.targets.append(vocab.encode(tgt, pair_id=pair_id))
            self.texts.append((src, tgt))

    def __len__(self) -> int:
        return len(self.sources)

    def lengths(self) -> list[int]:
        return [len(s) + len(t) for s, t in zip(self.sources, self.targets)]

    def batch(self, idx: Sequence[int]) -> tuple[Tensor, Tensor, Tensor]:
        src = _pad([self.sources[i] for i in idx])
        tgt_in = _pad([[BOS_ID] + self.targets[i] for i in idx])
        tgt_out = _pad([self.targets[i] + [EOS_ID] for i in idx])
        return src, tgt_in, tgt_out


def sequence_loss(model: Seq2SeqTransformer, src: Tensor, tgt_in: Tensor, tgt_out: Tensor,
                  reduction: str = "mean") -> Tensor:
    logp = model(src, tgt_in)
    return F.nll_loss(logp.reshape(-1, logp.shape[-1]), tgt_out.reshape(-1), ignore_index=PAD_ID,
                      reduction=reduction)


def evaluate(model: Seq2SeqTransformer, vocab: Vocabulary, pairs: Sequence, batch_size: int = 64,
             max_output_length: int | None = None) -> tuple[float, float]:
    """(mean character accuracy, exact-match fraction) of greedy decoding against the targets."""
    texts = [(p.source, p.target) if hasattr(p, "source") else tuple(p) for p in pairs]
    if not texts:
        return math.nan, math.nan
    longest = max(len(t) for _, t in texts)
    cfg = DecodeConfig(max_output_length=max_output_length or longest + 10)
    preds = greedy_decode_batch(model, vocab, [s for s, _ in texts], cfg, batch_size=batch_size)
    chars = sum(character_accuracy(p, t) for (p, _), (_, t) in zip(preds, texts))
    exact = sum(p == t for (p, _), (_, t) in zip(preds, texts))
    return chars / len(texts), exact / len(texts)


def _rank_key(c: Checkpoint) -> tuple[float, int]:
    return (c.train_exact_match, c.epoch)  # ties favor the later epoch


def train(model: Seq2SeqTransformer, vocab: Vocabulary, pairs: Sequence, config: TrainConfig = TrainConfig(), *,
          log_path: str | os.PathLike | None = None,
          on_epoch: Callable[[EpochStats], None] | None = None) -> TrainResult:
    """Train in place and return the ``keep_best`` checkpoints by train exact match."""
    data = EncodedPairs(vocab, pairs)
    if not len(data):
        raise ValueError("no training pairs")
    too_long = max(max(len(s) for s in data.sources), max(len(t) for t in data.targets) + 1)
    if too_long > model.config.max_sequence_length:
        raise ValueError(f"a pair needs {too_long} positions; model allows {model.config.max_sequence_length}")

    torch.manual_seed(config.seed)
    previous_mode = torch.are_deterministic_algorithms_enabled()
    if config.deterministic:
        torch.use_deterministic_algorithms(True)
    rng = random.Random(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=config.betas, eps=config.eps)
    schedule = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda s: warmup_inverse_sqrt(s + 1, config.warmup_steps))
    lengths = data.lengths()
    eval_idx = list(range(len(data)))
    if config.eval_subsample is not None and config.eval_subsample < len(data):
        eval_idx = sorted(random.Random(config.seed + 1).sample(eval_idx, config.eval_subsample))
    eval_pairs = [data.texts[i] for i in eval_idx]

    writer = None
    log_file = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_file = open(log_path, "w", newline="")
        writer = csv.writer(log_file)
        writer.writerow(LOG_COLUMNS)

    best: list[Checkpoint] = []
    history: list[EpochStats] = []
    steps = 0
    start = time.perf_counter()
    try:
        for epoch in range(1, config.epochs + 1):
            model.train()
            order = list(range(len(data)))
            rng.shuffle(order)
            total_loss, total_tokens = 0.0, 0
            for idx in char_batches(lengths, config.batch_chars, order):
                src, tgt_in, tgt_out = data.batch(idx)
                tokens = int(tgt_out.ne(PAD_ID).sum())
                loss = sequence_loss(model, src, tgt_in, tgt_out)
                if not torch.isfinite(loss):
                    raise NonFiniteLossError(epoch, steps + 1, loss.item(), [data.ids[i] for i in idx])
                optimizer.zero_grad(set_to_none=True)
                loss.backward()
                if config.max_grad_norm is not None:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), config.max_grad_norm)
                optimizer.step()
                schedule.step()
                steps += 1
                total_loss += loss.item() * tokens
                total_tokens += tokens
            last = epoch == config.epochs
            if epoch % config.eval_every and not last:
                continue
            char_acc, exact_acc = evaluate(model, vocab, eval_pairs)
            stats = EpochStats(epoch, total_loss / total_tokens, char_acc, exact_acc)
            history.append(stats)
            if writer is not None:
                writer.writerow([stats.epoch, f"{stats.loss:.6f}", f"{stats.char_acc:.6f}", f"{stats.exact_acc:.6f}"])
                log_file.flush()
            if on_epoch is not None:
                on_epoch(stats)
            best.append(Checkpoint.from_model(model, epoch, exact_acc, vocab))
            best.sort(key=_rank_key, reverse=True)
            del best[config.keep_best:]
            if config.stop_at_exact_match is not None and exact_acc >= config.stop_at_exact_match:
                break
    finally:
        if log_file is not None:
            log_file.close()
        torch.use_deterministic_algorithms(previous_mode)
    model.eval()
    return TrainResult(best, history, steps, time.perf_counter() - start)
