"""Greedy and beam decoding with temperature.

The search routines work on any ``step(prefixes, rows) -> logits`` callable:
``prefixes`` is a (R, t) tensor of token ids beginning with the start token
and ``rows`` maps each prefix to its source index. The transformer wrappers
at the bottom build that callable from an encoded batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import torch
from torch import Tensor
from torch.nn import functional as F

from .transformer import Seq2SeqTransformer
from .vocab import BOS_ID, EOS_ID, PAD_ID, Vocabulary

StepFn = Callable[[Tensor, Tensor], Tensor]


@dataclass(frozen=True)
class DecodeConfig:
    beam: int = 1
    temperature: float = 1.0
    max_output_length: int = 200

    def __post_init__(self):
        if self.beam < 1:
            raise ValueError("beam must be a positive integer")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.max_output_length < 1:
            raise ValueError("max_output_length must be positive")


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[int, ...]  # generated tokens, end token excluded
    score: float  # sum of tempered log-probabilities, end token included
    finished: bool = True


def tempered_log_probs(logits: Tensor, temperature: float, banned: Sequence[int] = ()) -> Tensor:
    """log softmax(logits / t) with ``banned`` tokens given zero probability."""
    scaled = logits / temperature
    if banned:
        scaled = scaled.clone()
        scaled[..., list(banned)] = float("-inf")
    return F.log_softmax(scaled, dim=-1)


def greedy_search(step: StepFn, n_sources: int, *, bos: int, eos: int, max_len: int,
                  temperature: float = 1.0, banned: Sequence[int] = ()) -> list[Hypothesis]:
    prefix = torch.full((n_sources, 1), bos, dtype=torch.long)
    scores = torch.zeros(n_sources, dtype=torch.float64)
    alive = torch.ones(n_sources, dtype=torch.bool)
    rows = torch.arange(n_sources)
    for _ in range(max_len):
        idx = alive.nonzero().flatten()
        if idx.numel() == 0:
            break
        logp = tempered_log_probs(step(prefix[idx], rows[idx]), temperature, banned)
        tok = logp.argmax(dim=-1)
        scores[idx] += logp.gather(1, tok[:, None]).squeeze(1).double()
        nxt = torch.full((n_sources,), eos, dtype=torch.long)
        nxt[idx] = tok
        prefix = torch.cat([prefix, nxt[:, None]], dim=1)
        alive[idx] = tok.ne(eos)
    out = []
    for i in range(n_sources):
        toks = prefix[i, 1:].tolist()
        finished = eos in toks
        if finished:
            toks = toks[: toks.index(eos)]
        out.append(Hypothesis(tuple(toks), float(scores[i]), finished))
    return out


def beam_search(step: StepFn, n_sources: int, beam: int, *, bos: int, eos: int, max_len: int,
                temperature: float = 1.0, banned: Sequence[int] = ()) -> list[list[Hypothesis]]:
    """Up to ``beam`` unique hypotheses per source, best first.

    Each step ranks every extension of every live hypothesis. An end token
    ranked within the top ``beam`` freezes its hypothesis; the best ``beam``
    other extensions stay live. Frozen hypotheses compete on total
    log-probability without length normalization. A source stops once it
    holds ``beam`` frozen hypotheses and no live one can still beat them;
    at ``max_len`` the surviving live hypotheses are ranked in unfinished.
    With ``beam=1`` this is exactly greedy search.
    """
    k = beam
    prefix = torch.full((n_sources * k, 1), bos, dtype=torch.long)
    scores = torch.full((n_sources, k), float("-inf"), dtype=torch.float64)
    scores[:, 0] = 0.0
    rows = torch.arange(n_sources).repeat_interleave(k)
    finished: list[list[tuple[float, int, tuple[int, ...]]]] = [[] for _ in range(n_sources)]
    done = [False] * n_sources
    serial = 0  # insertion order breaks exact score ties deterministically

    for _ in range(max_len):
        flat = scores.flatten()
        active = torch.tensor([not done[r] for r in rows.tolist()]) & torch.isfinite(flat)
        idx = active.nonzero().flatten()
        if idx.numel() == 0:
            break
        logp = tempered_log_probs(step(prefix[idx], rows[idx]), temperature, banned).double()
        vocab = logp.shape[1]
        cand = torch.full((n_sources * k, vocab), float("-inf"), dtype=torch.float64)
        cand[idx] = flat[idx, None] + logp
        cand = cand.view(n_sources, k * vocab)
        order_scores, order = torch.sort(cand, dim=1, descending=True, stable=True)
        order_scores, order = order_scores[:, : 2 * k].tolist(), order[:, : 2 * k].tolist()

        new_prefix = prefix.new_full((n_sources * k, prefix.shape[1] + 1), PAD_ID)
        new_scores = torch.full_like(scores, float("-inf"))
        for s in range(n_sources):
            if done[s]:
                continue
            live = 0
            for rank, (sc, flat_i) in enumerate(zip(order_scores[s], order[s])):
                if sc == float("-inf"):
                    break
                slot, tok = divmod(flat_i, vocab)
                src_row = s * k + slot
                if tok == eos:
                    if rank < k:
                        finished[s].append((sc, serial, tuple(prefix[src_row, 1:].tolist())))
                        serial += 1
                    continue
                if live < k:
                    dst = s * k + live
                    new_prefix[dst, :-1] = prefix[src_row]
                    new_prefix[dst, -1] = tok
                    new_scores[s, live] = sc
                    live += 1
            finished[s].sort(key=lambda f: (-f[0], f[1]))
            best_live = float(new_scores[s, 0]) if live else float("-inf")
            if live == 0 or (len(finished[s]) >= k and best_live <= finished[s][k - 1][0]):
                done[s] = True
        prefix, scores = new_prefix, new_scores
        if all(done):
            break

    results = []
    for s in range(n_sources):
        hyps = [Hypothesis(toks, sc) for sc, _, toks in finished[s]]
        if not done[s]:
            # length limit reached: live hypotheses compete with the finished ones
            for slot in range(k):
                sc = float(scores[s, slot])
                if sc != float("-inf"):
                    hyps.append(Hypothesis(tuple(prefix[s * k + slot, 1:].tolist()), sc, finished=False))
        hyps.sort(key=lambda h: -h.score)
        results.append(hyps[:k])
    return results


# --- transformer wrappers ----------------------------------------------------


def encode_sources(vocab: Vocabulary, sources: Sequence[str]) -> Tensor:
    seqs = [vocab.encode(s, pair_id=i) for i, s in enumerate(sources)]
    width = max(1, max(len(s) for s in seqs))
    batch = torch.full((len(seqs), width), PAD_ID, dtype=torch.long)
    for i, s in enumerate(seqs):
        batch[i, : len(s)] = torch.tensor(s, dtype=torch.long)
    return batch


def _model_step(model: Seq2SeqTransformer, src: Tensor) -> StepFn:
    memory, pad = model.encode(src)

    def step(prefix: Tensor, rows: Tensor) -> Tensor:
        return model.decode(prefix, memory[rows], pad[rows])[:, -1, :]

    return step


def _max_len(model: Seq2SeqTransformer, config: DecodeConfig) -> int:
    return min(config.max_output_length, model.config.max_sequence_length - 1)


_BANNED = (PAD_ID, BOS_ID)


def greedy_decode_batch(model: Seq2SeqTransformer, vocab: Vocabulary, sources: Sequence[str],
                        config: DecodeConfig = DecodeConfig(), batch_size: int = 64) -> list[tuple[str, float]]:
    out: list[tuple[str, float]] = []
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for start in range(0, len(sources), batch_size):
                chunk = sources[start:start + batch_size]
                step = _model_step(model, encode_sources(vocab, chunk))
                for h in greedy_search(step, len(chunk), bos=BOS_ID, eos=EOS_ID, max_len=_max_len(model, config),
                                       temperature=config.temperature, banned=_BANNED):
                    out.append((vocab.decode(h.tokens), h.score))
    finally:
        model.train(was_training)
    return out


def greedy_decode(model: Seq2SeqTransformer, vocab: Vocabulary, source: str,
                  config: DecodeConfig = DecodeConfig()) -> tuple[str, float]:
    """Argmax decoding; returns the text and its summed log-probability."""
    return greedy_decode_batch(model, vocab, [source], config)[0]


def check_beam(vocab: Vocabulary, beam: int) -> None:
    if beam > vocab.max_beam:
        raise ValueError(f"beam {beam} exceeds the {vocab.max_beam}-character target vocabulary")


def beam_decode_batch(model: Seq2SeqTransformer, vocab: Vocabulary, sources: Sequence[str],
                      config: DecodeConfig, batch_size: int = 32) -> list[list[tuple[str, float]]]:
    check_beam(vocab, config.beam)
    out: list[list[tuple[str, float]]] = []
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for start in range(0, len(sources), batch_size):
                chunk = sources[start:start + batch_size]
                step = _model_step(model, encode_sources(vocab, chunk))
                for hyps in beam_search(step, len(chunk), config.beam, bos=BOS_ID, eos=EOS_ID,
                                        max_len=_max_len(model, config), temperature=config.temperature,
                                        banned=_BANNED):
                    out.append([(vocab.decode(h.tokens), h.score) for h in hyps])
    finally:
        model.train(was_training)
    return out


def beam_decode(model: Seq2SeqTransformer, vocab: Vocabulary, source: str,
                config: DecodeConfig) -> list[tuple[str, float]]:
    """Up to ``config.beam`` unique sequences with scores, best first."""
    return beam_decode_batch(model, vocab, [source], config)[0]
