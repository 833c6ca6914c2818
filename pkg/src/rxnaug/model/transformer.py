"""Character-level encoder-decoder transformer (pre-norm, sinusoidal positions)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
from torch import Tensor, nn
from torch.nn import functional as F

from .vocab import PAD_ID


@dataclass(frozen=True)
class ModelConfig:
    layers: int = 2
    heads: int = 4
    width: int = 64
    ff_width: int = 256
    dropout: float = 0.1
    max_sequence_length: int = 256

    def __post_init__(self):
        if self.layers < 1 or self.heads < 1 or self.width < 1 or self.ff_width < 1:
            raise ValueError("layers, heads and widths must be positive")
        if self.width % self.heads:
            raise ValueError(f"width {self.width} is not divisible by {self.heads} heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.max_sequence_length < 2:
            raise ValueError("max_sequence_length must allow at least two tokens")

    @classmethod
    def reference(cls) -> ModelConfig:
        """Six layers, eight heads; width and feed-forward size of the base transformer."""
        return cls(layers=6, heads=8, width=512, ff_width=2048)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ModelConfig:
        return cls(**data)


def sinusoidal_positions(length: int, width: int) -> Tensor:
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    freq = torch.exp(torch.arange(0, width, 2, dtype=torch.float64) * (-math.log(10000.0) / width))
    table = torch.zeros(length, width, dtype=torch.float64)
    table[:, 0::2] = torch.sin(pos * freq)
    table[:, 1::2] = torch.cos(pos * freq[: width // 2])
    return table


class MultiHeadAttention(nn.Module):
    def __init__(self, width: int, heads: int, dropout: float):
        super().__init__()
        self.heads = heads
        self.head_width = width // heads
        self.q_proj = nn.Linear(width, width)
        self.k_proj = nn.Linear(width, width)
        self.v_proj = nn.Linear(width, width)
        self.out_proj = nn.Linear(width, width)
        self.dropout = nn.Dropout(dropout)

    def forward(self, query: Tensor, key: Tensor, value: Tensor, key_padding_mask: Tensor | None = None,
                causal: bool = False) -> tuple[Tensor, Tensor]:
        """Returns the attended output and the (batch, heads, query, key) weights."""
        b, tq, w = query.shape
        tk = key.shape[1]
        q = self.q_proj(query).view(b, tq, self.heads, self.head_width).transpose(1, 2)
        k = self.k_proj(key).view(b, tk, self.heads, self.head_width).transpose(1, 2)
        v = self.v_proj(value).view(b, tk, self.heads, self.head_width).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_width)
        blocked = None
        if key_padding_mask is not None:
            blocked = key_padding_mask[:, None, None, :]
        if causal:
            future = torch.ones(tq, tk, dtype=torch.bool, device=query.device).triu(tk - tq + 1)
            blocked = future if blocked is None else blocked | future
        if blocked is not None:
            # a finite fill keeps fully masked rows (padding queries) free of NaN
            scores = scores.masked_fill(blocked, torch.finfo(scores.dtype).min)
        weights = torch.softmax(scores, dim=-1)
        out = (self.dropout(weights) @ v).transpose(1, 2).reshape(b, tq, w)
        return self.out_proj(out), weights


class FeedForward(nn.Sequential):
    def __init__(self, width: int, ff_width: int, dropout: float):
        super().__init__(nn.Linear(width, ff_width), nn.ReLU(), nn.Dropout(dropout), nn.Linear(ff_width, width))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.width)
        self.attn = MultiHeadAttention(cfg.width, cfg.heads, cfg.dropout)
        self.norm2 = nn.LayerNorm(cfg.width)
        self.ff = FeedForward(cfg.width, cfg.ff_width, cfg.dropout)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: Tensor, pad: Tensor | None) -> Tensor:
        h = self.norm1(x)
        x = x + self.drop(self.attn(h, h, h, pad)[0])
        return x + self.drop(self.ff(self.norm2(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.width)
        self.self_attn = MultiHeadAttention(cfg.width, cfg.heads, cfg.dropout)
        self.norm2 = nn.LayerNorm(cfg.width)
        self.cross_attn = MultiHeadAttention(cfg.width, cfg.heads, cfg.dropout)
        self.norm3 = nn.LayerNorm(cfg.width)
        self.ff = FeedForward(cfg.width, cfg.ff_width, cfg.dropout)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, y: Tensor, memory: Tensor, memory_pad: Tensor | None, tgt_pad: Tensor | None) -> Tensor:
        h = self.norm1(y)
        y = y + self.drop(self.self_attn(h, h, h, tgt_pad, causal=True)[0])
        y = y + self.drop(self.cross_attn(self.norm2(y), memory, memory, memory_pad)[0])
        return y + self.drop(self.ff(self.norm3(y)))


class Seq2SeqTransformer(nn.Module):
    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        self.embed = nn.Embedding(vocab_size, config.width, padding_idx=PAD_ID)
        self.register_buffer("positions", sinusoidal_positions(config.max_sequence_length, config.width).float(),
                             persistent=False)
        self.encoder = nn.ModuleList(EncoderLayer(config) for _ in range(config.layers))
        self.decoder = nn.ModuleList(DecoderLayer(config) for _ in range(config.layers))
        self.encoder_norm = nn.LayerNorm(config.width)
        self.decoder_norm = nn.LayerNorm(config.width)
        self.generator = nn.Linear(config.width, vocab_size)
        self.drop = nn.Dropout(config.dropout)
        # embeddings are scaled up by sqrt(width), so start them at unit norm per token
        nn.init.normal_(self.embed.weight, std=config.width ** -0.5)
        with torch.no_grad():
            self.embed.weight[PAD_ID].zero_()

    def _check(self, tokens: Tensor) -> None:
        if tokens.dim() != 2:
            raise ValueError("token tensor must be (batch, length)")
        if tokens.shape[1] > self.config.max_sequence_length:
            raise ValueError(f"sequence length {tokens.shape[1]} exceeds {self.config.max_sequence_length}")
        if tokens.numel() and (int(tokens.min()) < 0 or int(tokens.max()) >= self.vocab_size):
            raise IndexError("token index outside the vocabulary")

    def _embed(self, tokens: Tensor) -> Tensor:
        x = self.embed(tokens) * math.sqrt(self.config.width)
        x = x + self.positions[: tokens.shape[1]].to(x.dtype)
        return self.drop(x)

    def encode(self, src: Tensor, src_pad: Tensor | None = None) -> tuple[Tensor, Tensor]:
        self._check(src)
        if src_pad is None:
            src_pad = src.eq(PAD_ID)
        x = self._embed(src)
        for layer in self.encoder:
            x = layer(x, src_pad)
        return self.encoder_norm(x), src_pad

    def decode(self, tgt_in: Tensor, memory: Tensor, memory_pad: Tensor | None,
               tgt_pad: Tensor | None = None) -> Tensor:
        """Unnormalized next-token scores for every target position."""
        self._check(tgt_in)
        y = self._embed(tgt_in)
        for layer in self.decoder:
            y = layer(y, memory, memory_pad, tgt_pad)
        return self.generator(self.decoder_norm(y))

    def forward(self, src: Tensor, tgt_in: Tensor, src_pad: Tensor | None = None,
                tgt_pad: Tensor | None = None) -> Tensor:
        """Log-probabilities (batch, target length, vocab) of the next token at each position."""
        memory, src_pad = self.encode(src, src_pad)
        if tgt_pad is None:
            tgt_pad = tgt_in.eq(PAD_ID)
        return F.log_softmax(self.decode(tgt_in, memory, src_pad, tgt_pad), dim=-1)


def attention_modules(model: nn.Module) -> list[MultiHeadAttention]:
    return [m for m in model.modules() if isinstance(m, MultiHeadAttention)]
