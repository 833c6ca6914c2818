"""Character vocabulary shared by encoder and decoder."""

from __future__ import annotations

from typing import Iterable, Sequence

PAD, BOS, EOS = "<pad>", "<bos>", "<eos>"
SPECIALS = (PAD, BOS, EOS)
PAD_ID, BOS_ID, EOS_ID = 0, 1, 2


class UnknownCharacterError(KeyError):
    def __init__(self, char: str, pair_id=None):
        self.char = char
        self.pair_id = pair_id
        where = f" in pair {pair_id}" if pair_id is not None else ""
        super().__init__(f"character {char!r}{where} is not in the vocabulary")

    def __str__(self) -> str:
        return self.args[0]


class Vocabulary:
    """Specials first, then characters in code-point order.

    ``target_chars`` counts the distinct characters seen on target sides;
    it caps the beam width.
    """

    def __init__(self, chars: Iterable[str], target_chars: Iterable[str] | None = None):
        chars = sorted(set(chars))
        if any(len(c) != 1 for c in chars):
            raise ValueError("vocabulary entries must be single characters")
        self.chars: tuple[str, ...] = tuple(chars)
        self.target_chars: tuple[str, ...] = tuple(sorted(set(target_chars))) if target_chars is not None else self.chars
        if not set(self.target_chars) <= set(self.chars):
            raise ValueError("target characters must be part of the vocabulary")
        self.tokens: tuple[str, ...] = SPECIALS + self.chars
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and (self.tokens, self.target_chars) == (other.tokens, other.target_chars)

    def __repr__(self) -> str:
        return f"Vocabulary({''.join(self.chars)!r}, size={len(self)})"

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def max_beam(self) -> int:
        """Largest usable beam: the number of distinct target characters."""
        return len(self.target_chars)

    def encode(self, text: str, *, pair_id=None, add_bos: bool = False, add_eos: bool = False) -> list[int]:
        ids = [BOS_ID] if add_bos else []
        for ch in text:
            idx = self._index.get(ch)
            if idx is None or idx < len(SPECIALS):
                raise UnknownCharacterError(ch, pair_id)
            ids.append(idx)
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        """Characters up to the first end token; specials are skipped."""
        out = []
        for i in ids:
            i = int(i)
            if i == EOS_ID:
                break
            if i >= len(SPECIALS):
                out.append(self.tokens[i])
        return "".join(out)

    def to_dict(self) -> dict:
        return {"chars": "".join(self.chars), "target_chars": "".join(self.target_chars)}

    @classmethod
    def from_dict(cls, data: dict) -> Vocabulary:
        return cls(data["chars"], data["target_chars"])


def build_vocab(dataset: Iterable) -> Vocabulary:
    """Vocabulary over a dataset of strings or (source, target) pairs.

    Bare strings count as targets; pairs contribute both sides, and only
    their targets count toward the beam cap.
    """
    chars: set[str] = set()
    target: set[str] = set()
    seen = False
    for item in dataset:
        seen = True
        if isinstance(item, str):
            chars.update(item)
            target.update(item)
            continue
        source, tgt = (item.source, item.target) if hasattr(item, "source") else item
        chars.update(source)
        chars.update(tgt)
        target.update(tgt)
    if not seen:
        raise ValueError("cannot build a vocabulary from an empty dataset")
    return Vocabulary(chars, target)
