"""Training/test pair generation under the xN, xNR, xNF, xNS and xNM protocols.

xN   variant 0 canonical/canonical, then random source with canonical target.
xNR  source as in xN; the target is one random enumeration fixed per record.
xNF  variant 0 canonical, then random source and random target fragments,
     fragment order unchanged.
xNS  xNF with the reactant-side fragments shuffled.
xNM  xNS, each pair followed by its inverse: "." + reactants -> product.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from typing import Sequence

from .reactions import (
    FORWARD_PREFIX,
    RETRO,
    AugmentedPair,
    ReactionRecord,
    canonical_side,
    largest_indices,
)
from .smiles import Molecule, canonicalize, enumerate_random

PROTOCOLS = ("xN", "xNR", "xNF", "xNS", "xNM")
_NAME = re.compile(r"^x(\d+)([RFSM]?)$")


@dataclass(frozen=True)
class AugmentationSpec:
    protocol: str = "xN"
    n: int = 1
    master_seed: int = 0
    keep_largest_k: int | None = None
    include_reagents: bool = True

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.n < 1:
            raise ValueError("augmentation count n must be at least 1")
        if not 0 <= self.master_seed < 1 << 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.keep_largest_k is not None and self.keep_largest_k < 1:
            raise ValueError("keep_largest_k must be positive")

    @classmethod
    def from_name(cls, name: str, master_seed: int = 0, **kwargs) -> AugmentationSpec:
        """``"x5F"`` -> protocol xNF with n=5."""
        m = _NAME.match(name)
        if not m:
            raise ValueError(f"cannot read augmentation name {name!r}")
        return cls("xN" + m.group(2), int(m.group(1)), master_seed, **kwargs)

    @property
    def name(self) -> str:
        return f"x{self.n}{self.protocol[2:]}"

    @property
    def pairs_per_record(self) -> int:
        return 2 * self.n if self.protocol == "xNM" else self.n


def record_seed(master_seed: int, key: str) -> int:
    """64-bit seed for one record, independent of its position in the dataset."""
    digest = hashlib.blake2b(f"{master_seed}\x1f{key}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def record_key(record: ReactionRecord) -> str:
    return record.id if record.id is not None else record.canonical_reaction()


def _trim(mols: Sequence[Molecule], k: int | None) -> list[int]:
    """Indices of the fragments kept on a target side, in their original order."""
    if k is None or k >= len(mols):
        return list(range(len(mols)))
    return largest_indices([canonicalize(m) for m in mols], [m.heavy_atom_count for m in mols], k)


class _Writer:
    """Writes one record's sides canonically or randomly from a per-record stream."""

    def __init__(self, rng: random.Random, shuffle: bool):
        self.rng = rng
        self.shuffle = shuffle

    def canonical(self, groups: Sequence[Sequence[Molecule]]) -> str:
        return ">".join(canonical_side(g) for g in groups)

    def random(self, groups: Sequence[Sequence[Molecule]], shuffle: bool = False) -> str:
        out = []
        for g in groups:
            texts = [enumerate_random(m, self.rng.getrandbits(64)) for m in g]
            if shuffle and self.shuffle:
                self.rng.shuffle(texts)
            out.append(".".join(texts))
        return ">".join(out)


def augment_record(record: ReactionRecord, spec: AugmentationSpec) -> list[AugmentedPair]:
    rng = random.Random(record_seed(spec.master_seed, record_key(record)))
    writer = _Writer(rng, shuffle=spec.protocol in ("xNS", "xNM"))
    rid = record.id or ""
    precursors = record.precursors if spec.include_reagents else record.reactants
    mixed = spec.protocol == "xNM"
    retro = mixed or record.direction == RETRO

    if retro:
        kept = _trim(precursors, spec.keep_largest_k)
        source_groups = [record.products]
        full_target = [precursors]
        target_groups = [[precursors[i] for i in kept]]
    else:
        kept = _trim(record.products, spec.keep_largest_k)
        if spec.include_reagents and record.reagents:
            source_groups = [record.reactants, record.reagents]
        else:
            source_groups = [precursors]
        full_target = [record.products]
        target_groups = [[record.products[i] for i in kept]]
    trimmed = len(kept) < len(full_target[0])

    fixed_target = writer.random(target_groups) if spec.protocol == "xNR" else None

    pairs: list[AugmentedPair] = []
    for v in range(spec.n):
        if v == 0:
            source = writer.canonical(source_groups)
            target = fixed_target if fixed_target is not None else writer.canonical(target_groups)
            reactant_text = writer.canonical(full_target)
        else:
            # reactant-side fragments are shuffled under S/M wherever they sit
            source = writer.random(source_groups, shuffle=not retro)
            if fixed_target is not None:
                target = fixed_target
            elif spec.protocol == "xN":
                target = writer.canonical(target_groups)
            elif trimmed:
                target = writer.random(target_groups, shuffle=retro)
            else:
                target = writer.random(full_target, shuffle=retro)
            reactant_text = target
        if not retro:
            source = FORWARD_PREFIX + source
        pairs.append(AugmentedPair(source, target, v, rid, spec.name))
        if mixed:
            if trimmed and v > 0:
                # the retro target lost fragments; the forward line still needs every reactant
                reactant_text = writer.random(full_target, shuffle=True)
            pairs.append(AugmentedPair(FORWARD_PREFIX + reactant_text, source, v, rid, spec.name, inverted=True))
    return pairs


def augment(records: Sequence[ReactionRecord], spec: AugmentationSpec) -> list[AugmentedPair]:
    """Augmented pairs for every record, grouped by record in input order."""
    out: list[AugmentedPair] = []
    for rec in records:
        out.extend(augment_record(rec, spec))
    return out


def augment_test_sources(records: Sequence[ReactionRecord], n: int, master_seed: int = 0,
                         include_reagents: bool = True) -> list[AugmentedPair]:
    """Test-time augmentation: canonical plus ``n - 1`` random sources, canonical targets."""
    return augment(records, AugmentationSpec("xN", n, master_seed, include_reagents=include_reagents))

