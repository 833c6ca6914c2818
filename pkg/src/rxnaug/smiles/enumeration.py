"""Random SMILES: uniform start atom per fragment, uniform neighbor order at each step."""

from __future__ import annotations

import random

from .graph import Molecule
from .writer import VisitPlan, write_smiles

SEED_MASK = (1 << 64) - 1


def random_plan(mol: Molecule, rng: random.Random) -> VisitPlan:
    starts = tuple(rng.choice(comp) for comp in mol.components)
    order = []
    for a in range(len(mol)):
        nbs = mol.neighbors(a)
        rng.shuffle(nbs)
        order.append(tuple(nbs))
    return VisitPlan(starts, tuple(order))


def enumerate_random(mol: Molecule, seed: int) -> str:
    """Random-order SMILES for ``mol``; a pure function of the molecule and the 64-bit seed."""
    if not 0 <= seed <= SEED_MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return write_smiles(mol, random_plan(mol, random.Random(seed)))
