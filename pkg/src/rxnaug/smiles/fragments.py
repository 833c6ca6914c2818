"""Fragment splitting, size ordering and stereo detection."""

from __future__ import annotations

from .canon import canonicalize, fragment_size_key
from .graph import Molecule

STEREO_MARKERS = ("/", "\\", "@")


def split_fragments(mol: Molecule) -> list[Molecule]:
    """Connected components, ordered by their lowest atom index."""
    if len(mol.components) == 1:
        return [mol]
    return [mol.subgraph(comp) for comp in mol.components]


def rank_fragments(mol: Molecule) -> list[tuple[Molecule, str]]:
    """Fragments with their canonical strings, largest first."""
    frags = [(frag, canonicalize(frag)) for frag in split_fragments(mol)]
    frags.sort(key=lambda fc: fragment_size_key(fc[0].heavy_atom_count, fc[1]))
    return frags


def largest_fragment(mol: Molecule) -> Molecule:
    """Fragment with the most heavy atoms.

    Ties go to the longer canonical string, then the lexicographically smaller.
    """
    if len(mol) == 0:
        raise ValueError("empty molecule has no fragments")
    return rank_fragments(mol)[0][0]


def contains_stereo(text: str) -> bool:
    """True if the SMILES text carries any of the ``/ \\ @ @@`` stereo markers."""
    return any(marker in text for marker in STEREO_MARKERS)
