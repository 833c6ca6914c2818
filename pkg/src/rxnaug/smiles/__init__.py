"""SMILES parsing, writing, canonicalization and random enumeration."""

from .canon import canonical_ranks, canonical_smiles, canonicalize, invariant_classes
from .enumeration import enumerate_random
from .fragments import contains_stereo, largest_fragment, rank_fragments, split_fragments
from .graph import Atom, Bond, Molecule, SmilesError
from .parser import parse_smiles
from .writer import PlanError, VisitPlan, visit_order, write_smiles

__all__ = [
    "Atom",
    "Bond",
    "Molecule",
    "PlanError",
    "SmilesError",
    "VisitPlan",
    "canonical_ranks",
    "canonical_smiles",
    "canonicalize",
    "contains_stereo",
    "enumerate_random",
    "invariant_classes",
    "largest_fragment",
    "parse_smiles",
    "rank_fragments",
    "split_fragments",
    "visit_order",
    "write_smiles",
]
