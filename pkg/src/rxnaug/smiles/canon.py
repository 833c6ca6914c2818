"""Canonical atom ranking and canonical SMILES.

Atoms are first partitioned by a local invariant and refined by their
neighborhoods. Remaining ties are broken by individualizing each tied atom in
turn and refining again; every branch is written out and the smallest string
wins, so the result does not depend on input atom order even for symmetric
or stereo-symmetric (meso) graphs.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

from .._core import refine_partition
from .graph import ATOMIC_NUMBER, AROMATIC, DOUBLE, SINGLE, TRIPLE, Molecule
from .writer import VisitPlan, visit_order, write_smiles

_BOND_CODE = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 4}


def atom_invariant(mol: Molecule, atom: int) -> tuple:
    at = mol.atoms[atom]
    return (
        mol.degree(atom),
        ATOMIC_NUMBER.get(at.element, 0),
        at.aromatic,
        at.charge,
        mol.hydrogen_count(atom),
        atom in mol.ring_atoms,
        at.isotope or 0,
        at.explicit_h is not None,
        at.chirality is not None,
    )


def _csr(mol: Molecule) -> tuple[list[int], list[int], list[int]]:
    indptr, indices, codes = [0], [], []
    for a in range(len(mol)):
        for nb, k in mol.adjacency[a]:
            indices.append(nb)
            codes.append(_BOND_CODE[mol.bonds[k].order])
        indptr.append(len(indices))
    return indptr, indices, codes


def invariant_classes(mol: Molecule) -> list[int]:
    """Stable refined classes before any symmetry breaking.

    Atoms sharing a class are indistinguishable by iterated neighborhood
    invariants; class ids are dense and ordered by invariant.
    """
    initial = [atom_invariant(mol, a) for a in range(len(mol))]
    lookup = {v: i for i, v in enumerate(sorted(set(initial)))}
    indptr, indices, codes = _csr(mol)
    return refine_partition(indptr, indices, codes, [lookup[v] for v in initial])


def _individualize(classes: list[int], atom: int) -> list[int]:
    shifted = [2 * c + (0 if a == atom else 1) for a, c in enumerate(classes)]
    lookup = {v: i for i, v in enumerate(sorted(set(shifted)))}
    return [lookup[v] for v in shifted]


def _interchangeable_terminals(mol: Molecule, cell: list[int]) -> list[int]:
    """Drop tied terminal atoms whose swap is an automorphism (e.g. CH3 in CF3)."""
    keep, seen = [], set()
    for a in cell:
        atom = mol.atoms[a]
        if mol.degree(a) == 1 and atom.chirality is None:
            (nb, k), = mol.adjacency[a]
            bond = mol.bonds[k]
            if mol.atoms[nb].chirality is None and bond.direction is None:
                key = (nb, bond.order, atom)
                if key in seen:
                    continue
                seen.add(key)
        keep.append(a)
    return keep


def _leaf_string(mol: Molecule, ranks: list[int]) -> str:
    plan = VisitPlan.from_ranks(mol, ranks)
    text = write_smiles(mol, plan)
    if any(b.direction for b in mol.bonds):
        # flipping every / and \\ describes the same geometry; pick one form
        text = min(text, write_smiles(mol, plan, flip_directions=True))
    return text


class _Search:
    """Individualize-and-refine search keeping the smallest leaf string.

    Two leaves with the same string map atoms onto each other position by
    position; that map is an automorphism. Automorphisms fixing the atoms
    individualized so far let a node skip tied atoms in an orbit it has
    already explored, which keeps symmetric molecules cheap.
    """

    def __init__(self, mol: Molecule, prune: bool = True):
        self.mol = mol
        self.prune = prune
        self.csr = _csr(mol)
        self.best: tuple[str, list[int], list[int]] | None = None
        self.automorphisms: list[list[int]] = []

    def leaf(self, classes: list[int]) -> None:
        plan = VisitPlan.from_ranks(self.mol, classes)
        text = _leaf_string(self.mol, classes)
        order = visit_order(self.mol, plan)
        if self.best is None or text < self.best[0]:
            self.best = (text, classes, order)
        elif text == self.best[0]:
            gamma = [0] * len(order)
            for a, b in zip(self.best[2], order):
                gamma[a] = b
            self.automorphisms.append(gamma)

    def orbit_root(self, fixed: list[int], atom: int, explored: list[int]) -> bool:
        """True if ``atom`` shares an orbit with an explored atom under automorphisms fixing ``fixed``."""
        parent = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for gamma in self.automorphisms:
            if all(gamma[f] == f for f in fixed):
                for a, b in enumerate(gamma):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[ra] = rb
        root = find(atom)
        return any(find(e) == root for e in explored)

    def run(self, classes: list[int], fixed: list[int]) -> None:
        classes = refine_partition(*self.csr, classes)
        n = len(classes)
        if len(set(classes)) == n:
            self.leaf(classes)
            return
        counts: dict[int, int] = {}
        for c in classes:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, cnt in counts.items() if cnt > 1)
        cell = [a for a in range(n) if classes[a] == target]
        explored: list[int] = []
        candidates = _interchangeable_terminals(self.mol, cell) if self.prune else cell
        for atom in candidates:
            if self.prune and explored and self.orbit_root(fixed, atom, explored):
                continue
            self.run(_individualize(classes, atom), fixed + [atom])
            explored.append(atom)


def _fragment_canonical(mol: Molecule, prune: bool = True) -> tuple[str, list[int]]:
    """Canonical string and ranks for a single connected fragment."""
    if len(mol) == 1:
        return _leaf_string(mol, [0]), [0]
    initial = [atom_invariant(mol, a) for a in range(len(mol))]
    lookup = {v: i for i, v in enumerate(sorted(set(initial)))}
    search = _Search(mol, prune)
    search.run([lookup[v] for v in initial], [])
    assert search.best is not None
    return search.best[0], search.best[1]


def canonical_ranks(mol: Molecule) -> list[int]:
    """Canonical rank of every atom; a permutation of ``0..k-1`` within each fragment."""
    ranks = [0] * len(mol)
    for comp in mol.components:
        _, frag_ranks = _fragment_canonical(mol.subgraph(comp))
        for local, atom in enumerate(comp):
            ranks[atom] = frag_ranks[local]
    return ranks


def fragment_sort_key(heavy_atoms: int, text: str) -> tuple:
    """Order for joining canonical fragments: more heavy atoms first, then lexicographic."""
    return (-heavy_atoms, text)


def fragment_size_key(heavy_atoms: int, text: str) -> tuple:
    """Largest-fragment order: more heavy atoms, then longer text, then lexicographic."""
    return (-heavy_atoms, -len(text), text)


def canonical_fragments(mol: Molecule) -> list[tuple[int, str]]:
    """``(heavy atom count, canonical string)`` per fragment, in input order."""
    out = []
    for comp in mol.components:
        frag = mol.subgraph(comp)
        out.append((frag.heavy_atom_count, _fragment_canonical(frag)[0]))
    return out


def canonicalize(mol: Molecule) -> str:
    """Canonical SMILES; fragments ordered largest first and joined with ``.``."""
    frags = canonical_fragments(mol)
    frags.sort(key=lambda f: fragment_sort_key(*f))
    return ".".join(text for _, text in frags)


@lru_cache(maxsize=65536)
def canonical_smiles(text: str) -> str:
    """Parse and canonicalize, memoized on the input text."""
    from .parser import parse_smiles

    return canonicalize(parse_smiles(text))


def ranks_to_order(ranks: Sequence[int]) -> list[int]:
    return sorted(range(len(ranks)), key=lambda a: ranks[a])
