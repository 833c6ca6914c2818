"""Molecular graph types shared by the parser, writer and canonicalizer."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

SINGLE = "single"
DOUBLE = "double"
TRIPLE = "triple"
AROMATIC = "aromatic"
BOND_ORDERS = (SINGLE, DOUBLE, TRIPLE, AROMATIC)

UP = "up"
DOWN = "down"

# Marker used inside a chiral reference ordering for the bracket hydrogen.
IMPLICIT_H = -1

PERIODIC_TABLE = tuple(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni
    Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe
    Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg
    Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg
    Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og""".split()
)
ATOMIC_NUMBER = {sym: z for z, sym in enumerate(PERIODIC_TABLE, start=1)}
ATOMIC_NUMBER["*"] = 0

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_ORGANIC = frozenset({"B", "C", "N", "O", "P", "S"})

# Lowest normal valences of the organic subset; used for implied hydrogen
# counts only, never for validation.
DEFAULT_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


class SmilesError(ValueError):
    """Raised for malformed SMILES input.

    ``offset`` is the 0-based character position the problem was found at.
    """

    def __init__(self, message: str, offset: int = 0, text: str | None = None):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: Optional[int] = None
    isotope: Optional[int] = None
    chirality: Optional[str] = None
    chiral_ref: tuple[int, ...] = ()

    @property
    def symbol(self) -> str:
        return self.element.lower() if self.aromatic else self.element

    @property
    def is_heavy(self) -> bool:
        return self.element != "H"

    @property
    def needs_brackets(self) -> bool:
        if self.element == "*":
            return bool(
                self.charge or self.isotope is not None or self.chirality
                or self.explicit_h is not None
            )
        organic = AROMATIC_ORGANIC if self.aromatic else ORGANIC_SUBSET
        return (
            self.element not in organic
            or self.charge != 0
            or self.isotope is not None
            or self.chirality is not None
            or self.explicit_h is not None
        )


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str = SINGLE
    direction: Optional[str] = None

    def other(self, atom: int) -> int:
        return self.b if atom == self.a else self.a

    def direction_from(self, atom: int) -> Optional[str]:
        """Direction as seen when walking the bond starting at ``atom``."""
        if self.direction is None or atom == self.a:
            return self.direction
        return DOWN if self.direction == UP else UP

    def reversed(self) -> Bond:
        return Bond(self.b, self.a, self.order, self.direction_from(self.b))


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...] = ()
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n) or bond.a == bond.b:
                raise ValueError(f"bond endpoints out of range: {bond}")
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {key}")
            seen.add(key)
            if bond.direction is not None and bond.order != SINGLE:
                raise ValueError("bond direction is only allowed on single bonds")

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom, ``(neighbor, bond index)`` pairs in bond order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for k, bond in enumerate(self.bonds):
            adj[bond.a].append((bond.b, k))
            adj[bond.b].append((bond.a, k))
        return tuple(tuple(x) for x in adj)

    def neighbors(self, atom: int) -> list[int]:
        return [nb for nb, _ in self.adjacency[atom]]

    def degree(self, atom: int) -> int:
        return len(self.adjacency[atom])

    def bond_between(self, a: int, b: int) -> Optional[Bond]:
        for nb, k in self.adjacency[a]:
            if nb == b:
                return self.bonds[k]
        return None

    @cached_property
    def components(self) -> tuple[tuple[int, ...], ...]:
        """Connected components, each sorted, ordered by lowest atom index."""
        comp = [-1] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if comp[start] >= 0:
                continue
            cid = len(out)
            comp[start] = cid
            stack, members = [start], []
            while stack:
                a = stack.pop()
                members.append(a)
                for nb, _ in self.adjacency[a]:
                    if comp[nb] < 0:
                        comp[nb] = cid
                        stack.append(nb)
            out.append(tuple(sorted(members)))
        return tuple(out)

    @property
    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.is_heavy)

    def valence_used(self, atom: int) -> int:
        """Bond order sum, aromatic bonds counted once plus one for the pi system."""
        total = 0
        aromatic = False
        for _, k in self.adjacency[atom]:
            order = self.bonds[k].order
            if order == AROMATIC:
                aromatic = True
            total += {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 1}[order]
        if aromatic or self.atoms[atom].aromatic:
            total += 1
        return total

    def hydrogen_count(self, atom: int) -> int:
        """Attached hydrogens: bracket count, or the implied count for organic atoms."""
        at = self.atoms[atom]
        explicit_neighbors = sum(1 for nb in self.neighbors(atom) if self.atoms[nb].element == "H")
        if at.explicit_h is not None:
            return at.explicit_h + explicit_neighbors
        return implied_hydrogens(at, self.valence_used(atom)) + explicit_neighbors

    @cached_property
    def ring_atoms(self) -> frozenset[int]:
        """Atoms incident to at least one non-bridge bond."""
        n = len(self.atoms)
        disc = [-1] * n
        low = [0] * n
        bridges = set()
        timer = 0
        for root in range(n):
            if disc[root] >= 0:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(self.adjacency[root]))]
            while stack:
                node, via, it = stack[-1]
                advanced = False
                for nb, k in it:
                    if k == via:
                        continue
                    if disc[nb] < 0:
                        disc[nb] = low[nb] = timer
                        timer += 1
                        stack.append((nb, k, iter(self.adjacency[nb])))
                        advanced = True
                        break
                    low[node] = min(low[node], disc[nb])
                if advanced:
                    continue
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[node])
                    if low[node] > disc[parent]:
                        bridges.add(via)
        ring = set()
        for k, bond in enumerate(self.bonds):
            if k not in bridges:
                ring.add(bond.a)
                ring.add(bond.b)
        return frozenset(ring)

    def subgraph(self, atom_indices) -> Molecule:
        """Induced subgraph; atoms renumbered in ascending original order."""
        keep = sorted(atom_indices)
        remap = {old: new for new, old in enumerate(keep)}
        atoms = []
        for old in keep:
            at = self.atoms[old]
            if at.chiral_ref:
                ref = tuple(remap.get(x, x) if x != IMPLICIT_H else IMPLICIT_H for x in at.chiral_ref)
                at = replace(at, chiral_ref=ref)
            atoms.append(at)
        bonds = [
            Bond(remap[b.a], remap[b.b], b.order, b.direction)
            for b in self.bonds
            if b.a in remap and b.b in remap
        ]
        return Molecule(tuple(atoms), tuple(bonds))


def implied_hydrogens(atom: Atom, valence_used: int) -> int:
    if atom.explicit_h is not None:
        return atom.explicit_h
    for v in DEFAULT_VALENCES.get(atom.element, ()):
        if v >= valence_used:
            return v - valence_used
    return 0
