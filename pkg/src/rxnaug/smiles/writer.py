"""SMILES writer driven by an explicit depth-first visitation plan."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import AROMATIC, DOUBLE, DOWN, IMPLICIT_H, TRIPLE, UP, Atom, Molecule


class PlanError(ValueError):
    """The visitation plan does not describe a traversal of the molecule."""


@dataclass(frozen=True)
class VisitPlan:
    """Where each fragment starts and in which order neighbors are explored.

    ``starts`` holds one atom per connected component, in output order.
    ``neighbor_order[a]`` is a permutation of the neighbors of atom ``a``.
    """

    starts: tuple[int, ...]
    neighbor_order: tuple[tuple[int, ...], ...]

    @classmethod
    def default(cls, mol: Molecule) -> VisitPlan:
        return cls(
            tuple(comp[0] for comp in mol.components),
            tuple(tuple(mol.neighbors(a)) for a in range(len(mol))),
        )

    @classmethod
    def from_ranks(cls, mol: Molecule, ranks: Sequence[int], starts: Sequence[int] | None = None) -> VisitPlan:
        """Start at the lowest-ranked atom of each fragment; visit neighbors by rank."""
        if starts is None:
            starts = [min(comp, key=lambda a: ranks[a]) for comp in mol.components]
        order = tuple(tuple(sorted(mol.neighbors(a), key=lambda x: ranks[x])) for a in range(len(mol)))
        return cls(tuple(starts), order)


def permutation_parity(perm: Sequence[int]) -> int:
    """0 for an even permutation of ``range(len(perm))``, 1 for odd."""
    seen = [False] * len(perm)
    parity = 0
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def chirality_for_order(atom: Atom, output_order: Sequence[int]) -> str | None:
    """Chirality symbol that describes ``atom`` when neighbors are written in ``output_order``."""
    if atom.chirality is None:
        return None
    ref = list(atom.chiral_ref)
    if sorted(ref) != sorted(output_order):
        return atom.chirality
    parity = permutation_parity([ref.index(x) for x in output_order])
    if parity == 0:
        return atom.chirality
    return "@" if atom.chirality == "@@" else "@@"


def format_atom(atom: Atom, chirality: str | None = None) -> str:
    if not atom.needs_brackets:
        return atom.symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(atom.symbol)
    if chirality:
        parts.append(chirality)
    h = atom.explicit_h or 0
    if h == 1:
        parts.append("H")
    elif h > 1:
        parts.append(f"H{h}")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        parts.append(sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}")
    parts.append("]")
    return "".join(parts)


def _bond_symbol(mol: Molecule, k: int, src: int, flip: bool) -> str:
    bond = mol.bonds[k]
    dst = bond.other(src)
    if bond.order == DOUBLE:
        return "="
    if bond.order == TRIPLE:
        return "#"
    both_aromatic = mol.atoms[src].aromatic and mol.atoms[dst].aromatic
    if bond.order == AROMATIC:
        return "" if both_aromatic else ":"
    direction = bond.direction_from(src)
    if direction is not None:
        if flip:
            direction = DOWN if direction == UP else UP
        return "/" if direction == UP else "\\"
    return "-" if both_aromatic else ""


def _ring_label(num: int) -> str:
    return str(num) if num < 10 else f"%{num:02d}"


def visit_order(mol: Molecule, plan: VisitPlan) -> list[int]:
    """Atoms in the order :func:`write_smiles` emits them for ``plan``."""
    seen = [False] * len(mol)
    order: list[int] = []
    for start in plan.starts:
        seen[start] = True
        order.append(start)
        stack = [iter(plan.neighbor_order[start])]
        while stack:
            for nb in stack[-1]:
                if not seen[nb]:
                    seen[nb] = True
                    order.append(nb)
                    stack.append(iter(plan.neighbor_order[nb]))
                    break
            else:
                stack.pop()
    return order


def write_smiles(mol: Molecule, plan: VisitPlan | None = None, *, flip_directions: bool = False) -> str:
    """Emit SMILES following ``plan``.

    Tetrahedral symbols are recomputed from each atom's output neighbor order
    and bond directions are re-expressed relative to the traversal, so the
    result re-parses to the same stereo graph. ``flip_directions`` inverts
    every ``/`` and ``\\``, which describes the same double-bond geometry.
    """
    if plan is None:
        plan = VisitPlan.default(mol)
    n = len(mol)
    if len(plan.neighbor_order) != n:
        raise PlanError("plan must list neighbor orders for every atom")
    for a in range(n):
        if sorted(plan.neighbor_order[a]) != sorted(mol.neighbors(a)):
            raise PlanError(f"neighbor order for atom {a} is not a permutation of its neighbors")
    comp_of = {}
    for cid, comp in enumerate(mol.components):
        for a in comp:
            comp_of[a] = cid
    covered = [comp_of.get(s) for s in plan.starts]
    if None in covered or sorted(covered) != list(range(len(mol.components))):
        raise PlanError("plan must name exactly one start atom per fragment")

    bond_index = {}
    for k, bond in enumerate(mol.bonds):
        bond_index[(bond.a, bond.b)] = k
        bond_index[(bond.b, bond.a)] = k

    # pass 1: spanning forest and ring-closure bonds
    visited = [False] * n
    parent_bond = [-1] * n
    children: list[list[int]] = [[] for _ in range(n)]
    ring_open: list[list[int]] = [[] for _ in range(n)]   # bond ids opened here
    ring_close: list[list[int]] = [[] for _ in range(n)]  # bond ids closed here
    is_ring = set()
    for start in plan.starts:
        visited[start] = True
        stack = [(start, 0)]
        while stack:
            atom, pos = stack[-1]
            order = plan.neighbor_order[atom]
            if pos >= len(order):
                stack.pop()
                continue
            stack[-1] = (atom, pos + 1)
            nb = order[pos]
            k = bond_index[(atom, nb)]
            if k == parent_bond[atom] or k in is_ring:
                continue
            if visited[nb]:
                if parent_bond[nb] == k:
                    continue
                is_ring.add(k)
                ring_open[nb].append(k)
                ring_close[atom].append(k)
                continue
            visited[nb] = True
            parent_bond[nb] = k
            children[atom].append(nb)
            stack.append((nb, 0))

    # pass 2: emission
    out: list[str] = []
    free_digits: list[int] = []
    next_digit = 1
    digit_of: dict[int, int] = {}
    for fi, start in enumerate(plan.starts):
        if fi:
            out.append(".")
        stack: list = [start]
        while stack:
            item = stack.pop()
            if isinstance(item, str):
                out.append(item)
                continue
            atom = item
            pk = parent_bond[atom]
            if pk >= 0:
                parent = mol.bonds[pk].other(atom)
                out.append(_bond_symbol(mol, pk, parent, flip_directions))
            ring_tokens = []
            ring_partners = []
            released = []
            for k in ring_close[atom]:
                d = digit_of.pop(k)
                ring_tokens.append(_ring_label(d))
                ring_partners.append(mol.bonds[k].other(atom))
                released.append(d)
            for k in ring_open[atom]:
                if free_digits:
                    free_digits.sort()
                    d = free_digits.pop(0)
                else:
                    d = next_digit
                    next_digit += 1
                digit_of[k] = d
                ring_tokens.append(_bond_symbol(mol, k, atom, flip_directions) + _ring_label(d))
                ring_partners.append(mol.bonds[k].other(atom))
            free_digits.extend(released)

            at = mol.atoms[atom]
            chir = None
            if at.chirality is not None:
                output_order = []
                if pk >= 0:
                    output_order.append(mol.bonds[pk].other(atom))
                if at.explicit_h:
                    output_order.append(IMPLICIT_H)
                output_order.extend(ring_partners)
                output_order.extend(children[atom])
                chir = chirality_for_order(at, output_order)
            out.append(format_atom(at, chir))
            out.extend(ring_tokens)

            kids = children[atom]
            if kids:
                stack.append(kids[-1])
                for c in reversed(kids[:-1]):
                    stack.append(")")
                    stack.append(c)
                    stack.append("(")
    return "".join(out)
