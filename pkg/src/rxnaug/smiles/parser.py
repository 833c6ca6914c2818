"""SMILES reader.

Grammar subset: organic-subset atoms, bracket atoms with isotope, chirality
(@, @@), hydrogen count, charge and atom class, branches, ring closures
1-9 and %nn, bond symbols ``- = # : / \\`` and ``.`` fragment separators.
Atom classes (reaction atom maps) are dropped while reading.
"""

from __future__ import annotations

from dataclasses import replace

from .graph import (
    AROMATIC,
    AROMATIC_ORGANIC,
    DOUBLE,
    DOWN,
    IMPLICIT_H,
    ORGANIC_SUBSET,
    PERIODIC_TABLE,
    SINGLE,
    TRIPLE,
    UP,
    Atom,
    Bond,
    Molecule,
    SmilesError,
    implied_hydrogens,
)

ELEMENTS = frozenset(PERIODIC_TABLE)
BRACKET_AROMATIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S",
                    "se": "Se", "as": "As", "te": "Te"}

_BOND_SYMBOLS = {"-": (SINGLE, None), "=": (DOUBLE, None), "#": (TRIPLE, None),
                 ":": (AROMATIC, None), "/": (SINGLE, UP), "\\": (SINGLE, DOWN)}


def _read_bracket(text: str, start: int) -> tuple[Atom, bool, int]:
    """Parse ``[...]`` beginning at ``start``; returns (atom, had_map, next offset)."""
    end = text.find("]", start)
    if end < 0:
        raise SmilesError("unclosed bracket atom", start, text)
    body = text[start + 1:end]
    pos = 0

    def err(msg: str):
        raise SmilesError(msg, start + 1 + pos, text)

    digits = ""
    while pos < len(body) and body[pos].isdigit():
        digits += body[pos]
        pos += 1
    isotope = int(digits) if digits else None
    if isotope == 0:
        err("isotope must be positive")

    aromatic = False
    element = None
    two, one = body[pos:pos + 2], body[pos:pos + 1]
    if two in BRACKET_AROMATIC:
        element, aromatic = BRACKET_AROMATIC[two], True
        pos += 2
    elif one == "*":
        element = "*"
        pos += 1
    elif one.isupper() and two in ELEMENTS and two != one:
        element = two
        pos += 2
    elif one in ELEMENTS:
        element = one
        pos += 1
    elif one in BRACKET_AROMATIC:
        element, aromatic = BRACKET_AROMATIC[one], True
        pos += 1
    else:
        err(f"unknown atom symbol {body[pos:pos + 2]!r}")

    chirality = None
    if body.startswith("@@", pos):
        chirality = "@@"
        pos += 2
    elif body.startswith("@", pos):
        chirality = "@"
        pos += 1
        if pos < len(body) and body[pos].isalpha() and body[pos] != "H":
            err("only @ and @@ chirality classes are supported")

    hcount = 0
    if pos < len(body) and body[pos] == "H":
        pos += 1
        hd = ""
        while pos < len(body) and body[pos].isdigit():
            hd += body[pos]
            pos += 1
        hcount = int(hd) if hd else 1

    charge = 0
    if pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        sym = body[pos]
        pos += 1
        cd = ""
        while pos < len(body) and body[pos].isdigit():
            cd += body[pos]
            pos += 1
        if cd:
            charge = sign * int(cd)
        else:
            count = 1
            while pos < len(body) and body[pos] == sym:
                count += 1
                pos += 1
            charge = sign * count

    had_map = False
    if pos < len(body) and body[pos] == ":":
        pos += 1
        md = ""
        while pos < len(body) and body[pos].isdigit():
            md += body[pos]
            pos += 1
        if not md:
            err("empty atom class")
        had_map = True

    if pos != len(body):
        err(f"unexpected {body[pos]!r} in bracket atom")
    atom = Atom(element, aromatic, charge, hcount, isotope, chirality)
    return atom, had_map, end + 1


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Raises :class:`SmilesError` carrying the character offset on unbalanced
    parentheses, unmatched ring closures, unknown atom tokens and empty input.
    """
    if not isinstance(text, str) or not text:
        raise SmilesError("empty SMILES", 0, text)
    atoms: list[Atom] = []
    mapped: list[bool] = []
    refs: list[list] = []
    bonds: list[tuple[int, int, str, str | None]] = []
    bonded: set[tuple[int, int]] = set()
    # digit -> (atom, bond symbol, slot in that atom's ref list, offset)
    rings: dict[int, tuple[int, str | None, int, int]] = {}
    branches: list[tuple[int, int]] = []
    prev: int | None = None
    pending: str | None = None
    pending_at = 0
    n = len(text)
    i = 0

    def add_bond(a: int, b: int, sym: str | None, oriented_from: int, at: int) -> None:
        key = (min(a, b), max(a, b))
        if a == b or key in bonded:
            raise SmilesError("duplicate bond", at, text)
        bonded.add(key)
        if sym is None:
            order = AROMATIC if atoms[a].aromatic and atoms[b].aromatic else SINGLE
            direction = None
        else:
            order, direction = _BOND_SYMBOLS[sym]
        if oriented_from == a:
            bonds.append((a, b, order, direction))
        else:
            bonds.append((b, a, order, direction))

    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise SmilesError("branch without a preceding atom", i, text)
            if pending is not None:
                raise SmilesError("bond symbol before branch", pending_at, text)
            branches.append((prev, i))
            i += 1
            continue
        if ch == ")":
            if not branches:
                raise SmilesError("unbalanced parenthesis", i, text)
            if pending is not None:
                raise SmilesError("dangling bond", pending_at, text)
            if prev == branches[-1][0]:
                raise SmilesError("empty branch", i, text)
            prev, _ = branches.pop()
            i += 1
            continue
        if ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesError("two consecutive bond symbols", i, text)
            if prev is None:
                raise SmilesError("bond without a preceding atom", i, text)
            pending, pending_at = ch, i
            i += 1
            continue
        if ch == ".":
            if pending is not None:
                raise SmilesError("dangling bond", pending_at, text)
            if branches:
                raise SmilesError("fragment separator inside a branch", i, text)
            if prev is None or i == n - 1:
                raise SmilesError("empty fragment", i, text)
            prev = None
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesError("ring closure without a preceding atom", i, text)
            at = i
            if ch == "%":
                digits = text[i + 1:i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesError("malformed %nn ring closure", i, text)
                num = int(digits)
                i += 3
            else:
                num = int(ch)
                i += 1
            if num in rings:
                other, sym0, slot, _ = rings.pop(num)
                if sym0 is not None and pending is not None:
                    # '/' at one end and '\' at the other describe one orientation
                    same = sym0 == pending and sym0 not in "/\\"
                    if not (same or {sym0, pending} == {"/", "\\"}):
                        raise SmilesError("conflicting ring-closure bond symbols", at, text)
                if sym0 is not None:
                    add_bond(other, prev, sym0, other, at)
                else:
                    add_bond(other, prev, pending, prev, at)
                refs[other][slot] = prev
                refs[prev].append(other)
            else:
                rings[num] = (prev, pending, len(refs[prev]), at)
                refs[prev].append(None)
            pending = None
            continue

        # atom token
        start = i
        had_map = False
        if ch == "[":
            atom, had_map, i = _read_bracket(text, i)
        elif text.startswith("Cl", i) or text.startswith("Br", i):
            atom = Atom(text[i:i + 2])
            i += 2
        elif ch in ORGANIC_SUBSET:
            atom = Atom(ch)
            i += 1
        elif ch.upper() in AROMATIC_ORGANIC and ch.islower():
            atom = Atom(ch.upper(), aromatic=True)
            i += 1
        elif ch == "*":
            atom = Atom("*")
            i += 1
        else:
            raise SmilesError(f"unknown atom token {ch!r}", i, text)
        idx = len(atoms)
        atoms.append(atom)
        mapped.append(had_map)
        refs.append([])
        if prev is not None:
            add_bond(prev, idx, pending, prev, start)
            refs[prev].append(idx)
            refs[idx].append(prev)
        if atom.explicit_h:
            refs[idx].append(IMPLICIT_H)
        prev = idx
        pending = None

    if pending is not None:
        raise SmilesError("dangling bond", pending_at, text)
    if branches:
        raise SmilesError("unbalanced parenthesis", branches[-1][1], text)
    if rings:
        offset = min(v[3] for v in rings.values())
        raise SmilesError("unmatched ring closure", offset, text)

    final_atoms = []
    for idx, atom in enumerate(atoms):
        if atom.chirality is not None:
            atom = replace(atom, chiral_ref=tuple(refs[idx]))
        final_atoms.append(atom)
    mol = Molecule(tuple(final_atoms), tuple(Bond(a, b, o, d) for a, b, o, d in bonds), source=text)
    if any(mapped):
        mol = _demote_mapped(mol, mapped)
    return mol


def _demote_mapped(mol: Molecule, mapped: list[bool]) -> Molecule:
    """Write formerly mapped atoms without brackets when nothing else needs them."""
    atoms = list(mol.atoms)
    for idx, atom in enumerate(atoms):
        if not mapped[idx] or atom.chirality or atom.charge or atom.isotope is not None:
            continue
        organic = AROMATIC_ORGANIC if atom.aromatic else ORGANIC_SUBSET
        if atom.element not in organic:
            continue
        bare = replace(atom, explicit_h=None)
        if implied_hydrogens(bare, mol.valence_used(idx)) == atom.explicit_h:
            atoms[idx] = bare
    return Molecule(tuple(atoms), mol.bonds, source=mol.source)
