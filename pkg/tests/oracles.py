"""Independent brute-force oracles for small molecules.

Nothing here calls the canonicalizer or the writer; graphs are compared by
trying every atom bijection.
"""

from __future__ import annotations

from itertools import permutations

from rxnaug.smiles.graph import DOUBLE, IMPLICIT_H, Molecule


def _atom_label(mol: Molecule, a: int) -> tuple:
    at = mol.atoms[a]
    return (at.element, at.aromatic, at.charge, mol.hydrogen_count(a), at.isotope, at.chirality is not None)


def _parity(seq: list) -> int:
    seq = list(seq)
    swaps = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                swaps += 1
    return swaps & 1


def _chirality_matches(m1: Molecule, m2: Molecule, phi: list[int]) -> bool:
    for a, at in enumerate(m1.atoms):
        if at.chirality is None:
            continue
        b = phi[a]
        other = m2.atoms[b]
        ref1 = [phi[x] if x != IMPLICIT_H else IMPLICIT_H for x in at.chiral_ref]
        ref2 = list(other.chiral_ref)
        if sorted(ref1) != sorted(ref2):
            return False
        positions = [ref2.index(x) for x in ref1]
        same_symbol = at.chirality == other.chirality
        if same_symbol != (_parity(positions) == 0):
            return False
    return True


def double_bond_geometry(mol: Molecule) -> dict:
    """``{(a, b, x, y): trans?}`` for each double bond a=b with directional neighbors x on a, y on b."""
    out = {}
    for bond in mol.bonds:
        if bond.order != DOUBLE:
            continue
        a, b = bond.a, bond.b
        for x, kx in mol.adjacency[a]:
            dx = mol.bonds[kx].direction_from(a)
            if x == b or dx is None:
                continue
            for y, ky in mol.adjacency[b]:
                dy = mol.bonds[ky].direction_from(b)
                if y == a or dy is None:
                    continue
                out[(a, b, x, y)] = dx != dy
    return out


def _geometry_matches(m1: Molecule, m2: Molecule, phi: list[int]) -> bool:
    g1 = double_bond_geometry(m1)
    g2 = double_bond_geometry(m2)
    mapped = {}
    for (a, b, x, y), trans in g1.items():
        mapped[(phi[a], phi[b], phi[x], phi[y])] = trans
    canon1 = {}
    for (a, b, x, y), trans in mapped.items():
        key = (a, b, x, y) if a < b else (b, a, y, x)
        canon1[key] = trans
    canon2 = {}
    for (a, b, x, y), trans in g2.items():
        key = (a, b, x, y) if a < b else (b, a, y, x)
        canon2[key] = trans
    return canon1 == canon2


def isomorphisms(m1: Molecule, m2: Molecule, *, stereo: bool = True):
    """Yield every atom bijection ``phi`` (list, m1 index -> m2 index) preserving the full graph."""
    n = len(m1)
    if n != len(m2) or len(m1.bonds) != len(m2.bonds):
        return
    labels1 = [_atom_label(m1, a) for a in range(n)]
    labels2 = [_atom_label(m2, a) for a in range(n)]
    if sorted(labels1) != sorted(labels2):
        return
    bonds2 = {}
    for bond in m2.bonds:
        bonds2[(bond.a, bond.b)] = bond.order
        bonds2[(bond.b, bond.a)] = bond.order
    for perm in permutations(range(n)):
        if any(labels1[a] != labels2[perm[a]] for a in range(n)):
            continue
        if any(bonds2.get((perm[b.a], perm[b.b])) != b.order for b in m1.bonds):
            continue
        phi = list(perm)
        if stereo and not (_chirality_matches(m1, m2, phi) and _geometry_matches(m1, m2, phi)):
            continue
        yield phi


def is_isomorphic(m1: Molecule, m2: Molecule, *, stereo: bool = True) -> bool:
    return next(isomorphisms(m1, m2, stereo=stereo), None) is not None


def automorphism_orbits(mol: Molecule) -> list[int]:
    """Orbit id per atom under the full (stereo-aware) automorphism group."""
    orbit = list(range(len(mol)))

    def find(x):
        while orbit[x] != x:
            x = orbit[x]
        return x

    for phi in isomorphisms(mol, mol):
        for a, b in enumerate(phi):
            ra, rb = find(a), find(b)
            if ra != rb:
                orbit[max(ra, rb)] = min(ra, rb)
    return [find(a) for a in range(len(mol))]


def all_dfs_strings_linear(atoms: list[str]) -> set[str]:
    """Every SMILES a depth-first writer can emit for an unbranched chain of plain atoms.

    Start at any atom; at each atom the unvisited neighbors may be taken in
    either order, the first ones as parenthesized branches and the last one as
    the continuation.
    """
    n = len(atoms)
    adj = {i: [j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)}
    out = set()

    def emit(atom, parent):
        kids = [nb for nb in adj[atom] if nb != parent]
        results = []
        for order in permutations(kids):
            parts = [[atoms[atom]]]
            for kid in order:
                parts.append(emit(kid, atom))
            # cartesian product of child renderings
            combos = [""]
            for idx, options in enumerate(parts):
                if idx == 0:
                    combos = [options[0]]
                    continue
                last = idx == len(parts) - 1
                combos = [c + (o if last else f"({o})") for c in combos for o in options]
            results.extend(combos)
        return results

    for start in range(n):
        out.update(emit(start, None))
    return out


# --- sequence-model oracles ---------------------------------------------------


def enumerate_sequences(prob, tokens, eos, max_len):
    """Every sequence ending in ``eos`` within ``max_len`` steps, with its probability.

    ``prob(prefix, token)`` gives the next-token probability after ``prefix``
    (a tuple of generated tokens). Returns {tokens without eos: probability}.
    """
    out = {}
    frontier = [((), 1.0)]
    for _ in range(max_len):
        nxt = []
        for prefix, p in frontier:
            for tok in tokens:
                q = p * prob(prefix, tok)
                if tok == eos:
                    out[prefix] = q
                else:
                    nxt.append((prefix + (tok,), q))
        frontier = nxt
    return out


def finite_difference_errors(model, loss_fn, eps=1e-6, coords=None, seed=0):
    """Per-parameter-tensor comparison of autograd against central differences.

    Returns {name: (max |analytic|, max |analytic - numeric|)} over the checked
    coordinates: all of them, or when ``coords`` is set, the ``coords`` largest
    analytic entries plus ``coords`` random ones.
    """
    import torch

    model.zero_grad()
    loss_fn().backward()
    gen = torch.Generator().manual_seed(seed)
    out = {}
    for name, p in model.named_parameters():
        grad = p.grad.detach().reshape(-1).clone()
        flat = p.data.view(-1)
        if coords is None or flat.numel() <= 2 * coords:
            idx = torch.arange(flat.numel())
        else:
            top = grad.abs().topk(coords).indices
            idx = torch.unique(torch.cat([top, torch.randint(flat.numel(), (coords,), generator=gen)]))
        worst = 0.0
        with torch.no_grad():
            for i in idx.tolist():
                orig = flat[i].item()
                flat[i] = orig + eps
                up = loss_fn().item()
                flat[i] = orig - eps
                down = loss_fn().item()
                flat[i] = orig
                worst = max(worst, abs((up - down) / (2 * eps) - grad[i].item()))
        out[name] = (grad[idx].abs().max().item(), worst)
    return out


# --- ranking oracles ------------------------------------------------------------

# hand-checked canonical forms for the fuzz alphabet; None marks unparseable text
FUZZ_CANONICAL = {
    "CCC": "CCC", "C(C)C": "CCC", "CC(C)": "CCC",
    "CCCC": "CCCC", "C(C)CC": "CCCC",
    "CNN": "CNN", "N(C)N": "CNN",
    "NCN": "NCN", "C(N)N": "NCN",
    "CCO": "CCO", "OCC": "CCO", "C(O)C": "CCO",
    "CC.CCC": "CCC.CC", "CCC.CC": "CCC.CC",
    "CC=": None, "C#": None, "C1CC": None, "((": None,
}


def eq1_rank(beams, mode):
    """Rank of every distinct string, looping literally over all (n, i).

    ``beams[n]`` is the list of canonical strings (None for invalid) produced
    for input variant n, in beam order. Invalid entries are removed and, under
    ``dedup_first``, repeats within a beam too; survivors are re-indexed from 0.
    """
    cleaned = []
    for beam in beams:
        kept = []
        for s in beam:
            if s is None:
                continue
            if mode == "dedup_first" and s in kept:
                continue
            kept.append(s)
        cleaned.append(kept)
    distinct = {s for beam in cleaned for s in beam}
    ranks = {}
    for cand in distinct:
        total = 0.0
        for n in range(len(cleaned)):
            for i in range(len(cleaned[n])):
                if cleaned[n][i] == cand:
                    total += 1.0 / (1.0 + 0.001 * i)
        ranks[cand] = total
    return ranks
