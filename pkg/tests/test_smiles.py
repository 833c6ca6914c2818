import random
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_dfs_strings_linear, automorphism_orbits, double_bond_geometry, is_isomorphic
from rxnaug import _core
from rxnaug._core import _refine_py
from rxnaug.smiles import (
    PlanError,
    SmilesError,
    VisitPlan,
    canonical_ranks,
    canonical_smiles,
    canonicalize,
    contains_stereo,
    enumerate_random,
    invariant_classes,
    largest_fragment,
    parse_smiles,
    split_fragments,
    write_smiles,
)
from rxnaug.smiles.canon import _csr, _fragment_canonical
from rxnaug.smiles.enumeration import random_plan
from rxnaug.smiles.graph import DOWN, UP, Bond
from rxnaug.smiles.writer import chirality_for_order, permutation_parity


def corpus():
    text = resources.files("rxnaug.data").joinpath("corpus.smi").read_text()
    return [line.split()[0] for line in text.splitlines() if line.strip() and not line.startswith("#")]


SMALL = [s for s in corpus() if len(parse_smiles(s)) <= 8]


# --- parsing -----------------------------------------------------------------


def test_parse_chain():
    mol = parse_smiles("CCO")
    assert [a.element for a in mol.atoms] == ["C", "C", "O"]
    assert {(b.a, b.b) for b in mol.bonds} == {(0, 1), (1, 2)}


def test_parse_counts_acetylbromopyridine():
    mol = parse_smiles("CC(=O)c1ccc(Br)nc1")
    # C C O c c c c Br n c: counted token by token
    assert mol.heavy_atom_count == 10
    assert sum(a.aromatic for a in mol.atoms) == 6
    assert len(mol.ring_atoms) == 6


@pytest.mark.parametrize(
    "text, offset",
    [
        ("CC(", 2),
        ("CC)", 2),
        ("C1CC", 1),
        ("CQ", 1),
        ("C[Xx]", 2),
        ("", 0),
        ("CC=", 2),
        ("C(=O", 1),
    ],
)
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(SmilesError) as info:
        parse_smiles(text)
    assert info.value.offset == offset


@pytest.mark.parametrize("bad", ["C1CC1C1", "C%1CC", "C==C", "(C)C", "C..C", ".C", "C.", "C/1CC/1", "C=1CC#1", "C11"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(SmilesError):
        parse_smiles(bad)


@pytest.mark.parametrize(
    "text",
    ["[13CH4]", "[NH4+]", "[O-]", "[Fe+3]", "[2H]C", "[C@@H](F)(Cl)Br", "[Cu+2]", "[nH]1cccc1", "[Se]", "[Si](C)(C)C"],
)
def test_bracket_atoms_round_trip(text):
    mol = parse_smiles(text)
    again = parse_smiles(write_smiles(mol))
    assert again.atoms == mol.atoms


def test_atom_maps_are_stripped():
    mol = parse_smiles("[CH3:1][C:2](=[O:3])[OH:4]")
    assert write_smiles(mol) == "CC(=O)O"
    assert canonical_smiles("[OH2:11]") == "O"
    # a map on an atom that needs brackets keeps the bracket, loses the map
    assert write_smiles(parse_smiles("[NH4+:3]")) == "[NH4+]"


def test_percent_ring_closures():
    mol = parse_smiles("C%10CC%10")
    assert len(mol.bonds) == 3
    assert canonicalize(mol) == canonical_smiles("C1CC1")


def test_bond_direction_only_on_single_bonds():
    mol = parse_smiles("CC")
    with pytest.raises(ValueError):
        type(mol)(mol.atoms, (Bond(0, 1, "double", UP),))


def test_reversed_bond_flips_direction():
    bond = Bond(0, 1, "single", UP)
    assert bond.reversed().direction == DOWN
    assert bond.direction_from(1) == DOWN


# --- writing -----------------------------------------------------------------


def test_single_atom_any_plan():
    mol = parse_smiles("C")
    assert write_smiles(mol, VisitPlan((0,), ((),))) == "C"
    for seed in range(20):
        assert enumerate_random(mol, seed) == "C"


def test_swapping_chiral_neighbors_flips_symbol():
    mol = parse_smiles("N[C@@H](C)O")
    default = VisitPlan.default(mol)
    order = list(default.neighbor_order)
    order[1] = (0, 3, 2)  # write O before the methyl
    text = write_smiles(mol, VisitPlan(default.starts, tuple(order)))
    assert text == "N[C@H](O)C"
    assert is_isomorphic(parse_smiles(text), mol)
    assert not is_isomorphic(parse_smiles("N[C@@H](O)C"), mol)


def test_directional_bonds_from_other_end():
    mol = parse_smiles("F/C=C/F")
    plan = VisitPlan((3,), tuple(tuple(mol.neighbors(a)) for a in range(4)))
    text = write_smiles(mol, plan)
    assert text == "F\\C=C\\F"
    again = parse_smiles(text)
    assert list(double_bond_geometry(again).values()) == [True]
    assert is_isomorphic(again, mol)
    assert not is_isomorphic(parse_smiles("F/C=C\\F"), mol)


@pytest.mark.parametrize(
    "plan",
    [
        VisitPlan((0,), ((1,), (0,))),  # missing a fragment start
        VisitPlan((0, 0), ((1,), (0,), ())),
        VisitPlan((0, 2), ((2,), (0,), ())),  # not a neighbor permutation
        VisitPlan((0, 2), ((1,), (0,))),  # too short
    ],
)
def test_invalid_plans_rejected(plan):
    with pytest.raises(PlanError):
        write_smiles(parse_smiles("CC.O"), plan)


@pytest.mark.parametrize("text", SMALL)
def test_round_trip_isomorphism_small(text):
    mol = parse_smiles(text)
    rng = random.Random(text)
    for _ in range(5):
        out = write_smiles(mol, random_plan(mol, rng))
        assert is_isomorphic(parse_smiles(out), mol), out


@settings(max_examples=200, deadline=None)
@given(st.permutations(range(4)))
def test_parity_of_output_order(perm):
    mol = parse_smiles("F[C@](Cl)(Br)I")
    center = mol.atoms[1]
    ref = list(center.chiral_ref)
    out = [ref[i] for i in perm]
    flipped = chirality_for_order(center, out) != center.chirality
    assert flipped == (permutation_parity(list(perm)) == 1)


@settings(max_examples=100, deadline=None)
@given(st.permutations(range(7)))
def test_permutation_parity_matches_inversion_count(perm):
    inversions = sum(1 for i in range(7) for j in range(i + 1, 7) if perm[i] > perm[j])
    assert permutation_parity(list(perm)) == inversions % 2


# --- canonical form ----------------------------------------------------------


def test_canonical_matches_augmented_row():
    assert canonical_smiles("n1c(Br)ccc(c1)C(N(C)C)C") == canonical_smiles("CC(c1ccc(Br)nc1)N(C)C")
    assert canonical_smiles("OCC") == canonical_smiles("CCO")


@pytest.mark.parametrize(
    "text",
    ["CC(c1ccc(Br)nc1)N(C)C", "CC(=O)c1ccc(Br)nc1", "O=Cc1cncc(Br)c1", "O=C(O)c1cncc(Br)c1"],
)
def test_canonical_forms_are_fixed_points(text):
    # these are already written in the canonical form of this toolkit
    assert canonical_smiles(text) == text


def test_fifty_enumerations_one_canonical_form():
    mol = parse_smiles("CC(=O)c1ccc(Br)nc1")
    forms = {canonicalize(parse_smiles(enumerate_random(mol, s))) for s in range(50)}
    assert len(forms) == 1


def test_ranks_cco():
    ranks = canonical_ranks(parse_smiles("CCO"))
    assert sorted(ranks) == [0, 1, 2]
    classes = invariant_classes(parse_smiles("CCO"))
    assert classes[2] not in (classes[0], classes[1])


def test_ranks_benzene_fully_tied_before_breaking():
    mol = parse_smiles("c1ccccc1")
    assert len(set(invariant_classes(mol))) == 1
    assert sorted(canonical_ranks(mol)) == list(range(6))


def test_ranks_isobutane_against_automorphisms():
    mol = parse_smiles("CC(C)C")
    classes = invariant_classes(mol)
    orbits = automorphism_orbits(mol)
    assert classes.count(classes[1]) == 1
    assert classes[0] == classes[2] == classes[3]
    assert orbits[0] == orbits[2] == orbits[3] != orbits[1]


@pytest.mark.parametrize("text", ["CC(C)C", "CCO", "OCC(O)CO", "C1CC1C", "CC(=O)OC", "FC(F)(F)Cl", "C1CCC1", "c1ccncc1"])
def test_refined_classes_equal_orbits(text):
    # holds for these small graphs; refinement can never split an orbit
    mol = parse_smiles(text)
    classes = invariant_classes(mol)
    orbits = automorphism_orbits(mol)
    same_class = {(a, b) for a in range(len(mol)) for b in range(len(mol)) if classes[a] == classes[b]}
    same_orbit = {(a, b) for a in range(len(mol)) for b in range(len(mol)) if orbits[a] == orbits[b]}
    assert same_class == same_orbit


@pytest.mark.parametrize("text", SMALL)
def test_refinement_never_splits_an_orbit(text):
    mol = parse_smiles(text)
    classes = invariant_classes(mol)
    orbits = automorphism_orbits(mol)
    for a in range(len(mol)):
        for b in range(len(mol)):
            if orbits[a] == orbits[b]:
                assert classes[a] == classes[b]


def test_ranks_are_permutation_per_fragment():
    ranks = canonical_ranks(parse_smiles("CCO.NC"))
    assert sorted(ranks[:3]) == [0, 1, 2]
    assert sorted(ranks[3:]) == [0, 1]


@pytest.mark.parametrize(
    "a, b, same",
    [
        ("C[C@H](N)O", "C[C@@H](O)N", True),
        ("C[C@H](N)O", "C[C@@H](N)O", False),
        ("F/C=C/F", "F\\C=C\\F", True),
        ("F/C=C/F", "F/C=C\\F", False),
        ("C[C@H]1C[C@H]1C", "C[C@@H]1C[C@@H]1C", True),  # meso
        ("C[C@H]1C[C@@H]1C", "C[C@@H]1C[C@H]1C", False),  # enantiomers
        ("C[C@H]1C[C@@H]1C", "C[C@@H]1C[C@@H]1C", False),
        ("C[C@H]1CC[C@@H](C)CC1", "C[C@@H]1CC[C@H](C)CC1", True),
    ],
)
def test_stereo_aware_canonical_equality(a, b, same):
    assert (canonical_smiles(a) == canonical_smiles(b)) == same
    ma, mb = parse_smiles(a), parse_smiles(b)
    assert is_isomorphic(ma, mb) == same


@pytest.mark.parametrize("text", SMALL)
def test_canonical_agrees_with_isomorphism_oracle(text):
    mol = parse_smiles(text)
    canon = parse_smiles(canonicalize(mol))
    assert is_isomorphic(canon, mol)


@pytest.mark.parametrize(
    "text",
    ["c1ccc(cc1)C(c1ccccc1)(c1ccccc1)c1ccccc1", "C12C3C4C1C5C2C3C45", "C1C2CC3CC1CC(C2)C3", "FC(F)(F)C(F)(F)F",
     "C[C@H]1C[C@@H]1C", "CC(C)(C)c1cc(C(C)(C)C)cc(C(C)(C)C)c1"],
)
def test_orbit_pruning_keeps_the_minimum(text):
    mol = parse_smiles(text)
    assert _fragment_canonical(mol, prune=True)[0] == _fragment_canonical(mol, prune=False)[0]


def test_canonical_fragments_heavy_first_then_lexicographic():
    assert canonical_smiles("CNC.CC(=O)c1ccc(Br)nc1") == "CC(=O)c1ccc(Br)nc1.CNC"
    assert canonical_smiles("O.N") == "N.O"
    assert canonical_smiles("CC.CCC") == "CCC.CC"


def test_determinism():
    mol = parse_smiles("CC(C)Cc1ccc(C(C)C(=O)O)cc1")
    assert enumerate_random(mol, 12345) == enumerate_random(mol, 12345)
    assert canonicalize(mol) == canonicalize(parse_smiles("CC(C)Cc1ccc(C(C)C(=O)O)cc1"))


def test_seed_must_be_64_bit():
    mol = parse_smiles("CCO")
    enumerate_random(mol, (1 << 64) - 1)
    with pytest.raises(ValueError):
        enumerate_random(mol, 1 << 64)
    with pytest.raises(ValueError):
        enumerate_random(mol, -1)


# --- enumeration -------------------------------------------------------------


def test_cco_enumerations_cover_every_dfs_output():
    mol = parse_smiles("CCO")
    oracle = all_dfs_strings_linear(["C", "C", "O"])
    assert oracle == {"CCO", "OCC", "C(C)O", "C(O)C"}
    seen = {enumerate_random(mol, s) for s in range(1000)}
    assert seen <= oracle
    assert len(seen) >= 2
    assert seen == oracle


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(corpus()), st.integers(0, (1 << 64) - 1))
def test_enumeration_is_canonically_invariant(text, seed):
    mol = parse_smiles(text)
    assert canonical_smiles(enumerate_random(mol, seed)) == canonicalize(mol)


# --- fragments ---------------------------------------------------------------


def test_split_fragments():
    frags = split_fragments(parse_smiles("CC.O"))
    assert [write_smiles(f) for f in frags] == ["CC", "O"]
    assert len(split_fragments(parse_smiles("CCO"))) == 1
    frags = split_fragments(parse_smiles("CC(=O)c1ccc(Br)nc1.CNC"))
    assert [f.heavy_atom_count for f in frags] == [10, 3]


def test_largest_fragment():
    assert canonicalize(largest_fragment(parse_smiles("CC(=O)c1ccc(Br)nc1.CNC"))) == "CC(=O)c1ccc(Br)nc1"
    assert canonicalize(largest_fragment(parse_smiles("CCO"))) == "CCO"
    assert canonicalize(largest_fragment(parse_smiles("CC.CC"))) == "CC"
    # equal heavy atoms: the longer canonical string wins
    assert canonicalize(largest_fragment(parse_smiles("CC(C)C.C=CC=C"))) == "C=CC=C"
    # equal heavy atoms and length: lexicographically smaller wins
    assert canonicalize(largest_fragment(parse_smiles("CCCO.CCOC"))) == "CCCO"


def test_largest_fragment_of_empty_molecule():
    empty = type(parse_smiles("C"))(())
    with pytest.raises(ValueError):
        largest_fragment(empty)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["CCO", "c1ccccc1", "CNC", "O", "CC(=O)O", "[Na+]", "CCCC"]), min_size=1, max_size=4),
       st.randoms(use_true_random=False))
def test_largest_fragment_ignores_fragment_order(frags, rnd):
    shuffled = list(frags)
    rnd.shuffle(shuffled)
    a = canonicalize(largest_fragment(parse_smiles(".".join(frags))))
    b = canonicalize(largest_fragment(parse_smiles(".".join(shuffled))))
    assert a == b


@pytest.mark.parametrize("text, expected", [("C[C@H](N)O", True), ("CCO", False), ("F/C=C/F", True), ("F\\C=C\\F", True)])
def test_contains_stereo(text, expected):
    assert contains_stereo(text) is expected


# --- refinement kernels ------------------------------------------------------


@st.composite
def random_graphs(draw):
    n = draw(st.integers(1, 30))
    edges = set()
    for _ in range(draw(st.integers(0, 2 * n))):
        a, b = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    codes = {e: draw(st.integers(1, 4)) for e in sorted(edges)}
    classes = [draw(st.integers(0, 3)) for _ in range(n)]
    adj = [[] for _ in range(n)]
    for (a, b), c in codes.items():
        adj[a].append((b, c))
        adj[b].append((a, c))
    indptr, indices, bond_codes = [0], [], []
    for a in range(n):
        for nb, c in adj[a]:
            indices.append(nb)
            bond_codes.append(c)
        indptr.append(len(indices))
    dense = {v: i for i, v in enumerate(sorted(set(classes)))}
    return indptr, indices, bond_codes, [dense[c] for c in classes]


@pytest.mark.skipif(_core.BACKEND != "cython", reason="compiled kernel not built")
@settings(max_examples=300, deadline=None)
@given(random_graphs())
def test_compiled_and_python_refinement_agree(graph):
    from rxnaug._core import _refine

    assert _refine.refine_partition(*graph) == _refine_py.refine_partition(*graph)


@pytest.mark.parametrize("text", corpus()[:40])
def test_refinement_on_molecules_matches_python(text):
    mol = parse_smiles(text)
    indptr, indices, codes = _csr(mol)
    initial = invariant_classes(mol)
    assert _core.refine_partition(indptr, indices, codes, initial) == _refine_py.refine_partition(indptr, indices, codes, initial)


@settings(max_examples=100, deadline=None)
@given(random_graphs())
def test_refinement_is_stable_and_dense(graph):
    out = _refine_py.refine_partition(*graph)
    assert sorted(set(out)) == list(range(len(set(out))))
    assert _refine_py.refine_partition(graph[0], graph[1], graph[2], out) == out
    # refinement only splits classes
    before = graph[3]
    for a in range(len(out)):
        for b in range(len(out)):
            if out[a] == out[b]:
                assert before[a] == before[b]
