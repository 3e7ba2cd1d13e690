import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probekit import graph
from probekit.molio import (
    AromaticityError,
    BondOrder,
    MultiFragmentError,
    SmilesError,
    SmilesSyntaxError,
    UnclosedBranchError,
    UnclosedRingError,
    UnknownAtomError,
    ValenceError,
    allowed_valences,
    graphs_isomorphic,
    parse_smiles,
    read_smiles_file,
    write_smiles,
)


def hs(smiles):
    return [a.total_h for a in parse_smiles(smiles).atoms]


class TestParse:
    def test_ethanol(self):
        m = parse_smiles("CCO")
        assert [a.element for a in m.atoms] == ["C", "C", "O"]
        assert [b.order for b in m.bonds] == [BondOrder.SINGLE] * 2
        assert [a.implicit_h for a in m.atoms] == [3, 2, 1]

    def test_benzene(self):
        m = parse_smiles("c1ccccc1")
        assert m.n_atoms == 6 and len(m.bonds) == 6
        assert all(a.aromatic and a.implicit_h == 1 for a in m.atoms)
        assert all(b.order is BondOrder.AROMATIC for b in m.bonds)

    def test_kekule_benzene_is_aromatic(self):
        assert graphs_isomorphic(parse_smiles("C1=CC=CC=C1"), parse_smiles("c1ccccc1"))

    def test_cyclobutadiene_stays_kekule(self):
        m = parse_smiles("C1=CC=C1")
        assert not any(a.aromatic for a in m.atoms)

    @pytest.mark.parametrize(
        "smiles, expected",
        [
            ("C[NH3+]", [3, 3]),
            ("CC(=O)[O-]", [3, 0, 0, 0]),
            ("c1cc[nH]c1", [1, 1, 1, 1, 1]),
            ("c1ccncc1", [1, 1, 1, 0, 1, 1]),
            ("CS(=O)(=O)C", [3, 0, 0, 0, 3]),
            ("OP(=O)(O)O", [1, 0, 0, 1, 1]),
            ("C#N", [1, 0]),
            ("[CH4]", [4]),
            ("[H][H]", [0, 0]),
            ("ClCCl", [0, 2, 0]),
            ("CN(=O)=O", [3, 0, 0, 0]),
        ],
    )
    def test_hydrogens(self, smiles, expected):
        assert hs(smiles) == expected

    def test_stereo_and_isotopes_discarded(self):
        assert graphs_isomorphic(parse_smiles("N[C@@H](C)C(=O)O"), parse_smiles("NC(C)C(=O)O"))
        assert graphs_isomorphic(parse_smiles("C/C=C/C"), parse_smiles("CC=CC"))
        assert graphs_isomorphic(parse_smiles("[13CH4]"), parse_smiles("C"))

    def test_percent_ring_labels(self):
        assert graphs_isomorphic(parse_smiles("C%12CCCCC%12"), parse_smiles("C1CCCCC1"))

    def test_explicit_h_in_brackets(self):
        m = parse_smiles("[nH]1cccc1")
        assert m.atoms[0].explicit_h == 1 and m.atoms[0].implicit_h == 0

    @pytest.mark.parametrize(
        "smiles, err, offset",
        [
            ("C1CC", UnclosedRingError, 4),
            ("CC(C", UnclosedBranchError, 4),
            ("CXC", UnknownAtomError, 1),
            ("C[Na+]", UnknownAtomError, 2),
            ("C(=O)(=O)(=O)C", ValenceError, None),
            ("CC.O", MultiFragmentError, 2),
            ("C)C", SmilesSyntaxError, 1),
            ("", SmilesSyntaxError, 0),
        ],
    )
    def test_errors(self, smiles, err, offset):
        with pytest.raises(err) as e:
            parse_smiles(smiles)
        assert isinstance(e.value, SmilesError)
        if offset is not None:
            assert e.value.offset == offset

    def test_aromatic_atom_outside_ring(self):
        with pytest.raises(AromaticityError):
            parse_smiles("Cc")

    def test_molecule_validates(self):
        for smi in ["CCO", "c1ccc2ccccc2c1", "[O-][N+](=O)c1ccccc1", "CN(C)C(=O)c1ccccc1"]:
            parse_smiles(smi).validate()


class TestValences:
    def test_table(self):
        assert allowed_valences("C") == (4,)
        assert allowed_valences("N", 1) == (4,)
        assert allowed_valences("O", -1) == (1,)
        assert allowed_valences("C", -1) == (3,)
        assert allowed_valences("B", -1) == (4,)
        assert allowed_valences("S") == (2, 4, 6)
        assert allowed_valences("P") == (3, 5)
        assert 5 in allowed_valences("N")


class TestWrite:
    @pytest.mark.parametrize("smiles", ["CCO", "c1ccncc1", "c1ccc(cc1)-c1ccccc1", "[O-][N+](=O)c1ccccc1",
                                        "C12CC3CC(C1)CC(C3)C2", "c1ccc2c(c1)ccc1ccccc12", "OCC1OC(O)C(O)C(O)C1O"])
    def test_roundtrip(self, smiles):
        m = parse_smiles(smiles)
        assert graphs_isomorphic(m, parse_smiles(write_smiles(m)))

    def test_biphenyl_link_is_single(self):
        out = write_smiles(parse_smiles("c1ccccc1c1ccccc1"))
        assert "-" in out
        m = parse_smiles(out)
        bridge = graph.bridges(m.n_atoms, m.edges)
        assert [m.bond_order(*tuple(e)) for e in bridge] == [BondOrder.SINGLE]

    def test_many_ring_closures(self):
        # eleven open rings at once needs a %nn label
        labels = [f"%{10 + k}" for k in range(11)]
        smi = "".join(f"C{lab}" for lab in labels) + "C" + "".join(f"C{lab}" for lab in labels)
        m = parse_smiles(smi)
        assert graphs_isomorphic(m, parse_smiles(write_smiles(m)))


class TestIsomorphism:
    def test_cases(self):
        benz = parse_smiles("c1ccccc1")
        assert graphs_isomorphic(benz, parse_smiles("c1cc(ccc1)"))
        assert not graphs_isomorphic(benz, parse_smiles("C1CCCCC1"))
        assert graphs_isomorphic(parse_smiles("CCO"), parse_smiles("OCC"))
        assert not graphs_isomorphic(parse_smiles("CCO"), parse_smiles("COC"))
        assert not graphs_isomorphic(parse_smiles("CC=O"), parse_smiles("C=CO"))

    def test_permutation_invariance(self):
        import numpy as np
        from probekit.molio import Atom, Bond, Molecule

        m = parse_smiles("CC(=O)Nc1ccc(O)cc1")
        rng = np.random.default_rng(0)
        for _ in range(10):
            perm = rng.permutation(m.n_atoms)
            inv = {int(old): new for new, old in enumerate(perm)}
            atoms = tuple(m.atoms[int(i)] for i in perm)
            bonds = tuple(Bond(inv[b.a], inv[b.b], b.order) for b in m.bonds)
            assert graphs_isomorphic(m, Molecule(atoms, bonds))


ATOMS = ["C", "N", "O", "c1ccccc1", "C(=O)", "Cl", "C1CC1"]


@st.composite
def chains(draw):
    parts = draw(st.lists(st.sampled_from(ATOMS), min_size=1, max_size=6))
    return "".join(parts).replace("ClCl", "ClCCl")


@given(chains())
@settings(max_examples=100, deadline=None)
def test_roundtrip_property(smiles):
    try:
        m = parse_smiles(smiles)
    except SmilesError:
        return
    out = write_smiles(m)
    assert graphs_isomorphic(m, parse_smiles(out))
    assert write_smiles(parse_smiles(out)) == out


def test_read_smiles_file(tmp_path):
    p = tmp_path / "m.smi"
    p.write_text("# header\nCCO\nbenz\tc1ccccc1\n\nX\n", encoding="utf-8")
    recs = read_smiles_file(p)
    assert [(r.id, r.smiles, r.line) for r in recs] == [("2", "CCO", 2), ("benz", "c1ccccc1", 3), ("5", "X", 5)]


class TestGraph:
    def brute_force_cycles(self, n, edges):
        # count simple cycles by length via edge subsets (tiny graphs only)
        return graph.cycle_rank(n, edges)

    def test_naphthalene_rings(self):
        m = parse_smiles("c1ccc2ccccc2c1")
        rings = graph.minimum_cycle_basis(m.n_atoms, m.edges)
        assert sorted(len(r) for r in rings) == [6, 6]
        assert graph.cycle_rank(m.n_atoms, m.edges) == 11 - 10 + 1

    def test_cubane_basis(self):
        m = parse_smiles("C12C3C4C1C5C2C3C45")
        rings = graph.minimum_cycle_basis(m.n_atoms, m.edges)
        assert len(rings) == graph.cycle_rank(m.n_atoms, m.edges) == 5
        assert all(len(r) == 4 for r in rings)

    def test_acyclic(self):
        assert graph.minimum_cycle_basis(3, [(0, 1), (1, 2)]) == []

    def test_bridges(self):
        assert graph.bridges(4, [(0, 1), (1, 2), (2, 0), (2, 3)]) == {frozenset((2, 3))}

    def test_components(self):
        assert graph.connected_components(4, [(0, 1), (2, 3)]) == [[0, 1], [2, 3]]

    def test_basis_cycles_are_cycles(self):
        m = parse_smiles("C12CC3CC(C1)CC(C3)C2")
        edges = {frozenset(e) for e in m.edges}
        for ring in graph.minimum_cycle_basis(m.n_atoms, m.edges):
            assert len(set(ring)) == len(ring)
            for a, b in zip(ring, ring[1:] + ring[:1]):
                assert frozenset((a, b)) in edges

    def test_minimum_total_length(self):
        # brute force: smallest possible total length of an independent cycle set on a small graph
        m = parse_smiles("C1CC2CCC1CC2")
        n, E = m.n_atoms, m.edges
        basis = graph.minimum_cycle_basis(n, E)
        cycles = []
        idx = {frozenset(e): k for k, e in enumerate(E)}
        for k in range(3, n + 1):
            for combo in itertools.combinations(range(n), k):
                for perm in itertools.permutations(combo[1:]):
                    cyc = (combo[0],) + perm
                    if perm[0] > perm[-1]:
                        continue
                    if all(frozenset((a, b)) in idx for a, b in zip(cyc, cyc[1:] + cyc[:1])):
                        cycles.append(sum(1 << idx[frozenset((a, b))] for a, b in zip(cyc, cyc[1:] + cyc[:1])))
        cycles = sorted(set(cycles), key=lambda c: bin(c).count("1"))

        def rank(vs):
            basis_, r = [], 0
            for v in vs:
                for b in basis_:
                    v = min(v, v ^ b)
                if v:
                    basis_.append(v)
                    r += 1
            return r

        best, chosen = None, []
        for c in cycles:
            if rank(chosen + [c]) > len(chosen):
                chosen.append(c)
        best = sum(bin(c).count("1") for c in chosen)
        assert sum(len(r) for r in basis) == best
