"""Regenerate tests/data/curated_truth.csv with RDKit as the reference toolkit.

Run once by a maintainer (``python scripts/freeze_ground_truth.py`` in an
environment that has RDKit); the output is committed and the test suite
only reads the frozen CSV. RDKit is not a dependency of probekit.
"""

import csv
import sys
from pathlib import Path

from rdkit import Chem

HERE = Path(__file__).resolve().parent.parent / "tests" / "data"

SMARTS = {
    "benzene": "c1ccccc1",
    "pyridine": "n1ccccc1",
    "ketone": "[C;!a](=[O;!a])(-[#6])-[#6]",
    "methoxy": "[O;!a;D2](-[C;!a;!H0;!H1;!H2])-[#6]",
    "para_hydroxylation": "[O;!a;!H0]-c1cc[c;!H0]cc1",
    "amide": "[C;!a](=[O;!a])-[N;!a]",
    "nitro": "[$([N;+1](=[O;+0])-[O;-1]),$([N;+0](=[O;+0])=[O;+0])]",
}
GROUPS = ["aromatic_ring", "aromatic_carbocycle", "saturated_ring", "benzene", "pyridine", "aniline",
          "ketone", "methoxy", "para_hydroxylation", "amide", "nitro", "bicyclic"]


def ring_flags(mol):
    rings = [list(r) for r in Chem.GetSymmSSSR(mol)]
    atom = mol.GetAtomWithIdx

    def bond_single(a, b):
        return mol.GetBondBetweenAtoms(a, b).GetBondType() == Chem.BondType.SINGLE

    arom = [r for r in rings if all(atom(a).GetIsAromatic() for a in r)]
    carbo = [r for r in arom if all(atom(a).GetSymbol() == "C" for a in r)]
    sat = [r for r in rings if not any(atom(a).GetIsAromatic() for a in r)
           and all(bond_single(r[k], r[(k + 1) % len(r)]) for k in range(len(r)))]
    return rings, arom, carbo, sat


def aniline(mol, carbo_atoms):
    for b in mol.GetBonds():
        if b.GetBondType() != Chem.BondType.SINGLE:
            continue
        for c, n in ((b.GetBeginAtom(), b.GetEndAtom()), (b.GetEndAtom(), b.GetBeginAtom())):
            if c.GetIdx() not in carbo_atoms or n.GetSymbol() != "N" or n.GetIsAromatic():
                continue
            if n.GetTotalNumHs() < 1:
                continue
            if all(x.GetBondType() == Chem.BondType.SINGLE for x in n.GetBonds()):
                return True
    return False


def main(out=HERE / "curated_truth.csv"):
    rows = []
    for line in (HERE / "curated.smi").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        mol_id, smi = line.split("\t")
        mol = Chem.MolFromSmiles(smi)
        rings, arom, carbo, sat = ring_flags(mol)
        carbo_atoms = {a for r in carbo for a in r}
        flags = {
            "aromatic_ring": bool(arom),
            "aromatic_carbocycle": bool(carbo),
            "saturated_ring": bool(sat),
            "aniline": aniline(mol, carbo_atoms),
            "bicyclic": len(rings) >= 2,
        }
        for name, sma in SMARTS.items():
            flags[name] = mol.HasSubstructMatch(Chem.MolFromSmarts(sma))
        counts = {e: sum(a.GetSymbol() == e for a in mol.GetAtoms()) for e in "CNO"}
        counts["H"] = sum(a.GetTotalNumHs() for a in mol.GetAtoms())
        rows.append([mol_id, smi] + [counts[e] for e in "CNOH"] + [int(flags[g]) for g in GROUPS])
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "smiles", "count_C", "count_N", "count_O", "count_H"] + GROUPS)
        w.writerows(rows)


if __name__ == "__main__":
    main(*sys.argv[1:])
