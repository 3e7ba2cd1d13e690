"""Pairwise probing datasets: remove one functional-group occurrence, refill hydrogens."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from probekit.molio import Atom, Bond, BondOrder, Molecule, SmilesError, SmilesRecord, parse_smiles, read_smiles_file, write_smiles
from probekit.chemprops.patterns import Group, _Context, detect_group, group_matches, resolve_group

__all__ = [
    "RemovalError",
    "DisconnectedError",
    "ValenceRepairError",
    "TooSmallError",
    "MolPair",
    "remove_group",
    "gen_pairs",
    "write_pairs",
    "read_pairs_csv",
]

MIN_HEAVY_ATOMS = 2


class RemovalError(ValueError):
    pass


class DisconnectedError(RemovalError):
    pass


class ValenceRepairError(RemovalError):
    pass


class TooSmallError(RemovalError):
    pass


@dataclass(frozen=True)
class MolPair:
    source_id: str
    target_id: str
    source: Molecule
    target: Molecule
    group: str
    removed_atoms: tuple[int, ...]


def remove_group(m: Molecule, match: Sequence[int]) -> Molecule:
    """Delete the matched atoms and give each neighbour hydrogens for the bonds it lost.

    Rejected (``RemovalError``) when the remainder falls apart, has fewer
    than two heavy atoms, or would need an aromatic ring repaired.
    """
    removed = set(match)
    if not removed or any(not 0 <= i < m.n_atoms for i in removed):
        raise ValueError("match refers to atoms outside the molecule")
    keep = [i for i in range(m.n_atoms) if i not in removed]
    new_index = {old: k for k, old in enumerate(keep)}

    lost = {i: 0 for i in keep}
    for b in m.bonds:
        a_in, b_in = b.a in removed, b.b in removed
        if a_in == b_in:
            continue
        survivor = b.b if a_in else b.a
        if b.order is BondOrder.AROMATIC:
            raise ValenceRepairError(f"removal breaks the aromatic ring at atom {survivor}")
        lost[survivor] += b.order.valence

    atoms = []
    for i in keep:
        a = m.atoms[i]
        atoms.append(replace(a, implicit_h=a.implicit_h + lost[i]) if lost[i] else a)
    bonds = tuple(Bond(new_index[b.a], new_index[b.b], b.order) for b in m.bonds
                  if b.a not in removed and b.b not in removed)
    out = Molecule(tuple(atoms), bonds)

    if out.heavy_atom_count() < MIN_HEAVY_ATOMS:
        raise TooSmallError(f"only {out.heavy_atom_count()} heavy atom(s) would remain")
    if not out.is_connected():
        raise DisconnectedError("removal splits the molecule into several fragments")
    for k in range(out.n_atoms):
        if not out.valence_ok(k):
            raise ValenceRepairError(f"hydrogen refill leaves atom {keep[k]} with an invalid valence")
    return out


def gen_pairs(
    smiles: str | Path | Iterable[SmilesRecord],
    group: str,
    limit: int | None = None,
    seed: int = 0,
    library: Mapping[str, Group] | None = None,
) -> tuple[list[MolPair], list[tuple[str, str]]]:
    """Build (source, target) pairs for every molecule containing ``group``.

    Only the first match is removed. Pairs whose target is invalid or still
    contains the group are skipped; the second return value lists
    ``(id, reason)`` for every skipped molecule that had the group. With
    ``limit``, a seeded subset of that many pairs is kept, in input order.
    """
    g = resolve_group(group, library)
    records = read_smiles_file(smiles) if isinstance(smiles, (str, Path)) else list(smiles)
    pairs: list[MolPair] = []
    skipped: list[tuple[str, str]] = []
    for rec in records:
        try:
            mol = parse_smiles(rec.smiles)
        except SmilesError:
            continue
        ctx = _Context(mol)
        matches = group_matches(mol, g, library, ctx)
        if not matches:
            continue
        first = matches[0]
        try:
            target = remove_group(mol, first)
        except RemovalError as exc:
            skipped.append((rec.id, str(exc)))
            continue
        if detect_group(target, g, library):
            skipped.append((rec.id, "target still contains the group"))
            continue
        pairs.append(MolPair(rec.id, f"{rec.id}_no_{g.name}", mol, target, g.name, tuple(sorted(first))))
    if not pairs:
        raise ValueError(f"no valid pairs could be generated for group {g.name!r}")
    if limit is not None and limit < len(pairs):
        keep = np.sort(np.random.default_rng(seed).choice(len(pairs), size=limit, replace=False))
        pairs = [pairs[i] for i in keep]
    return pairs, skipped


def write_pairs(pairs: Sequence[MolPair], stem: str | Path) -> dict[str, Path]:
    """Write ``<stem>.pairs.csv``, ``<stem>.source.smi`` and ``<stem>.target.smi``."""
    stem = Path(stem)
    paths = {
        "pairs": stem.with_name(stem.name + ".pairs.csv"),
        "source": stem.with_name(stem.name + ".source.smi"),
        "target": stem.with_name(stem.name + ".target.smi"),
    }
    with open(paths["pairs"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "target_id", "group"])
        for p in pairs:
            w.writerow([p.source_id, p.target_id, p.group])
    paths["source"].write_text("".join(f"{p.source_id}\t{write_smiles(p.source)}\n" for p in pairs), encoding="utf-8")
    paths["target"].write_text("".join(f"{p.target_id}\t{write_smiles(p.target)}\n" for p in pairs), encoding="utf-8")
    return paths


def read_pairs_csv(path: str | Path) -> list[tuple[str, str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["source_id", "target_id", "group"]:
            raise ValueError("pairs CSV header must be 'source_id,target_id,group'")
        return [tuple(r) for r in reader if r]
