"""Atom counts and group-presence labels computed straight from SMILES."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from probekit.core import Kind, LabelTable
from probekit.molio import ELEMENTS, Molecule, SmilesError, SmilesRecord, parse_smiles, read_smiles_file
from probekit.chemprops.patterns import Group, _Context, detect_group, group_names

__all__ = ["count_atoms", "RecordError", "property_names", "compute_label_table", "write_error_sidecar"]

COUNT_ELEMENTS = ("C", "N", "O", "H")


def count_atoms(m: Molecule, element: str) -> int:
    """Number of atoms of ``element``; for ``H`` the attached hydrogens are counted too."""
    if element not in ELEMENTS:
        raise ValueError(f"unsupported element {element!r}")
    if element == "H":
        return sum(a.total_h for a in m.atoms) + sum(1 for a in m.atoms if a.element == "H")
    return sum(1 for a in m.atoms if a.element == element)


@dataclass(frozen=True)
class RecordError:
    line: int
    id: str
    smiles: str
    message: str


def property_names(library: Mapping[str, Group] | None = None) -> list[str]:
    return [f"count_{e}" for e in COUNT_ELEMENTS] + group_names(library)


def _property_fn(name: str, library):
    if name.startswith("count_"):
        element = name[len("count_"):]
        if element not in COUNT_ELEMENTS:
            raise KeyError(f"unknown property {name!r}")
        return Kind("count"), lambda m, ctx: count_atoms(m, element)
    known = group_names(library)
    if name not in known:
        raise KeyError(f"unknown property {name!r}")
    return Kind("binary"), lambda m, ctx: int(detect_group(m, name, library, ctx))


def compute_label_table(
    smiles: str | Path | Iterable[SmilesRecord],
    properties: Sequence[str],
    library: Mapping[str, Group] | None = None,
) -> tuple[LabelTable, list[RecordError]]:
    """Label every parseable molecule; unparseable rows are returned as errors.

    ``smiles`` is a SMILES list file or an iterable of records. Count
    properties (``count_C`` ...) get kind ``count``, groups ``binary``.
    """
    if not properties:
        raise ValueError("no properties requested")
    fns = {p: _property_fn(p, library) for p in properties}
    records = read_smiles_file(smiles) if isinstance(smiles, (str, Path)) else list(smiles)

    ids, rows, errors = [], [], []
    for rec in records:
        try:
            mol = parse_smiles(rec.smiles)
        except SmilesError as exc:
            errors.append(RecordError(rec.line, rec.id, rec.smiles, str(exc)))
            continue
        ctx = _Context(mol)
        ids.append(rec.id)
        rows.append([fns[p][1](mol, ctx) for p in properties])
    if not ids:
        raise ValueError(f"none of the {len(records)} SMILES records could be parsed")
    arr = np.array(rows, dtype=np.float64).reshape(len(ids), len(properties))
    table = LabelTable(ids, {p: arr[:, j] for j, p in enumerate(properties)}, {p: fns[p][0] for p in properties})
    return table, errors


def write_error_sidecar(errors: Sequence[RecordError], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["line", "id", "smiles", "error"])
        for e in errors:
            w.writerow([e.line, e.id, e.smiles, e.message])
