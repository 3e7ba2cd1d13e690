"""SMILES parsing and writing, valence-based hydrogen assignment, graph isomorphism.

Covers the organic subset, bracket atoms, branches, ring closures (``1-9``
and ``%nn``) and the bond symbols ``- = # :``. Stereo marks and isotopes
are read and discarded. Multi-fragment (``.``) input is rejected.

Aromaticity is taken from the input (lowercase atoms, ``:`` bonds). The
one exception: a kekulized ring of 4n+2 atoms with strictly alternating
single/double bonds is rewritten as aromatic, so ``C1=CC=CC=C1`` and
``c1ccccc1`` produce the same graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterator

from probekit import graph

__all__ = [
    "BondOrder",
    "Atom",
    "Bond",
    "Molecule",
    "SmilesError",
    "SmilesSyntaxError",
    "UnclosedRingError",
    "UnclosedBranchError",
    "UnknownAtomError",
    "ValenceError",
    "AromaticityError",
    "MultiFragmentError",
    "allowed_valences",
    "parse_smiles",
    "write_smiles",
    "graphs_isomorphic",
    "read_smiles_file",
    "SmilesRecord",
]

ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_SYMBOLS = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
ELEMENTS = {"H", "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
_VALENCE_ELECTRONS = {"H": 1, "B": 3, "C": 4, "N": 5, "O": 6, "P": 5, "S": 6, "F": 7, "Cl": 7, "Br": 7, "I": 7}


class BondOrder(enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def valence(self) -> int:
        # an aromatic bond counts one unit; the ring's pi share is handled per atom
        return {"single": 1, "double": 2, "triple": 3, "aromatic": 1}[self.value]


_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "/": BondOrder.SINGLE, "\\": BondOrder.SINGLE,
                 "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class SmilesError(ValueError):
    """Base class for SMILES problems; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class SmilesSyntaxError(SmilesError):
    pass


class UnclosedRingError(SmilesError):
    pass


class UnclosedBranchError(SmilesError):
    pass


class UnknownAtomError(SmilesError):
    pass


class ValenceError(SmilesError):
    pass


class AromaticityError(SmilesError):
    pass


class MultiFragmentError(SmilesError):
    pass


# ---------------------------------------------------------------------------
# Graph types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    aromatic: bool = False
    explicit_h: int = 0
    implicit_h: int = 0

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def neighbors(self) -> list[list[tuple[int, BondOrder]]]:
        """Per atom, ``(neighbor, order)`` sorted by neighbor index."""
        out: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            out[bond.a].append((bond.b, bond.order))
            out[bond.b].append((bond.a, bond.order))
        for nb in out:
            nb.sort(key=lambda t: t[0])
        return out

    @cached_property
    def bond_lookup(self) -> dict[frozenset[int], BondOrder]:
        return {frozenset((b.a, b.b)): b.order for b in self.bonds}

    def bond_order(self, i: int, j: int) -> BondOrder | None:
        return self.bond_lookup.get(frozenset((i, j)))

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def bond_valence(self, i: int) -> int:
        return sum(o.valence for _, o in self.neighbors[i])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(b.a, b.b) for b in self.bonds]

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.element != "H")

    def is_connected(self) -> bool:
        return len(graph.connected_components(self.n_atoms, self.edges)) <= 1

    def valence_ok(self, i: int) -> bool:
        atom = self.atoms[i]
        s = self.bond_valence(i) + atom.total_h
        allowed = allowed_valences(atom.element, atom.charge)
        if atom.aromatic:
            return s in allowed or (s + 1) in allowed
        return s in allowed

    def validate(self) -> None:
        """Raise ``ValueError`` if any structural or valence invariant fails."""
        seen = set()
        for b in self.bonds:
            if b.a == b.b:
                raise ValueError(f"self-loop on atom {b.a}")
            key = frozenset((b.a, b.b))
            if key in seen:
                raise ValueError(f"duplicate bond {b.a}-{b.b}")
            seen.add(key)
            if b.order is BondOrder.AROMATIC and not (self.atoms[b.a].aromatic and self.atoms[b.b].aromatic):
                raise ValueError(f"aromatic bond {b.a}-{b.b} between non-aromatic atoms")
        if not self.is_connected():
            raise ValueError("molecule is not connected")
        for i in range(self.n_atoms):
            if not self.valence_ok(i):
                raise ValueError(f"valence violated on atom {i} ({self.atoms[i].element})")

    def __str__(self) -> str:
        return write_smiles(self)


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...]:
    """Allowed total valences (bond orders + H) for an element/charge pair.

    Charged atoms take the valence of their isoelectronic neutral
    counterpart ([N+] 4, [O-] 1, [C-] 3, [B-] 4). P and S additionally
    allow the +2/+4 expanded octets up to 6; neutral N also admits 5 so
    the uncharged ``N(=O)=O`` nitro spelling parses.
    """
    if element == "H":
        return (1,) if charge == 0 else (0,)
    eff = _VALENCE_ELECTRONS[element] - charge
    if eff < 0 or eff > 8:
        return ()
    base = eff if eff <= 4 else 8 - eff
    vals = [base]
    if element in ("P", "S") and eff >= 5:
        vals += [v for v in (base + 2, base + 4) if v <= 6]
    if element == "N" and charge == 0:
        vals.append(5)
    return tuple(vals)


def _implicit_h(element: str, aromatic: bool, bond_valence: int) -> int | None:
    """Hydrogens implied for an organic-subset atom; None when no valence fits."""
    for v in allowed_valences(element, 0):
        if v >= bond_valence:
            if aromatic:
                return max(0, v - bond_valence - 1)
            return v - bond_valence
    return None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


@dataclass
class _ProtoAtom:
    element: str
    aromatic: bool
    charge: int = 0
    hcount: int | None = None  # None for organic-subset atoms
    offset: int = 0


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0
        self.atoms: list[_ProtoAtom] = []
        # (a, b, order, implicit) -- implicit marks a default bond between two aromatic atoms
        self.bonds: list[list] = []
        self.bond_keys: set[frozenset[int]] = set()

    def error(self, cls, msg, offset=None):
        raise cls(msg, self.i if offset is None else offset)

    def parse(self) -> Molecule:
        s = self.s
        if not s:
            self.error(SmilesSyntaxError, "empty SMILES")
        prev: int | None = None
        pending: tuple[BondOrder, int] | None = None
        branches: list[tuple[int, int]] = []
        rings: dict[int, tuple[int, BondOrder | None, int]] = {}

        while self.i < len(s):
            ch = s[self.i]
            start = self.i
            if ch == "(":
                if prev is None:
                    self.error(SmilesSyntaxError, "branch opened before any atom")
                if pending is not None:
                    self.error(SmilesSyntaxError, "bond symbol before '('")
                if self.i + 1 < len(s) and s[self.i + 1] == ")":
                    self.error(SmilesSyntaxError, "empty branch")
                branches.append((prev, start))
                self.i += 1
            elif ch == ")":
                if not branches:
                    self.error(SmilesSyntaxError, "unmatched ')'")
                if pending is not None:
                    self.error(SmilesSyntaxError, "dangling bond before ')'")
                prev = branches.pop()[0]
                self.i += 1
            elif ch in _BOND_SYMBOLS:
                if prev is None:
                    self.error(SmilesSyntaxError, "bond symbol before any atom")
                if pending is not None:
                    self.error(SmilesSyntaxError, "two consecutive bond symbols")
                pending = (_BOND_SYMBOLS[ch], start)
                self.i += 1
            elif ch == ".":
                self.error(MultiFragmentError, "multi-fragment SMILES ('.') is not supported")
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error(SmilesSyntaxError, "ring closure before any atom")
                num = self._ring_number()
                order = pending[0] if pending else None
                pending = None
                if num in rings:
                    other, other_order, _ = rings.pop(num)
                    if order is not None and other_order is not None and order is not other_order:
                        self.error(SmilesSyntaxError, f"conflicting bond orders on ring closure {num}", start)
                    self._add_bond(other, prev, order or other_order, start)
                else:
                    rings[num] = (prev, order, start)
            elif ch == "[" or ch.isalpha() or ch == "*":
                atom = self._bracket_atom() if ch == "[" else self._organic_atom()
                self.atoms.append(atom)
                idx = len(self.atoms) - 1
                if prev is not None:
                    self._add_bond(prev, idx, pending[0] if pending else None, start)
                pending = None
                prev = idx
            else:
                self.error(SmilesSyntaxError, f"unexpected character {ch!r}")

        end = len(s)
        if pending is not None:
            self.error(SmilesSyntaxError, "SMILES ends with a bond symbol", end)
        if branches:
            self.error(UnclosedBranchError, f"branch opened at offset {branches[-1][1]} is never closed", end)
        if rings:
            num, (_, _, at) = min(rings.items(), key=lambda kv: kv[1][2])
            self.error(UnclosedRingError, f"ring bond {num} opened at offset {at} is never closed", end)
        return self._finish()

    def _ring_number(self) -> int:
        s = self.s
        if s[self.i] == "%":
            digits = s[self.i + 1:self.i + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.error(SmilesSyntaxError, "'%' must be followed by two digits")
            self.i += 3
            return int(digits)
        self.i += 1
        return int(s[self.i - 1])

    def _organic_atom(self) -> _ProtoAtom:
        s, start = self.s, self.i
        two = s[start:start + 2]
        if two in ("Cl", "Br"):
            self.i += 2
            return _ProtoAtom(two, False, offset=start)
        ch = s[start]
        if ch in ORGANIC:
            self.i += 1
            return _ProtoAtom(ch, False, offset=start)
        if ch in AROMATIC_SYMBOLS:
            self.i += 1
            return _ProtoAtom(AROMATIC_SYMBOLS[ch], True, offset=start)
        self.error(UnknownAtomError, f"unknown atom symbol {ch!r}")

    def _bracket_atom(self) -> _ProtoAtom:
        s, start = self.s, self.i
        close = s.find("]", start)
        if close < 0:
            self.error(SmilesSyntaxError, "unterminated bracket atom")
        body = s[start + 1:close]
        j = 0
        while j < len(body) and body[j].isdigit():
            j += 1  # isotope, discarded
        sym = body[j:j + 2]
        if sym in ("Cl", "Br"):
            element, aromatic = sym, False
            j += 2
        elif len(sym) == 2 and sym[0].isupper() and sym[1].islower():
            # inside brackets an uppercase+lowercase pair is always one two-letter symbol
            self.error(UnknownAtomError, f"unknown atom symbol {sym!r} in [{body}]", start + 1 + j)
        elif body[j:j + 1] in ELEMENTS:
            element, aromatic = body[j], False
            j += 1
        elif body[j:j + 1] in AROMATIC_SYMBOLS:
            element, aromatic = AROMATIC_SYMBOLS[body[j]], True
            j += 1
        else:
            self.error(UnknownAtomError, f"unknown atom symbol in [{body}]", start + 1 + j)
        while j < len(body) and body[j] == "@":
            j += 1  # chirality, discarded
        h = 0
        if j < len(body) and body[j] == "H":
            j += 1
            h = 1
            if j < len(body) and body[j].isdigit():
                h = int(body[j])
                j += 1
        charge = 0
        if j < len(body) and body[j] in "+-":
            sign = 1 if body[j] == "+" else -1
            j += 1
            if j < len(body) and body[j].isdigit():
                k = j
                while j < len(body) and body[j].isdigit():
                    j += 1
                charge = sign * int(body[k:j])
            else:
                charge = sign
                while j < len(body) and body[j] == ("+" if sign > 0 else "-"):
                    charge += sign
                    j += 1
        if j < len(body) and body[j] == ":":
            j += 1
            while j < len(body) and body[j].isdigit():
                j += 1  # atom class, discarded
        if j != len(body):
            self.error(SmilesSyntaxError, f"cannot parse bracket atom [{body}]", start + 1 + j)
        self.i = close + 1
        return _ProtoAtom(element, aromatic, charge, h, start)

    def _add_bond(self, a: int, b: int, order: BondOrder | None, offset: int) -> None:
        if a == b:
            self.error(SmilesSyntaxError, "ring closure bonds an atom to itself", offset)
        key = frozenset((a, b))
        if key in self.bond_keys:
            self.error(SmilesSyntaxError, f"duplicate bond between atoms {a} and {b}", offset)
        both_aromatic = self.atoms[a].aromatic and self.atoms[b].aromatic
        implicit = False
        if order is None:
            order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
            implicit = both_aromatic
        elif order is BondOrder.AROMATIC and not both_aromatic:
            self.error(AromaticityError, "aromatic bond ':' between non-aromatic atoms", offset)
        self.bond_keys.add(key)
        self.bonds.append([a, b, order, implicit, offset])

    def _finish(self) -> Molecule:
        n = len(self.atoms)
        edges = [(b[0], b[1]) for b in self.bonds]
        # a default bond between two aromatic atoms outside any ring is single (biphenyl)
        bridge_set = graph.bridges(n, edges)
        for b in self.bonds:
            if b[3] and frozenset((b[0], b[1])) in bridge_set:
                b[2] = BondOrder.SINGLE

        aromatic_bonds = [0] * n
        valence = [0] * n
        for a, c, order, _, _ in self.bonds:
            valence[a] += order.valence
            valence[c] += order.valence
            if order is BondOrder.AROMATIC:
                aromatic_bonds[a] += 1
                aromatic_bonds[c] += 1

        atoms = []
        for i, pa in enumerate(self.atoms):
            if pa.aromatic and aromatic_bonds[i] < 2:
                raise AromaticityError(f"aromatic atom {pa.element.lower()} is not part of an aromatic ring", pa.offset)
            if pa.hcount is None:
                h = _implicit_h(pa.element, pa.aromatic, valence[i])
                if h is None:
                    raise ValenceError(f"{pa.element} with bond valence {valence[i]} exceeds allowed valence", pa.offset)
                atoms.append(Atom(pa.element, 0, pa.aromatic, 0, h))
            else:
                atoms.append(Atom(pa.element, pa.charge, pa.aromatic, pa.hcount, 0))

        mol = Molecule(tuple(atoms), tuple(Bond(a, c, o) for a, c, o, _, _ in self.bonds))
        for i, pa in enumerate(self.atoms):
            if not mol.valence_ok(i):
                raise ValenceError(f"valence violated on {pa.element} (charge {pa.charge:+d})", pa.offset)
        return _perceive_kekule_aromatic(mol)


def _perceive_kekule_aromatic(mol: Molecule) -> Molecule:
    if not any(b.order is BondOrder.DOUBLE for b in mol.bonds):
        return mol
    rings = graph.minimum_cycle_basis(mol.n_atoms, mol.edges)
    orders = dict(mol.bond_lookup)
    aromatic = [a.aromatic for a in mol.atoms]
    changed = True
    while changed:
        changed = False
        for ring in rings:
            if len(ring) % 4 != 2:
                continue
            keys = [frozenset((ring[k], ring[(k + 1) % len(ring)])) for k in range(len(ring))]
            ring_orders = [orders[k] for k in keys]
            if all(o is BondOrder.AROMATIC for o in ring_orders):
                continue
            for phase in (0, 1):
                want = [BondOrder.DOUBLE if (k + phase) % 2 == 0 else BondOrder.SINGLE for k in range(len(ring))]
                if all(o is BondOrder.AROMATIC or o is w for o, w in zip(ring_orders, want)):
                    for k in keys:
                        orders[k] = BondOrder.AROMATIC
                    for a in ring:
                        aromatic[a] = True
                    changed = True
                    break
    if not any(aromatic[i] != a.aromatic for i, a in enumerate(mol.atoms)):
        return mol
    atoms = tuple(replace(a, aromatic=aromatic[i]) for i, a in enumerate(mol.atoms))
    bonds = tuple(Bond(b.a, b.b, orders[frozenset((b.a, b.b))]) for b in mol.bonds)
    return Molecule(atoms, bonds)


def parse_smiles(smiles: str) -> Molecule:
    """Parse one SMILES string into a connected, valence-checked ``Molecule``.

    >>> [a.implicit_h for a in parse_smiles("CCO").atoms]
    [3, 2, 1]

    Raises a ``SmilesError`` subclass carrying the character offset.
    """
    return _Parser(smiles.strip()).parse()


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------


def _atom_token(mol: Molecule, i: int) -> str:
    atom = mol.atoms[i]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if atom.element in ORGANIC and atom.charge == 0:
        if _implicit_h(atom.element, atom.aromatic, mol.bond_valence(i)) == atom.total_h:
            return symbol
    h = atom.total_h
    text = "[" + symbol
    if h:
        text += "H" if h == 1 else f"H{h}"
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        text += sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}"
    return text + "]"


def _bond_token(mol: Molecule, i: int, j: int, order: BondOrder, bridge_set) -> str:
    if order is BondOrder.DOUBLE:
        return "="
    if order is BondOrder.TRIPLE:
        return "#"
    both_aromatic = mol.atoms[i].aromatic and mol.atoms[j].aromatic
    if order is BondOrder.SINGLE:
        return "-" if both_aromatic else ""
    return ":" if frozenset((i, j)) in bridge_set else ""


def write_smiles(mol: Molecule) -> str:
    """Serialize by depth-first traversal from atom 0. Not canonical."""
    n = mol.n_atoms
    if n == 0:
        return ""
    bridge_set = graph.bridges(n, mol.edges)

    # pass 1: spanning tree and ring-closure bonds
    visited = [False] * n
    children: list[list[int]] = [[] for _ in range(n)]
    closures: list[list[int]] = [[] for _ in range(n)]
    stack = [(0, -1)]
    used: set[frozenset[int]] = set()
    order: list[int] = []
    while stack:
        v, parent = stack.pop()
        if visited[v]:
            continue
        visited[v] = True
        order.append(v)
        if parent >= 0:
            children[parent].append(v)
            used.add(frozenset((v, parent)))
        for w, _ in reversed(mol.neighbors[v]):
            if not visited[w]:
                stack.append((w, v))
    for v in range(n):
        for w, _ in mol.neighbors[v]:
            key = frozenset((v, w))
            if key not in used:
                used.add(key)
                closures[v].append(w)
                closures[w].append(v)
    rank = {v: k for k, v in enumerate(order)}

    # pass 2: emit
    digits: dict[frozenset[int], int] = {}
    free: list[int] = []
    next_digit = [1]

    def take_digit() -> int:
        if free:
            free.sort()
            return free.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        if d > 99:
            raise ValueError("too many simultaneously open rings to write")
        return d

    def ring_label(d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    out: list[str] = []

    def emit(v: int) -> None:
        out.append(_atom_token(mol, v))
        closing = sorted((w for w in closures[v] if frozenset((v, w)) in digits), key=lambda w: rank[w])
        opening = sorted((w for w in closures[v] if frozenset((v, w)) not in digits), key=lambda w: rank[w])
        for w in closing:
            d = digits.pop(frozenset((v, w)))
            out.append(ring_label(d))
            free.append(d)
        for w in opening:
            d = take_digit()
            digits[frozenset((v, w))] = d
            out.append(_bond_token(mol, v, w, mol.bond_order(v, w), bridge_set) + ring_label(d))
        kids = sorted(children[v], key=lambda w: rank[w])
        for k, w in enumerate(kids):
            bond = _bond_token(mol, v, w, mol.bond_order(v, w), bridge_set)
            if k < len(kids) - 1:
                out.append("(" + bond)
                emit(w)
                out.append(")")
            else:
                out.append(bond)
                emit(w)

    emit(0)
    return "".join(out)


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------


def _atom_label(mol: Molecule, i: int) -> tuple:
    a = mol.atoms[i]
    return (a.element, a.charge, a.aromatic, a.total_h, mol.degree(i))


def graphs_isomorphic(a: Molecule, b: Molecule) -> bool:
    """Backtracking search for a label- and bond-order-preserving bijection."""
    if a.n_atoms != b.n_atoms or len(a.bonds) != len(b.bonds):
        return False
    la = [_atom_label(a, i) for i in range(a.n_atoms)]
    lb = [_atom_label(b, i) for i in range(b.n_atoms)]
    if sorted(la) != sorted(lb):
        return False
    bond_sig = lambda m, lab: sorted(tuple(sorted((lab[x.a], lab[x.b]))) + (x.order.value,) for x in m.bonds)
    if bond_sig(a, la) != bond_sig(b, lb):
        return False
    n = a.n_atoms
    if n == 0:
        return True

    # visit order: BFS from the rarest label, so each new atom has a mapped neighbour
    freq: dict[tuple, int] = {}
    for lab in la:
        freq[lab] = freq.get(lab, 0) + 1
    order: list[int] = []
    seen = [False] * n
    for root in sorted(range(n), key=lambda i: (freq[la[i]], i)):
        if seen[root]:
            continue
        seen[root] = True
        queue = [root]
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w, _ in a.neighbors[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)

    by_label: dict[tuple, list[int]] = {}
    for j, lab in enumerate(lb):
        by_label.setdefault(lab, []).append(j)
    fwd = [-1] * n
    rev = [-1] * n

    def feasible(i: int, j: int) -> bool:
        mapped = 0
        for w, o in a.neighbors[i]:
            if fwd[w] >= 0:
                mapped += 1
                if b.bond_order(j, fwd[w]) is not o:
                    return False
        return mapped == sum(1 for w, _ in b.neighbors[j] if rev[w] >= 0)

    def search(k: int) -> bool:
        if k == n:
            return True
        i = order[k]
        for j in by_label[la[i]]:
            if rev[j] < 0 and feasible(i, j):
                fwd[i], rev[j] = j, i
                if search(k + 1):
                    return True
                fwd[i], rev[j] = -1, -1
        return False

    return search(0)


# ---------------------------------------------------------------------------
# SMILES list files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmilesRecord:
    id: str
    smiles: str
    line: int


def read_smiles_file(path: str | Path) -> list[SmilesRecord]:
    """Read ``<smiles>`` or ``<id>\\t<smiles>`` lines; ``#`` lines are comments.

    Records without an id get their 1-based line number as id.
    """
    return list(_iter_smiles(Path(path).read_text(encoding="utf-8").splitlines()))


def _iter_smiles(lines) -> Iterator[SmilesRecord]:
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            ident, _, smi = line.partition("\t")
            yield SmilesRecord(ident.strip(), smi.strip(), lineno)
        else:
            yield SmilesRecord(str(lineno), line, lineno)
