"""Substructure patterns and the functional-group library.

A pattern is a small labelled graph matched by subgraph monomorphism
(non-induced, like ordinary substructure search). Two special kinds cover
groups better described through rings: ``ring_query`` patterns match
perceived rings whose atoms and bonds satisfy predicates, and
``cycle_rank`` patterns fire on the cycle-space rank of the whole graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from probekit import graph
from probekit.molio import BondOrder, Molecule

__all__ = [
    "AtomPredicate",
    "BondPredicate",
    "RingConstraint",
    "RingQuery",
    "Pattern",
    "Group",
    "UnknownGroupError",
    "perceive_rings",
    "match_pattern",
    "load_library",
    "default_library",
    "detect_group",
    "group_names",
    "group_matches",
    "resolve_group",
]


class UnknownGroupError(KeyError):
    pass


def perceive_rings(m: Molecule) -> list[list[int]]:
    """Minimum cycle basis of the molecular graph, one ordered atom cycle per ring."""
    return graph.minimum_cycle_basis(m.n_atoms, m.edges)


@dataclass(frozen=True)
class AtomPredicate:
    elements: frozenset[str] | None = None
    aromatic: bool | None = None
    charge: int | None = None
    min_degree: int | None = None
    max_degree: int | None = None
    min_h: int | None = None
    max_h: int | None = None
    only_single: bool = False
    in_ring: str | None = None  # "any" or "aromatic_carbocycle"

    @classmethod
    def from_json(cls, obj: Mapping) -> "AtomPredicate":
        el = obj.get("element")
        if isinstance(el, str):
            el = [el]
        return cls(
            elements=frozenset(el) if el is not None else None,
            aromatic=obj.get("aromatic"),
            charge=obj.get("charge"),
            min_degree=obj.get("min_degree"),
            max_degree=obj.get("max_degree"),
            min_h=obj.get("min_h"),
            max_h=obj.get("max_h"),
            only_single=bool(obj.get("only_single", False)),
            in_ring=obj.get("in_ring"),
        )

    def matches(self, m: Molecule, i: int, ctx: "_Context") -> bool:
        a = m.atoms[i]
        if self.elements is not None and a.element not in self.elements:
            return False
        if self.aromatic is not None and a.aromatic != self.aromatic:
            return False
        if self.charge is not None and a.charge != self.charge:
            return False
        deg = m.degree(i)
        if self.min_degree is not None and deg < self.min_degree:
            return False
        if self.max_degree is not None and deg > self.max_degree:
            return False
        h = a.total_h
        if self.min_h is not None and h < self.min_h:
            return False
        if self.max_h is not None and h > self.max_h:
            return False
        if self.only_single and any(o is not BondOrder.SINGLE for _, o in m.neighbors[i]):
            return False
        if self.in_ring == "any" and i not in ctx.ring_atoms:
            return False
        if self.in_ring == "aromatic_carbocycle" and i not in ctx.carbocycle_atoms:
            return False
        return True


_ORDER_NAMES = {o.value: o for o in BondOrder}


@dataclass(frozen=True)
class BondPredicate:
    i: int
    j: int
    orders: frozenset[BondOrder] | None = None  # None = any order

    @classmethod
    def from_json(cls, obj) -> "BondPredicate":
        i, j, spec = obj
        if spec in (None, "any"):
            return cls(i, j, None)
        names = spec.split("|")
        return cls(i, j, frozenset(_ORDER_NAMES[n] for n in names))

    def accepts(self, order: BondOrder | None) -> bool:
        return order is not None and (self.orders is None or order in self.orders)


@dataclass(frozen=True)
class RingConstraint:
    """The mapped images of ``atoms`` must be exactly one perceived ring of ``size``."""

    atoms: tuple[int, ...]
    size: int


@dataclass(frozen=True)
class RingQuery:
    atom: AtomPredicate
    bond: frozenset[BondOrder] | None = None
    size: int | None = None


@dataclass(frozen=True)
class Pattern:
    name: str
    atoms: tuple[AtomPredicate, ...] = ()
    bonds: tuple[BondPredicate, ...] = ()
    ring: RingConstraint | None = None
    ring_query: RingQuery | None = None
    min_cycle_rank: int | None = None

    def __post_init__(self):
        if self.atoms:
            comps = graph.connected_components(len(self.atoms), [(b.i, b.j) for b in self.bonds])
            if len(comps) != 1:
                raise ValueError(f"pattern {self.name!r} is not connected")

    @classmethod
    def from_json(cls, name: str, obj: Mapping) -> "Pattern":
        ring = None
        if obj.get("ring"):
            r = obj["ring"]
            ring = RingConstraint(tuple(r["atoms"]), int(r["size"]))
        rq = None
        if obj.get("ring_query"):
            q = obj["ring_query"]
            bond = q.get("bond")
            rq = RingQuery(
                AtomPredicate.from_json(q.get("atom", {})),
                frozenset(_ORDER_NAMES[b] for b in bond.split("|")) if bond else None,
                q.get("size"),
            )
        rank = obj.get("cycle_rank", {}).get("min") if obj.get("cycle_rank") else None
        return cls(
            name,
            tuple(AtomPredicate.from_json(a) for a in obj.get("atoms", [])),
            tuple(BondPredicate.from_json(b) for b in obj.get("bonds", [])),
            ring,
            rq,
            rank,
        )


@dataclass(frozen=True)
class Group:
    name: str
    alternatives: tuple[Pattern, ...]


class _Context:
    """Ring data computed once per molecule and shared by all predicates."""

    def __init__(self, m: Molecule):
        self.rings = perceive_rings(m)
        self.ring_sets = [frozenset(r) for r in self.rings]
        self.ring_atoms = frozenset(a for r in self.rings for a in r)
        carbo = set()
        for r in self.rings:
            if all(m.atoms[a].aromatic and m.atoms[a].element == "C" for a in r):
                carbo.update(r)
        self.carbocycle_atoms = frozenset(carbo)


def _match_graph(m: Molecule, pat: Pattern, ctx: _Context) -> list[tuple[int, ...]]:
    k = len(pat.atoms)
    pnbrs: list[list[tuple[int, BondPredicate]]] = [[] for _ in range(k)]
    for b in pat.bonds:
        pnbrs[b.i].append((b.j, b))
        pnbrs[b.j].append((b.i, b))

    # pattern visit order: BFS from atom 0 so each next atom is anchored
    order, seen = [0], {0}
    for v in order:
        for w, _ in sorted(pnbrs[v], key=lambda t: t[0]):
            if w not in seen:
                seen.add(w)
                order.append(w)

    cands = [[i for i in range(m.n_atoms) if pat.atoms[p].matches(m, i, ctx)] for p in range(k)]
    if any(not c for c in cands):
        return []
    cand_sets = [set(c) for c in cands]

    found: list[tuple[int, ...]] = []
    mapping = [-1] * k
    used: set[int] = set()

    def extend(depth: int) -> None:
        if depth == k:
            found.append(tuple(mapping))
            return
        p = order[depth]
        anchors = [(q, b) for q, b in pnbrs[p] if mapping[q] >= 0]
        if anchors:
            q0 = anchors[0][0]
            pool = [j for j, _ in m.neighbors[mapping[q0]]]
        else:
            pool = cands[p]
        for i in pool:
            if i in used or i not in cand_sets[p]:
                continue
            if all(b.accepts(m.bond_order(i, mapping[q])) for q, b in anchors):
                mapping[p] = i
                used.add(i)
                extend(depth + 1)
                used.discard(i)
                mapping[p] = -1

    extend(0)
    return found


def match_pattern(m: Molecule, pat: Pattern, ctx: _Context | None = None) -> list[tuple[int, ...]]:
    """All occurrences of ``pat`` in ``m``, one per distinct matched atom set.

    Each match lists the molecule atom mapped to each pattern atom (ring
    queries: the ring's atoms in ring order). Matches come sorted
    lexicographically; among maps over the same atom set the smallest is
    kept, which removes duplicates due to pattern symmetry.
    """
    ctx = ctx or _Context(m)
    if pat.min_cycle_rank is not None:
        if graph.cycle_rank(m.n_atoms, m.edges) >= pat.min_cycle_rank:
            return [tuple(sorted(ctx.ring_atoms))]
        return []
    if pat.ring_query is not None:
        q = pat.ring_query
        out = []
        for ring in ctx.rings:
            if q.size is not None and len(ring) != q.size:
                continue
            if not all(q.atom.matches(m, a, ctx) for a in ring):
                continue
            if q.bond is not None:
                pairs = zip(ring, ring[1:] + ring[:1])
                if not all(m.bond_order(a, b) in q.bond for a, b in pairs):
                    continue
            out.append(tuple(ring))
        return sorted(out)
    if not pat.atoms:
        return []

    raw = _match_graph(m, pat, ctx)
    if pat.ring is not None:
        rc = pat.ring
        raw = [t for t in raw
               if len(rc.atoms) == rc.size and frozenset(t[a] for a in rc.atoms) in ctx.ring_sets]
    best: dict[frozenset[int], tuple[int, ...]] = {}
    for t in sorted(raw):
        best.setdefault(frozenset(t), t)
    return sorted(best.values())


# ---------------------------------------------------------------------------
# Library
# ---------------------------------------------------------------------------


def load_library(source: str | Path | Mapping | None = None) -> dict[str, Group]:
    """Load a group library from a JSON file or mapping (default: the bundled one)."""
    if source is None:
        text = resources.files("probekit.chemprops").joinpath("data/groups.json").read_text(encoding="utf-8")
        obj = json.loads(text)
    elif isinstance(source, Mapping):
        obj = source
    else:
        obj = json.loads(Path(source).read_text(encoding="utf-8"))
    lib = {}
    for name, body in obj.items():
        if name.startswith("_"):
            continue
        alts = body["any_of"] if "any_of" in body else [body]
        lib[name] = Group(name, tuple(Pattern.from_json(name, a) for a in alts))
    return lib


@lru_cache(maxsize=1)
def _bundled() -> dict[str, Group]:
    return load_library()


def default_library() -> dict[str, Group]:
    return dict(_bundled())


def group_names(library: Mapping[str, Group] | None = None) -> list[str]:
    return list((library if library is not None else _bundled()).keys())


def resolve_group(group: str | Group, library: Mapping[str, Group] | None = None) -> Group:
    if isinstance(group, Group):
        return group
    lib = library if library is not None else _bundled()
    try:
        return lib[group]
    except KeyError:
        raise UnknownGroupError(f"unknown functional group {group!r}; known: {', '.join(lib)}") from None


def group_matches(m: Molecule, group: str | Group, library: Mapping[str, Group] | None = None,
                  ctx: _Context | None = None) -> list[tuple[int, ...]]:
    """Matches of every alternative of a group, alternatives in library order."""
    g = resolve_group(group, library)
    ctx = ctx or _Context(m)
    out: list[tuple[int, ...]] = []
    for pat in g.alternatives:
        out.extend(match_pattern(m, pat, ctx))
    return out


def detect_group(m: Molecule, group: str | Group, library: Mapping[str, Group] | None = None,
                 ctx: _Context | None = None) -> bool:
    g = resolve_group(group, library)
    ctx = ctx or _Context(m)
    return any(match_pattern(m, pat, ctx) for pat in g.alternatives)
