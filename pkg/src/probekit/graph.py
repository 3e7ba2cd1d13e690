"""Small undirected-graph helpers on ``(n, edges)`` pairs.

Kept free of any chemistry so both the SMILES layer and the ring/pattern
code can share them.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

Edge = tuple[int, int]


def adjacency(n: int, edges: Sequence[Edge]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    for nbrs in adj:
        nbrs.sort()
    return adj


def connected_components(n: int, edges: Sequence[Edge]) -> list[list[int]]:
    adj = adjacency(n, edges)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [], deque([s])
        while queue:
            v = queue.popleft()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def bridges(n: int, edges: Sequence[Edge]) -> set[frozenset[int]]:
    """Edges whose removal disconnects their endpoints (iterative Tarjan)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (a, b) in enumerate(edges):
        adj[a].append((b, k))
        adj[b].append((a, k))
    disc = [-1] * n
    low = [0] * n
    out: set[frozenset[int]] = set()
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            advanced = False
            for w, k in it:
                if k == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = t
                    t += 1
                    stack.append((w, k, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                u = stack[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] > disc[u]:
                    out.add(frozenset((u, v)))
    return out


def cycle_rank(n: int, edges: Sequence[Edge]) -> int:
    return len(edges) - n + len(connected_components(n, edges))


def _bfs_tree(adj: list[list[int]], root: int) -> tuple[list[int], list[int]]:
    parent = [-1] * len(adj)
    dist = [-1] * len(adj)
    dist[root] = 0
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] == -1:
                dist[w] = dist[v] + 1
                parent[w] = v
                queue.append(w)
    return parent, dist


def _path_to_root(parent: list[int], v: int) -> list[int]:
    path = [v]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    return path


def _order_cycle(edge_ids: list[int], edges: Sequence[Edge]) -> list[int]:
    nbrs: dict[int, list[int]] = {}
    for k in edge_ids:
        a, b = edges[k]
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    start = min(nbrs)
    first, last = sorted(nbrs[start])
    cycle = [start, first]
    while cycle[-1] != last:
        prev, cur = cycle[-2], cycle[-1]
        a, b = nbrs[cur]
        cycle.append(b if a == prev else a)
    return cycle


def minimum_cycle_basis(n: int, edges: Sequence[Edge]) -> list[list[int]]:
    """Minimum cycle basis (SSSR) as ordered atom cycles.

    Horton candidates (root + edge, using BFS shortest paths) are sorted by
    length and kept greedily when GF(2)-independent of those already taken.
    Each ring starts at its smallest atom and proceeds towards the smaller
    of that atom's two ring neighbours.
    """
    if not edges:
        return []
    rank = cycle_rank(n, edges)
    if rank == 0:
        return []
    adj = adjacency(n, edges)
    edge_id = {frozenset(e): k for k, e in enumerate(edges)}

    candidates: dict[int, tuple[int, tuple[int, ...]]] = {}
    for r in range(n):
        parent, dist = _bfs_tree(adj, r)
        for x, y in edges:
            if dist[x] < 0:
                continue
            px, py = _path_to_root(parent, x), _path_to_root(parent, y)
            if len(set(px) & set(py)) != 1:
                continue
            ids = [edge_id[frozenset((x, y))]]
            for path in (px, py):
                ids.extend(edge_id[frozenset((path[i], path[i + 1]))] for i in range(len(path) - 1))
            mask = 0
            for k in ids:
                mask |= 1 << k
            if bin(mask).count("1") != len(ids):
                continue
            atoms = tuple(sorted(set(px) | set(py)))
            candidates.setdefault(mask, (len(ids), atoms))

    ordered = sorted(candidates.items(), key=lambda kv: (kv[1][0], kv[1][1]))
    basis: dict[int, int] = {}
    chosen: list[int] = []
    for mask, _ in ordered:
        v = mask
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                chosen.append(mask)
                break
            v ^= basis[top]
        if len(chosen) == rank:
            break

    rings = []
    for mask in chosen:
        ids = [k for k in range(len(edges)) if mask >> k & 1]
        rings.append(_order_cycle(ids, edges))
    rings.sort(key=lambda c: (len(c), sorted(c)))
    return rings
