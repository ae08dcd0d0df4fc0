"""Conflict graphs over dataset indices and the coloring backends used on them.

Adjacency is stored as one Python-int bitset per vertex.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .classes import HypothesisClass, is_2_refutable_on
from .core import Dataset, Hypothesis
from .errors import CapacityError, InvalidInputError, NotTwoRefutable, RefutabilityViolation

EXACT_COLOR_CAP = 64


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class ConflictGraph:
    """Undirected simple graph on vertices ``0..n-1``."""

    def __init__(self, n: int, edges: Iterable[tuple] = ()):
        if n < 0:
            raise InvalidInputError("vertex count must be non-negative")
        self.n = n
        self.adj = [0] * n
        for u, v in edges:
            self.add_edge(u, v)

    def add_edge(self, u: int, v: int):
        if u == v:
            raise InvalidInputError("self-loops are not allowed")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise InvalidInputError(f"edge ({u}, {v}) out of range")
        self.adj[u] |= 1 << v
        self.adj[v] |= 1 << u

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.adj[u] >> v) & 1)

    def neighbors(self, v: int) -> list:
        return list(_bits(self.adj[v]))

    def degree(self, v: int) -> int:
        return bin(self.adj[v]).count("1")

    def edges(self) -> list:
        return [(u, v) for u in range(self.n) for v in _bits(self.adj[u] >> (u + 1) << (u + 1))]

    @property
    def num_edges(self) -> int:
        return sum(bin(a).count("1") for a in self.adj) // 2

    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.n)), default=0)

    def __eq__(self, other):
        return isinstance(other, ConflictGraph) and self.n == other.n and self.adj == other.adj

    def __repr__(self):
        return f"ConflictGraph(n={self.n}, m={self.num_edges})"


@dataclass
class Coloring:
    """Proper coloring with colors ``1..num_colors`` (``colors[v]`` per vertex)."""

    colors: list
    promise_violated: bool = False
    exponent: Optional[float] = None
    backend: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def num_colors(self) -> int:
        return max(self.colors, default=0)

    def classes(self) -> list:
        out = [[] for _ in range(self.num_colors)]
        for v, c in enumerate(self.colors):
            out[c - 1].append(v)
        return out


def is_proper(G: ConflictGraph, colors: Sequence[int]) -> bool:
    """Edge scan: no edge monochromatic, every vertex colored, colors contiguous from 1."""
    if len(colors) != G.n or any(c < 1 for c in colors):
        return False
    if colors and set(colors) != set(range(1, max(colors) + 1)):
        return False
    return all(colors[u] != colors[v] for u, v in G.edges())


def _relabel(colors: Sequence[int]) -> list:
    # first-appearance order, contiguous from 1
    seen = {}
    return [seen.setdefault(c, len(seen) + 1) for c in colors]


def build_conflict_graph(F: HypothesisClass, datasets: Sequence[Dataset]) -> ConflictGraph:
    """Edge ``{i, j}`` iff the union of datasets ``i`` and ``j`` is unrealizable."""
    n = len(datasets)
    G = ConflictGraph(n)
    if n < 2:
        return G
    ev = np.stack([F.evidence(s) for s in datasets])
    for i in range(n - 1):
        ok = F.evidence_feasible(np.maximum(ev[i], ev[i + 1 :]))
        for j in np.flatnonzero(~ok):
            G.add_edge(i, i + 1 + int(j))
    return G


def merge_independent_set(F: HypothesisClass, datasets: Sequence[Dataset], V: Iterable[int]) -> Hypothesis:
    """A hypothesis with zero error on the union of ``datasets[i]`` for ``i`` in ``V``.

    Raises ``RefutabilityViolation`` if the union is unrealizable, carrying a
    2-example witness when one exists.
    """
    union = Dataset.concat(datasets[i] for i in V)
    h = F.consistent_hypothesis(union)
    if h is not None:
        return h
    try:
        witness = is_2_refutable_on(F, union)
    except NotTwoRefutable:
        witness = None
    raise RefutabilityViolation("independent set has no consistent hypothesis", witness)


def _bipartition(G: ConflictGraph, vertices: Optional[Iterable[int]] = None):
    """BFS 2-coloring of the subgraph induced by ``vertices`` (default: all).

    Returns ``(side, None)`` with ``side[v]`` in {0, 1}, or ``(None, cycle)``
    with an odd cycle as a vertex list.
    """
    vs = list(range(G.n)) if vertices is None else sorted(vertices)
    allowed = 0
    for v in vs:
        allowed |= 1 << v
    side, parent = {}, {}
    for root in vs:
        if root in side:
            continue
        side[root], parent[root] = 0, None
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in _bits(G.adj[u] & allowed):
                if w not in side:
                    side[w], parent[w] = 1 - side[u], u
                    queue.append(w)
                elif side[w] == side[u]:
                    return None, _odd_cycle(parent, u, w)
    return side, None


def _odd_cycle(parent, u, w):
    path_u, path_w = [u], [w]
    while parent[path_u[-1]] is not None:
        path_u.append(parent[path_u[-1]])
    while parent[path_w[-1]] is not None:
        path_w.append(parent[path_w[-1]])
    ancestors = set(path_u)
    tail = []
    for x in path_w:
        if x in ancestors:
            lca = x
            break
        tail.append(x)
    head = path_u[: path_u.index(lca) + 1]
    return head + tail[::-1]


def two_color(G: ConflictGraph) -> Optional[Coloring]:
    side, _ = _bipartition(G)
    if side is None:
        return None
    return Coloring(_relabel([side[v] for v in range(G.n)]), exponent=0.0, backend="two")


def odd_cycle(G: ConflictGraph) -> Optional[list]:
    """An odd cycle (vertex list, consecutive vertices adjacent, closing edge implied) or ``None``."""
    return _bipartition(G)[1]


def greedy_color(G: ConflictGraph, vertices: Optional[Iterable[int]] = None, first: int = 1) -> dict:
    """First-fit coloring of the induced subgraph, colors starting at ``first``."""
    vs = list(range(G.n)) if vertices is None else sorted(vertices)
    allowed = 0
    for v in vs:
        allowed |= 1 << v
    color = {}
    for v in vs:
        used = {color[w] for w in _bits(G.adj[v] & allowed) if w in color}
        c = first
        while c in used:
            c += 1
        color[v] = c
    return color


def wigderson_exponent(k: int) -> float:
    """Exponent ``1 - 1/(k-1)`` of the recursion's color count (0 for k <= 2)."""
    return 0.0 if k <= 2 else 1.0 - 1.0 / (k - 1)


def color_budget(n: int, k: int) -> float:
    """Documented color bound of ``approx_color`` on a promise-respecting graph.

    For k = 3 this is ``3 sqrt(n) + 1``: at most ``sqrt(n)`` neighbourhoods
    are peeled at 2 colors each, and the rest has degree below ``sqrt(n)``.
    For larger k the same ``k n^(1-1/(k-1)) + 1`` form is used as the budget.
    """
    if k <= 2:
        return float(min(k, max(n, 1)))
    return k * n ** wigderson_exponent(k) + 1


def approx_color(G: ConflictGraph, k: int) -> Coloring:
    """Wigderson-style coloring of a graph promised to be ``k``-colorable.

    While some vertex has degree at least ``n^(1-1/(k-1))`` in the remaining
    graph, its neighbourhood (which is ``(k-1)``-colorable under the promise)
    is colored recursively with fresh colors and removed. The low-degree rest
    is colored first-fit. A broken promise is detected in the base cases and
    handled by first-fit coloring plus the ``promise_violated`` flag.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    colors = {}
    state = {"next": 1, "violated": False, "peeled": 0}

    def fresh_greedy(vs):
        got = greedy_color(G, vs, first=state["next"])
        colors.update(got)
        if got:
            state["next"] = max(got.values()) + 1

    def solve(vs: set, kk: int):
        if not vs:
            return
        mask = 0
        for v in vs:
            mask |= 1 << v
        if kk <= 2:
            if kk == 1:
                if any(G.adj[v] & mask for v in vs):
                    state["violated"] = True
                    fresh_greedy(vs)
                    return
                for v in vs:
                    colors[v] = state["next"]
                state["next"] += 1
                return
            side, _ = _bipartition(G, vs)
            if side is None:
                state["violated"] = True
                fresh_greedy(vs)
                return
            base = state["next"]
            for v in vs:
                colors[v] = base + side[v]
            state["next"] += 2
            return
        tau = max(len(vs) ** wigderson_exponent(kk), 1.0)
        remaining = set(vs)
        rmask = mask
        while True:
            pick = None
            for v in sorted(remaining):
                if bin(G.adj[v] & rmask).count("1") >= tau:
                    pick = v
                    break
            if pick is None:
                break
            nbrs = set(_bits(G.adj[pick] & rmask))
            state["peeled"] += 1
            solve(nbrs, kk - 1)
            remaining -= nbrs
            for w in nbrs:
                rmask &= ~(1 << w)
        fresh_greedy(remaining)

    solve(set(range(G.n)), k)
    out = _relabel([colors[v] for v in range(G.n)])
    return Coloring(
        out,
        promise_violated=state["violated"],
        exponent=wigderson_exponent(k),
        backend="wigderson",
        stats={"peeled": state["peeled"], "budget": color_budget(G.n, k)},
    )


def exact_color(G: ConflictGraph, k: int) -> Optional[Coloring]:
    """Exact k-colorability by DSatur-ordered backtracking; ``None`` if impossible."""
    if G.n > EXACT_COLOR_CAP:
        raise CapacityError(f"exact coloring is capped at {EXACT_COLOR_CAP} vertices")
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    n = G.n
    if n == 0:
        return Coloring([], backend="exact")
    color = [0] * n
    # forbidden[v]: bitmask of colors used by colored neighbours
    forbidden = [0] * n
    full = (1 << (k + 1)) - 2
    degree = [G.degree(v) for v in range(n)]

    def pick():
        best, key = -1, None
        for v in range(n):
            if color[v]:
                continue
            cand = (bin(forbidden[v]).count("1"), degree[v])
            if key is None or cand > key:
                best, key = v, cand
        return best

    def search(colored, used):
        if colored == n:
            return True
        v = pick()
        if forbidden[v] == full:
            return False
        for c in range(1, min(used + 1, k) + 1):
            if (forbidden[v] >> c) & 1:
                continue
            color[v] = c
            touched = []
            for w in _bits(G.adj[v]):
                if not color[w] and not (forbidden[w] >> c) & 1:
                    forbidden[w] |= 1 << c
                    touched.append(w)
            if search(colored + 1, max(used, c)):
                return True
            for w in touched:
                forbidden[w] &= ~(1 << c)
            color[v] = 0
        return False

    if not search(0, 0):
        return None
    return Coloring(_relabel(color), exponent=None, backend="exact")
