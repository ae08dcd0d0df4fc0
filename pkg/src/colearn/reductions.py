"""Instance generators for the hardness gadgets: graph coloring and subset sum
to zero-error augmented ERM, the bounded-degree coloring gadget, and
distributional versions of ERM instances."""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .classes import make_all_functions, make_threshold_budget
from .core import DataDistribution, Dataset, RngStream
from .erm import ErmInstance
from .errors import CapacityError, InvalidInputError
from .graph import ConflictGraph


@dataclass
class GraphInstance:
    n: int
    edges: list = field(default_factory=list)

    def __post_init__(self):
        if self.n < 0:
            raise InvalidInputError("vertex count must be non-negative")
        seen = set()
        clean = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidInputError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidInputError(f"edge ({u}, {v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InvalidInputError(f"duplicate edge {key}")
            seen.add(key)
            clean.append((u, v))
        self.edges = clean

    def to_graph(self) -> ConflictGraph:
        return ConflictGraph(self.n, self.edges)

    def degrees(self) -> list:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


@dataclass
class SubsetSumInstance:
    values: list
    target: int

    def __post_init__(self):
        self.values = [int(a) for a in self.values]
        self.target = int(self.target)
        if any(a < 0 for a in self.values):
            raise InvalidInputError("subset-sum values must be non-negative")
        if not 0 <= self.target <= sum(self.values):
            raise InvalidInputError("target must lie in [0, sum of values]")

    @property
    def total(self) -> int:
        return sum(self.values)


def coloring_to_erm(G: GraphInstance, k: int) -> ErmInstance:
    """One dataset per vertex: ``{(x_v, 1)} + {(x_u, 0) : uv in E}`` over all_functions(|V|)."""
    if G.n < 1:
        raise InvalidInputError("graph needs at least one vertex")
    zeros = [[] for _ in range(G.n)]
    for u, v in G.edges:
        zeros[v].append(u)
        zeros[u].append(v)
    datasets = [Dataset.from_examples([(v, 1)] + [(u, 0) for u in zeros[v]]) for v in range(G.n)]
    return ErmInstance(make_all_functions(G.n), datasets, k)


def subset_sum_padding(inst: SubsetSumInstance):
    """``(n, padded)`` with ``n = max(m + 2, floor(log2 s) + 1)``.

    Zeros fill positions ``m+1 .. n-2``; the last two values are
    ``2^n - t`` and ``2^n - (s - t)``, so the padded values sum to ``2^(n+1)``
    and some subset sums to ``2^n`` iff some original subset sums to ``t``.
    """
    m, s, t = len(inst.values), inst.total, inst.target
    if s < 1:
        raise InvalidInputError("subset-sum reduction needs a positive total")
    n = max(m + 2, s.bit_length())
    if n > 62:
        raise CapacityError("padded subset-sum instance exceeds 62 bits")
    padded = inst.values + [0] * (n - 2 - m) + [(1 << n) - t, (1 << n) - (s - t)]
    return n, padded


@lru_cache(maxsize=None)
def _threshold_class(d: int):
    return make_threshold_budget(d)


def subsetsum_to_erm(inst: SubsetSumInstance) -> ErmInstance:
    """Singleton datasets ``{((i, a_i), 1)}`` over the budgeted threshold class, k = 2."""
    n, padded = subset_sum_padding(inst)
    if n > 16:
        raise CapacityError(f"threshold class with d = {n} exceeds the supported 16")
    F = _threshold_class(n)
    pts = np.arange(n, dtype=np.int64) * F.width + np.asarray(padded, dtype=np.int64)
    one = np.ones(1, np.uint8)
    datasets = [Dataset._trusted(pts[i : i + 1], one) for i in range(n)]
    return ErmInstance(F, datasets, 2)


def subset_sum_feasible(values, target) -> bool:
    """Exhaustive-equivalent DP: reachable sums as bits of a Python int."""
    reach = 1
    for a in values:
        reach |= reach << int(a)
    return bool((reach >> int(target)) & 1) if target >= 0 else False


def sparsify_size(n: int, k: int) -> int:
    return n * (n - 1 + (n - 2) * (k - 1))


def sparsify_coloring(G: GraphInstance, k: int) -> GraphInstance:
    """Bounded-degree gadget that is k-colorable iff ``G`` is.

    Vertex ``v`` becomes copies ``v^(1..|V|-1)`` chained by cliques
    ``C_{v,i}`` of size ``k - 1`` (``i = 1..|V|-2``), each clique vertex
    adjacent to ``v^(i)`` and ``v^(i+1)``; this forces every copy to share
    one color. Each original edge uses the next unused copy of each endpoint,
    in edge-list order. Maximum degree is at most ``2k - 1``.
    """
    if k < 3:
        raise InvalidInputError("the gadget needs k >= 3")
    V = G.n
    if V < 3:
        raise InvalidInputError("the gadget needs at least 3 vertices")
    block = V - 1 + (V - 2) * (k - 1)
    edges = []

    def copy(v, i):  # i in 1..V-1
        return v * block + i - 1

    def clique_vertex(v, i, j):  # i in 1..V-2, j in 0..k-2
        return v * block + (V - 1) + (i - 1) * (k - 1) + j

    for v in range(V):
        for i in range(1, V - 1):
            members = [clique_vertex(v, i, j) for j in range(k - 1)]
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    edges.append((members[a], members[b]))
            for x in members:
                edges.append((x, copy(v, i)))
                edges.append((x, copy(v, i + 1)))
    used = [0] * V
    for u, v in G.edges:
        used[u] += 1
        used[v] += 1
        edges.append((copy(u, used[u]), copy(v, used[v])))
    out = GraphInstance(V * block, edges)
    if max(out.degrees(), default=0) > 2 * k - 1:
        raise AssertionError("sparsified graph exceeds the degree bound")
    return out


def coverage_failure_bound(k: int, n: int, m: int) -> float:
    """Union bound ``2kn exp(-m / 2k)`` on some dataset element never being drawn."""
    return 2 * k * n * math.exp(-m / (2 * k))


def minimal_coverage_m(k: int, n: int, beta: float) -> int:
    """Smallest ``m = ceil(2k ln(2kn / beta))`` making the failure bound at most ``beta``."""
    if not 0 < beta < 1:
        raise InvalidInputError("beta must lie in (0, 1)")
    return math.ceil(2 * k * math.log(2 * k * n / beta))


@dataclass
class DistributionalInstance:
    distributions: list
    datasets: list
    m: int
    k: int

    @property
    def failure_bound(self) -> float:
        return coverage_failure_bound(self.k, len(self.datasets), self.m)

    def sample(self, rng) -> list:
        stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
        return [D.draw(self.m, stream.child(i).generator()) for i, D in enumerate(self.distributions)]

    def covered(self, samples) -> bool:
        """Did every sample contain every distinct example of its dataset?"""
        for S, T in zip(self.datasets, samples):
            want = set(zip(S.points.tolist(), S.labels.tolist()))
            got = set(zip(T.points.tolist(), T.labels.tolist()))
            if not want <= got:
                return False
        return True


def erm_to_distributional(inst: ErmInstance, m: int) -> DistributionalInstance:
    """Uniform distribution over each dataset's distinct examples, ``m`` draws each."""
    if m < 1:
        raise InvalidInputError("m must be positive")
    for S in inst.datasets:
        if not len(S):
            raise InvalidInputError("datasets must be non-empty")
        if len(S.distinct()) > 2 * inst.k:
            raise InvalidInputError("dataset larger than 2k distinct examples")
    dists = [DataDistribution.uniform(S) for S in inst.datasets]
    return DistributionalInstance(dists, list(inst.datasets), m, inst.k)
