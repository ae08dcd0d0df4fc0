"""ERM oracles: plain ERM, the threshold-budget consistency procedure, and exact
zero-error decision / error minimization over the augmented class.

The augmented class routes dataset (or index) ``i`` to hypothesis
``hypotheses[assignment[i]]``; assignments are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classes import HypothesisClass, ThresholdBudgetClass
from .core import Dataset, Hypothesis, training_error
from .errors import CapacityError, DomainMismatchError, InvalidInputError

MAX_GROUPING_N = 16
MAX_MASK_CELLS = 1 << 25
MAX_ASSIGNMENT_SEARCH = 10**6


@dataclass
class AugmentedSolution:
    hypotheses: list
    assignment: list

    def __post_init__(self):
        k = len(self.hypotheses)
        if any(not 0 <= c < k for c in self.assignment):
            raise InvalidInputError("assignment entries must index the hypothesis list")

    @property
    def k(self):
        return len(self.hypotheses)

    def __call__(self, i: int, x: int) -> int:
        return self.hypotheses[self.assignment[i]](x)

    def hypothesis_for(self, i: int) -> Hypothesis:
        return self.hypotheses[self.assignment[i]]

    def mistakes(self, datasets: Sequence[Dataset]) -> int:
        total = 0
        for i, s in enumerate(datasets):
            if len(s):
                total += int(np.count_nonzero(self.hypothesis_for(i).labels[s.points] != s.labels))
        return total


@dataclass
class ErmInstance:
    cls: HypothesisClass
    datasets: list
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError("k must be at least 1")
        if not self.datasets:
            raise InvalidInputError("an ERM instance needs at least one dataset")
        pts = np.concatenate([s.points for s in self.datasets])
        if pts.size and pts.max() >= self.cls.space.size:
            raise DomainMismatchError("dataset point outside the class's instance space")

    @property
    def n(self):
        return len(self.datasets)

    def pooled(self) -> Dataset:
        return Dataset.concat(self.datasets)


def erm(F: HypothesisClass, S: Dataset) -> Hypothesis:
    """Training-error minimizer over ``F``; ties go to the earliest behaviour in enumeration order."""
    return F.erm(S)


def threshold_consistency(F: ThresholdBudgetClass, S: Dataset) -> Optional[Hypothesis]:
    """Zero-error fit for the budgeted threshold class, or ``None``.

    1. Reject if some coordinate has a 0-labeled ``j1`` at or below a
       1-labeled ``j2``, or if ``((i, 0), 0)`` is present (every ``f_theta``
       labels ``(i, 0)`` with 1).
    2. Set ``theta_i`` to the largest ``j`` with ``((i, j), 1)`` (0 if none)
       and accept iff ``sum(theta) <= 2^d``.
    """
    if not isinstance(F, ThresholdBudgetClass):
        raise InvalidInputError("threshold_consistency needs a ThresholdBudgetClass")
    if len(S) and S.points.max() >= F.space.size:
        raise DomainMismatchError("point outside [d] x {0..2^d}")
    i, j = np.divmod(S.points, F.width)
    pos = S.labels == 1
    max1 = np.full(F.d, -1, np.int64)
    min0 = np.full(F.d, F.width, np.int64)
    np.maximum.at(max1, i[pos], j[pos])
    np.minimum.at(min0, i[~pos], j[~pos])
    if np.any(min0 <= max1) or np.any(min0 == 0):
        return None
    theta = np.maximum(max1, 0)
    if int(theta.sum()) > F.budget:
        return None
    return F.hypothesis(theta.tolist())


# -- zero-error decision ----------------------------------------------------

def _group_feasibility(F: HypothesisClass, datasets: Sequence[Dataset]) -> np.ndarray:
    """``feas[mask]``: is the union of the datasets in ``mask`` realizable?"""
    n = len(datasets)
    ev = F.evidence_matrix(datasets)
    if (1 << n) * ev.shape[1] > MAX_MASK_CELLS:
        raise CapacityError(f"grouping table of 2^{n} x {ev.shape[1]} cells is too large")
    table = np.empty((1 << n, ev.shape[1]), dtype=ev.dtype)
    table[0] = F.empty_evidence()
    for b in range(n):
        np.maximum(table[: 1 << b], ev[b], out=table[1 << b : 1 << (b + 1)])
    return F.evidence_feasible(table)


def _partition(feas: np.ndarray, n: int, k: int) -> Optional[list]:
    """Split ``[n]`` into at most ``k`` blocks with ``feas[block]`` true.

    Feasibility is closed under subsets, so some block holding the lowest
    remaining index can always be taken maximal within the remaining set.
    """
    full = (1 << n) - 1
    if feas[full]:
        return [full]
    if k == 1:
        return None
    idx = np.arange(1 << n, dtype=np.int64)
    if k == 2:
        odd = idx[1::2]
        ok = feas[odd] & feas[full ^ odd]
        hit = np.flatnonzero(ok)
        if hit.size == 0:
            return None
        m = int(odd[hit[0]])
        return [m, full ^ m]
    popcount = np.array([bin(i).count("1") for i in range(1 << n)]) if n <= 16 else None
    max_block = int(popcount[feas].max())
    failed = set()

    def search(rest: int, blocks: int) -> Optional[list]:
        if feas[rest]:
            return [rest]
        if blocks == 1 or (rest, blocks) in failed:
            return None
        if bin(rest).count("1") > blocks * max_block:
            failed.add((rest, blocks))
            return None
        low = rest & -rest
        sub = idx[((idx & rest) == idx) & ((idx & low) != 0)]
        sub = sub[feas[sub]]
        maximal = np.ones(sub.size, bool)
        bits = rest ^ low
        while bits:
            b = bits & -bits
            bits ^= b
            maximal &= ~(((sub & b) == 0) & feas[sub | b])
        sub = sub[maximal]
        for s in sub[np.argsort(-popcount[sub], kind="stable")].tolist():
            tail = search(rest ^ s, blocks - 1)
            if tail is not None:
                return [s] + tail
        failed.add((rest, blocks))
        return None

    return search(full, k)


def _solution_from_blocks(F, datasets, blocks, k) -> AugmentedSolution:
    n = len(datasets)
    assignment = [0] * n
    hyps = []
    for g, mask in enumerate(blocks):
        members = [i for i in range(n) if (mask >> i) & 1]
        for i in members:
            assignment[i] = g
        h = F.consistent_hypothesis(Dataset.concat(datasets[i] for i in members))
        if h is None:
            raise AssertionError("feasible block has no consistent hypothesis")
        hyps.append(h)
    while len(hyps) < k:
        hyps.append(hyps[0])
    return AugmentedSolution(hyps, assignment)


def augmented_erm_feasible(instance: ErmInstance) -> Optional[AugmentedSolution]:
    """Decide whether ``k`` hypotheses fit every dataset with zero error.

    Datasets are grouped so that each group's union is realizable; groups
    are found by search over dataset subsets with realizability memoized
    on subset bitmasks (``n <= 16``). Larger instances are accepted only for
    2-refutable classes, where zero-error fitting is exactly k-coloring of
    the conflict graph.
    """
    F, datasets, n = instance.cls, instance.datasets, instance.n
    k = min(instance.k, n)
    if k == n:
        hyps = [F.consistent_hypothesis(s) for s in datasets]
        if any(h is None for h in hyps):
            return None
        return AugmentedSolution(hyps + [hyps[0]] * (instance.k - n), list(range(n)))
    if n <= MAX_GROUPING_N:
        blocks = _partition(_group_feasibility(F, datasets), n, k)
        if blocks is None:
            return None
        return _solution_from_blocks(F, datasets, blocks, instance.k)
    if F.two_refutable:
        return _feasible_by_coloring(F, datasets, k, instance.k)
    raise CapacityError(f"zero-error augmented ERM is capped at n <= {MAX_GROUPING_N} for classes not known to be 2-refutable")


def augmented_erm_decide(instance: ErmInstance) -> bool:
    """Yes/no version of :func:`augmented_erm_feasible` that skips building a witness."""
    F, datasets, n = instance.cls, instance.datasets, instance.n
    k = min(instance.k, n)
    if n <= MAX_GROUPING_N:
        feas = _group_feasibility(F, datasets)
        if k == n:
            return bool(feas[1 << np.arange(n)].all())
        return _partition(feas, n, k) is not None
    return augmented_erm_feasible(instance) is not None


def augmented_erm_decide_many(instances: Sequence[ErmInstance], max_cells: int = 1 << 22) -> np.ndarray:
    """Decide many instances at once; same answers as :func:`augmented_erm_decide`.

    Instances sharing a class object and ``n <= 16`` get their grouping
    tables built in one vectorized pass (chunked to ``max_cells`` entries).
    """
    out = np.zeros(len(instances), dtype=bool)
    groups: dict = {}
    for idx, inst in enumerate(instances):
        if inst.n <= MAX_GROUPING_N:
            groups.setdefault((id(inst.cls), inst.n), []).append(idx)
        else:
            out[idx] = augmented_erm_decide(inst)
    for (_, n), members in groups.items():
        F = instances[members[0]].cls
        L = F.evidence_length
        chunk = max(1, max_cells // ((1 << n) * L))
        full = (1 << n) - 1
        odd = np.arange(1, 1 << n, 2)
        for start in range(0, len(members), chunk):
            part = members[start : start + chunk]
            B = len(part)
            ev = F.evidence_matrix([s for i in part for s in instances[i].datasets]).reshape(B, n, L)
            table = np.empty((B, 1 << n, L), dtype=ev.dtype)
            table[:, 0] = F.empty_evidence()
            for b in range(n):
                np.maximum(table[:, : 1 << b], ev[:, b, None, :], out=table[:, 1 << b : 1 << (b + 1)])
            feas = F.evidence_feasible(table.reshape(B << n, L)).reshape(B, 1 << n)
            ks = np.array([min(instances[i].k, n) for i in part])
            idx = np.asarray(part)
            verdict = feas[:, full].copy()
            two = ks == 2
            if two.any():
                verdict[two] |= np.any(feas[two][:, odd] & feas[two][:, full ^ odd], axis=1)
            every = ks == n
            if every.any():
                verdict[every] = feas[every][:, 1 << np.arange(n)].all(axis=1)
            for row in np.flatnonzero((ks > 2) & ~every):
                verdict[row] = _partition(feas[row], n, int(ks[row])) is not None
            out[idx] = verdict
    return out


def _feasible_by_coloring(F, datasets, k, k_out):
    from .graph import build_conflict_graph, exact_color, two_color

    if not all(F.realizable(s) for s in datasets):
        return None
    G = build_conflict_graph(F, datasets)
    if k == 1:
        coloring = two_color(G) if not G.num_edges else None
        if coloring is not None and coloring.num_colors > 1:
            coloring = None
    elif k == 2:
        coloring = two_color(G)
    else:
        coloring = exact_color(G, k)
    if coloring is None:
        return None
    blocks = [0] * coloring.num_colors
    for v, c in enumerate(coloring.colors):
        blocks[c - 1] |= 1 << v
    return _solution_from_blocks(F, datasets, [b for b in blocks if b], k_out)


# -- error minimization -----------------------------------------------------

def _error_table(F: HypothesisClass, datasets: Sequence[Dataset]) -> np.ndarray:
    """``e[i, h]``: mistakes of behaviour ``h`` on dataset ``i`` (with multiplicity)."""
    return np.stack([F._mistakes(s) for s in datasets]) if datasets else np.zeros((0, 0))


def _prune_dominated(e: np.ndarray) -> np.ndarray:
    """Indices of columns not weakly dominated by an earlier column."""
    keep = []
    for h in range(e.shape[1]):
        col = e[:, h]
        if keep and np.any(np.all(e[:, keep] <= col[:, None], axis=0)):
            continue
        keep.append(h)
    return np.asarray(keep, dtype=np.int64)


def _min_over_subsets(e: np.ndarray, k: int):
    """Exact ``min_T sum_i min_{h in T} e[i, h]`` over ``|T| <= k`` by branch and bound."""
    n, C = e.shape
    suffix_min = np.full((C + 1, n), np.inf)
    for j in range(C - 1, -1, -1):
        suffix_min[j] = np.minimum(suffix_min[j + 1], e[:, j])
    best = [math.inf, ()]
    start_min = np.full(n, np.inf)

    def dfs(start, current, chosen):
        if chosen:
            total = float(current.sum())
            if total < best[0]:
                best[0], best[1] = total, chosen
        if len(chosen) == k or start == C:
            return
        if float(np.minimum(current, suffix_min[start]).sum()) >= best[0]:
            return
        for j in range(start, C):
            dfs(j + 1, np.minimum(current, e[:, j]), chosen + (j,))
            if best[0] == 0:
                return

    dfs(0, start_min, ())
    return best[0], list(best[1])


def _restricted_growth(n: int, k: int):
    """Assignments of ``n`` indices to at most ``k`` groups, up to relabeling."""
    a = [0] * n

    def rec(i, used):
        if i == n:
            yield list(a)
            return
        for g in range(min(used + 1, k)):
            a[i] = g
            yield from rec(i + 1, max(used, g + 1))

    yield from rec(0, 0)


def augmented_erm_min(instance: ErmInstance):
    """Exact minimizer of pooled training error over the augmented class.

    ``instance.datasets[i]`` is the sub-multiset of the pooled sample tagged
    with index ``i``. Returns ``(solution, error)`` where ``error`` is the
    fraction of pooled examples misclassified. Ties go to the earliest
    behaviour subset in enumeration order.
    """
    F, datasets, k = instance.cls, list(instance.datasets), instance.k
    n = len(datasets)
    total = sum(len(s) for s in datasets)
    if total == 0:
        raise InvalidInputError("augmented ERM needs at least one example")
    if k >= n:
        hyps = [F.erm(s) for s in datasets]
        sol = AugmentedSolution(hyps + [hyps[0]] * (k - n), list(range(n)))
        return sol, sol.mistakes(datasets) / total
    if F.enumerable:
        e = _error_table(F, datasets)
        cols = _prune_dominated(e)
        value, chosen = _min_over_subsets(e[:, cols], k)
        table = F.behaviors()
        picked = [int(cols[j]) for j in chosen]
        sub = e[:, picked]
        assignment = [int(a) for a in np.argmin(sub, axis=1)]
        hyps = [Hypothesis(table[h]) for h in picked]
        hyps += [hyps[0]] * (k - len(hyps))
        return AugmentedSolution(hyps, assignment), value / total
    try:
        sol = augmented_erm_feasible(ErmInstance(F, datasets, k))
    except CapacityError:
        sol = None
    if sol is not None:
        return sol, 0.0
    return _min_by_assignment(F, datasets, k, total)


def _min_by_assignment(F, datasets, k, total):
    n = len(datasets)
    if n > 12 or k ** n > MAX_ASSIGNMENT_SEARCH * math.factorial(k):
        raise CapacityError("non-enumerable augmented ERM is capped at n <= 12")
    floor = [int(np.count_nonzero(F.erm(s).labels[s.points] != s.labels)) if len(s) else 0 for s in datasets]
    best, best_sol = math.inf, None
    cache = {}
    for a in _restricted_growth(n, k):
        if sum(floor) >= best:
            break
        cost, hyps = 0, []
        for g in range(max(a) + 1):
            mask = sum(1 << i for i in range(n) if a[i] == g)
            if mask not in cache:
                union = Dataset.concat(datasets[i] for i in range(n) if a[i] == g)
                h = F.erm(union)
                cache[mask] = (int(np.count_nonzero(h.labels[union.points] != union.labels)) if len(union) else 0, h)
            c, h = cache[mask]
            cost += c
            hyps.append(h)
            if cost >= best:
                break
        else:
            best, best_sol = cost, AugmentedSolution(hyps + [hyps[0]] * (k - len(hyps)), a)
    return best_sol, best / total


def pooled_error(solution: AugmentedSolution, datasets: Sequence[Dataset]) -> float:
    total = sum(len(s) for s in datasets)
    return solution.mistakes(datasets) / total


__all__ = [
    "AugmentedSolution",
    "ErmInstance",
    "erm",
    "threshold_consistency",
    "augmented_erm_feasible",
    "augmented_erm_decide",
    "augmented_erm_decide_many",
    "augmented_erm_min",
    "pooled_error",
    "training_error",
]
