"""Acceptance checks. Each criterion prints one PASS/FAIL line (also when run
as a script: ``python3 tests/test_acceptance.py``)."""

import itertools
import math
import sys
import time

import networkx as nx
import numpy as np
import pytest

from colearn.classes import (
    ExplicitClass,
    compose,
    make_all_functions,
    make_at_most_one_positive,
    make_threshold_budget,
    xor,
)
from colearn.core import Dataset, RngStream
from colearn.erm import ErmInstance, augmented_erm_decide_many, augmented_erm_feasible, augmented_erm_min
from colearn.errors import RefutabilityViolation
from colearn.graph import approx_color, build_conflict_graph, exact_color, is_proper, merge_independent_set, two_color
from colearn.harness import generate_planted, naive_baseline
from colearn.learners import LearnerConfig, learn_general, learn_refutable, learn_same_marginal
from colearn.reductions import (
    GraphInstance,
    SubsetSumInstance,
    coloring_to_erm,
    sparsify_coloring,
    sparsify_size,
    subset_sum_padding,
    subsetsum_to_erm,
)
from colearn.vcdim import augment_class, vc_bound_threshold, vc_dimension

RESULTS = {}


def report(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line)
    return ok


def atlas_graphs(lo, hi):
    return [g for g in nx.graph_atlas_g() if lo <= g.number_of_nodes() <= hi]


def to_instance(g):
    return GraphInstance(g.number_of_nodes(), list(g.edges()))


# -- 1 ---------------------------------------------------------------------

def criterion_1(trials=200):
    F = make_all_functions(4)
    eps, delta = 0.05, 0.1
    t0 = time.perf_counter()
    good = 0
    for t in range(trials):
        root = RngStream(1001, (t,))
        inst = generate_planted(F, 8, 2, 0.0, "iid", root.child(0))
        rep = learn_general(inst.distributions, F, LearnerConfig(k=2, eps=eps, delta=delta), root.child(1))
        good += rep.max_error(inst.distributions) <= 8 * eps
    secs = time.perf_counter() - t0
    rate = good / trials
    return report(1, rate >= 0.9 and secs <= 300, f"general learner: {good}/{trials} trials with max err <= 8eps (need >= 90%), {secs:.1f}s (limit 300s)")


# -- 2 ---------------------------------------------------------------------

def criterion_2(trials=200):
    F = make_all_functions(4)
    eps, delta, alpha = 0.05, 0.1, 1.0
    worst_calls, good = 0, 0
    for t in range(trials):
        root = RngStream(1002, (t,))
        inst = generate_planted(F, 12, 3, 0.0, "shared", root.child(0))
        rep = learn_same_marginal(inst.distributions, F, LearnerConfig(k=3, eps=eps, delta=delta, alpha=alpha), root.child(1))
        worst_calls = max(worst_calls, rep.erm_calls)
        good += rep.max_error(inst.distributions) <= (3 + alpha) * eps
    ok = worst_calls <= 3 and good / trials >= 0.9
    return report(2, ok, f"shared-marginal learner: max ERM calls {worst_calls} (need <= 3), {good}/{trials} within (3+alpha)eps (need >= 90%)")


# -- 3 ---------------------------------------------------------------------

def criterion_3(trials=200):
    eps, delta = 0.05, 0.1
    need = 1 - delta - 1.96 * math.sqrt(delta * (1 - delta) / trials)
    F = make_all_functions(6)
    parts, ok = [], True
    for n, k, backend in ((8, 2, "two"), (27, 3, "wigderson")):
        good, all_proper = 0, True
        for t in range(trials):
            root = RngStream(1003, (n, t))
            inst = generate_planted(F, n, k, 0.0, "refutable-exact", root.child(0))
            rep = learn_refutable(inst.distributions, F, LearnerConfig(k=k, eps=eps, delta=delta, backend=backend), root.child(1))
            good += rep.max_error(inst.distributions) <= eps
            all_proper &= all(rep.extra["proper"]) and "promise-violation" not in rep.flags
        rate = good / trials
        ok &= rate >= need and all_proper
        parts.append(f"n={n},k={k},{backend}: {good}/{trials} eps-accurate, proper colorings={all_proper}")
    return report(3, ok, "; ".join(parts) + f" (need rate >= {need:.3f})")


# -- 4 ---------------------------------------------------------------------

def criterion_4():
    t0 = time.perf_counter()
    violations, cells = [], 0
    for d in (1, 2):
        F = make_all_functions(d)
        for n in (1, 2, 3):
            for k in range(1, n + 1):
                vc = vc_dimension(augment_class(F, n, k), cap=16)
                bound = vc_bound_threshold(d, n, k)
                cells += 1
                if not vc < bound:
                    violations.append((d, n, k, vc, bound))
    secs = time.perf_counter() - t0
    return report(4, not violations and secs <= 120, f"VC grid: {cells} cells, {len(violations)} violations, {secs:.1f}s (limit 120s)")


# -- 5 ---------------------------------------------------------------------

def criterion_5():
    graphs = atlas_graphs(1, 6)
    disagree = 0
    for g in graphs:
        G = to_instance(g)
        for k in (2, 3, 4):
            colorable = exact_color(G.to_graph(), k) is not None
            feasible = augmented_erm_feasible(coloring_to_erm(G, k)) is not None
            disagree += colorable != feasible
    ok = disagree == 0 and len(graphs) >= 200
    return report(5, ok, f"coloring reduction: {len(graphs)} non-isomorphic graphs x k in {{2,3,4}}, {disagree} disagreements")


# -- 6 ---------------------------------------------------------------------

def subset_sum_brute(values, t):
    """Enumerate all subsets explicitly."""
    m = len(values)
    return any(sum(values[i] for i in range(m) if (mask >> i) & 1) == t for mask in range(1 << m))


def subset_sum_cases(max_m=6, max_v=15):
    for m in range(1, max_m + 1):
        for vals in itertools.combinations_with_replacement(range(max_v + 1), m):
            s = sum(vals)
            if s == 0:
                continue
            for t in range(s + 1):
                yield list(vals), t


def criterion_6(max_m=6, max_v=15, batch=20000):
    count, disagree, bad_sum = 0, 0, 0
    reach_cache = {}
    buf_inst, buf_truth = [], []

    def flush():
        nonlocal disagree
        got = augmented_erm_decide_many(buf_inst)
        disagree += int(np.count_nonzero(got != np.asarray(buf_truth)))
        buf_inst.clear()
        buf_truth.clear()

    for vals, t in subset_sum_cases(max_m, max_v):
        key = tuple(vals)
        if key not in reach_cache:
            m = len(vals)
            reach_cache.clear()
            sums = {sum(vals[i] for i in range(m) if (mask >> i) & 1) for mask in range(1 << m)}
            reach_cache[key] = sums
        truth = t in reach_cache[key]
        inst = SubsetSumInstance(vals, t)
        n, padded = subset_sum_padding(inst)
        bad_sum += sum(padded) != 2 ** (n + 1)
        buf_inst.append(subsetsum_to_erm(inst))
        buf_truth.append(truth)
        count += 1
        if len(buf_inst) >= batch:
            flush()
    if buf_inst:
        flush()
    ok = disagree == 0 and bad_sum == 0
    return report(6, ok, f"subset-sum reduction: {count} (multiset, t) instances, {disagree} disagreements, {bad_sum} padding-sum errors")


# -- 7 ---------------------------------------------------------------------

def criterion_7():
    graphs = atlas_graphs(3, 5)
    deg_bad = size_bad = color_bad = 0
    for g in graphs:
        G = to_instance(g)
        for k in (3, 4, 5):
            H = sparsify_coloring(G, k)
            deg_bad += max(H.degrees(), default=0) > 2 * k - 1
            size_bad += H.n != G.n * (G.n - 1 + (G.n - 2) * (k - 1)) or H.n != sparsify_size(G.n, k)
        H = sparsify_coloring(G, 3)
        color_bad += (exact_color(G.to_graph(), 3) is None) != (exact_color(H.to_graph(), 3) is None)
    ok = deg_bad == size_bad == color_bad == 0
    return report(7, ok, f"sparsify gadget: {len(graphs)} graphs on 3..5 vertices, degree errors {deg_bad}, size errors {size_bad}, 3-colorability mismatches {color_bad}")


# -- 8 ---------------------------------------------------------------------

def criterion_8(trials=20):
    F = make_all_functions(32)
    eps, delta = 0.05, 0.1
    ns = (4, 8, 16, 32)
    alg, base = {}, {}
    for n in ns:
        a, b = [], []
        for t in range(trials):
            root = RngStream(1008, (n, t))
            inst = generate_planted(F, n, 2, 0.0, "iid", root.child(0))
            a.append(learn_general(inst.distributions, F, LearnerConfig(k=2, eps=eps, delta=delta), root.child(1)).total_samples)
            b.append(naive_baseline(inst.distributions, F, eps, delta, rng=root.child(2)).total_samples)
        alg[n], base[n] = float(np.mean(a)), float(np.mean(b))
    ratio = alg[32] / alg[4]
    base_ratio = base[32] / base[4]
    ok = alg[32] < base[32] and ratio < 8 and base_ratio >= 8
    detail = (f"samples(32)={alg[32]:.0f} vs baseline {base[32]:.0f}; growth 4->32: learner {ratio:.2f}x (need < 8x), "
              f"baseline {base_ratio:.2f}x")
    return report(8, ok, detail)


# -- 9 ---------------------------------------------------------------------

def refutable_classes():
    rng = np.random.default_rng(9)
    inner = make_all_functions(5)
    return [
        make_all_functions(4),
        make_all_functions(6),
        make_at_most_one_positive(6),
        compose(inner, rng.integers(0, 5, size=7).tolist()),
        xor(make_at_most_one_positive(5), rng.integers(0, 2, size=5).tolist()),
        xor(make_all_functions(5), rng.integers(0, 2, size=5).tolist()),
    ]


def criterion_9(instances=1000):
    classes = refutable_classes()
    violations = classes_checked = 0
    for t in range(instances):
        root = RngStream(1009, (t,))
        gen = root.child(9).generator()
        F = classes[t % len(classes)]
        k = int(gen.integers(2, 5))
        n = int(gen.integers(k, 13))
        inst = generate_planted(F, n, k, 0.0, "refutable-exact", root.child(0))
        m = int(gen.integers(1, 8))
        samples = [D.draw(m, root.child(1, i).generator()) for i, D in enumerate(inst.distributions)]
        G = build_conflict_graph(F, samples)
        cols = [c for c in (two_color(G) if k == 2 else None, exact_color(G, k), approx_color(G, k)) if c is not None]
        for col in cols:
            assert is_proper(G, col.colors)
            for members in col.classes():
                classes_checked += 1
                try:
                    merge_independent_set(F, samples, members)
                except RefutabilityViolation:
                    violations += 1
    return report(9, violations == 0, f"independent-set merging: {instances} instances, {classes_checked} color classes, {violations} violations")


# -- 10 --------------------------------------------------------------------

def random_class(gen):
    choice = int(gen.integers(0, 4))
    if choice == 0:
        pts = int(gen.integers(2, 6))
        H = int(gen.integers(1, 17))
        return ExplicitClass(gen.integers(0, 2, size=(H, pts)))
    if choice == 1:
        return make_all_functions(int(gen.integers(2, 4)))
    if choice == 2:
        return make_at_most_one_positive(int(gen.integers(2, 6)))
    return make_threshold_budget(2)


def explicit_table(F):
    """Independent behaviour table: the threshold class is listed by brute force over theta."""
    if F.kind == "threshold_budget":
        rows = []
        for theta in itertools.product(range(F.budget + 1), repeat=F.d):
            if sum(theta) <= F.budget:
                rows.append(np.concatenate([(np.arange(F.width) <= th).astype(np.uint8) for th in theta]))
        return np.array(rows)
    return np.array(F.behaviors())


def random_datasets(F, table, n, gen):
    """Datasets labeled by a few random behaviours, with occasional flips."""
    size = table.shape[1]
    planted = table[gen.integers(0, table.shape[0], size=int(gen.integers(1, 4)))]
    out = []
    for _ in range(n):
        h = planted[int(gen.integers(0, len(planted)))]
        m = int(gen.integers(1, 4))
        pts = gen.integers(0, size, size=m)
        labs = h[pts].copy()
        flip = gen.random(m) < 0.15
        labs[flip] ^= 1
        out.append(Dataset(pts, labs))
    return out


def naive_feasible(table, datasets, k):
    n = len(datasets)
    ok_cache = {}

    def realizable(members):
        key = tuple(members)
        if key not in ok_cache:
            union = Dataset.concat([datasets[i] for i in members])
            ok_cache[key] = bool(np.any(np.all(table[:, union.points] == union.labels[None, :], axis=1)))
        return ok_cache[key]

    for c in itertools.product(range(k), repeat=n):
        if all(realizable([i for i in range(n) if c[i] == g]) for g in range(k) if g in c):
            return True
    return False


def naive_min(table, datasets, k):
    """Exhaustive over f in F^k and c in [k]^n; returns the minimal mistake count."""
    n = len(datasets)
    E = np.array([[np.count_nonzero(row[S.points] != S.labels) for row in table] for S in datasets])
    tuples = np.array(list(itertools.product(range(table.shape[0]), repeat=k)))
    G = E[:, tuples]  # n x |F|^k x k
    best = None
    for c in itertools.product(range(k), repeat=n):
        tot = sum(G[i, :, c[i]] for i in range(n)).min()
        best = tot if best is None else min(best, tot)
    return int(best)


def criterion_10(n_feas=500, n_min=200):
    gen = np.random.default_rng(1010)
    feas_bad = feas_done = 0
    while feas_done < n_feas:
        F = random_class(gen)
        table = explicit_table(F)
        k = int(gen.integers(1, 5))
        n = int(gen.integers(k, 9))
        if k**n > 10**6:
            continue
        data = random_datasets(F, table, n, gen)
        got = augmented_erm_feasible(ErmInstance(F, data, k))
        if got is not None:
            # witness must actually fit
            assert got.mistakes(data) == 0
        feas_bad += (got is not None) != naive_feasible(table, data, k)
        feas_done += 1
    min_bad = min_done = 0
    while min_done < n_min:
        F = random_class(gen)
        if F.kind == "threshold_budget":
            continue
        table = explicit_table(F)
        if table.shape[0] > 16:
            continue
        k = int(gen.integers(1, 4))
        n = int(gen.integers(max(k, 2), 7))
        data = random_datasets(F, table, n, gen)
        sol, err = augmented_erm_min(ErmInstance(F, data, k))
        total = sum(len(s) for s in data)
        mistakes = sol.mistakes(data)
        want = naive_min(table, data, k)
        min_bad += mistakes != want or round(err * total) != want
        min_done += 1
    ok = feas_bad == 0 and min_bad == 0
    return report(10, ok, f"oracle equivalence: feasibility {feas_bad}/{feas_done} mismatches, minimization {min_bad}/{min_done} mismatches")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num):
    assert CRITERIA[num]()


if __name__ == "__main__":
    wanted = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    results = [CRITERIA[i]() for i in wanted]
    sys.exit(0 if all(results) else 1)
