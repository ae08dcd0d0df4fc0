"""Planted instance generation, the experiment runner, and CSV/aggregate output."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classes import HypothesisClass, from_descriptor
from .core import DataDistribution, Hypothesis, RngStream, SamplingOracle, ceil_count, realizability_check
from .errors import CapacityError, ColearnError, InvalidInputError
from .learners import (
    DEFAULT_C,
    GUARANTEE,
    LEARNERS,
    LearnerConfig,
    LearnerReport,
    doubling_wrapper,
)

MODES = ("iid", "shared", "refutable-exact")
CSV_COLUMNS = ["trial", "algo", "n", "k", "d", "eps", "delta", "total_samples", "max_err", "rounds", "erm_calls", "flags"]


@dataclass
class PlantedInstance:
    cls: HypothesisClass
    hypotheses: list
    assignment: list
    marginals: list
    noise: list
    mode: str = "iid"
    distributions: list = field(default_factory=list)

    def __post_init__(self):
        if not self.distributions:
            self.distributions = [
                DataDistribution.labeled_by(self.hypotheses[c], m, eta)
                for c, m, eta in zip(self.assignment, self.marginals, self.noise)
            ]

    @property
    def n(self):
        return len(self.assignment)

    @property
    def k(self):
        return len(self.hypotheses)


def _uniform_on(points) -> dict:
    w = 1.0 / len(points)
    return {int(p): w for p in points}


def generate_planted(F: HypothesisClass, n: int, k: int, noise: float = 0.0, mode: str = "iid", rng=None, check: Optional[bool] = None) -> PlantedInstance:
    """Distributions labeled by ``k`` distinct planted hypotheses plus label noise.

    ``iid``: each marginal is uniform on a random subset (at least half the
    points) of the space. ``shared``: one uniform marginal on the whole space.
    ``refutable-exact``: like ``iid`` but noiseless and the class must be
    2-refutable. Every group of the planted assignment is used when ``n >= k``.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}")
    if n < 1 or k < 1:
        raise InvalidInputError("n and k must be positive")
    if not 0 <= noise < 0.5:
        raise InvalidInputError("noise must lie in [0, 1/2)")
    if mode == "refutable-exact":
        if not F.two_refutable:
            raise InvalidInputError(f"{F.kind} class is not 2-refutable")
        if noise:
            raise InvalidInputError("refutable-exact mode is noiseless")
    stream = rng if isinstance(rng, RngStream) else RngStream(0 if rng is None else int(rng))
    gen = stream.generator()
    hyps = F.random_behaviors(k, gen)
    base = np.arange(n) % k
    assignment = [int(c) for c in gen.permutation(base)]
    size = F.space.size
    if mode == "shared":
        shared = _uniform_on(range(size))
        marginals = [dict(shared) for _ in range(n)]
    else:
        marginals = []
        lo = max(1, (size + 1) // 2)
        for _ in range(n):
            s = int(gen.integers(lo, size + 1))
            marginals.append(_uniform_on(np.sort(gen.choice(size, size=s, replace=False))))
    inst = PlantedInstance(F, hyps, assignment, marginals, [noise] * n, mode)
    if check is None:
        check = __debug__ and F.enumerable and F.behaviors().shape[0] <= 4096 and n <= 16
    if check:
        ok, _ = realizability_check(inst.distributions, F, k, noise)
        assert ok, "planted instance failed its own realizability check"
    return inst


def naive_baseline(distributions, F: HypothesisClass, eps: float, delta: float, c: float = DEFAULT_C, rng=None) -> LearnerReport:
    """Independent PAC learning: ``c (d ln(1/eps) + ln(n/delta)) / eps`` samples per distribution."""
    n = len(distributions)
    stream = rng if isinstance(rng, RngStream) else RngStream(0 if rng is None else int(rng))
    oracle = SamplingOracle(distributions, stream)
    m = ceil_count(c * (F.vc_dim * math.log(1 / eps) + math.log(n / delta)) / eps)
    report = LearnerReport("naive", [None] * n, {}, rounds=1)
    for i in range(n):
        report.hypotheses[i] = F.erm(oracle.draw(i, m))
        report.erm_calls += 1
    report.ledger = oracle.ledger.snapshot()
    return report


@dataclass
class ExperimentSpec:
    ns: Sequence[int]
    ks: Sequence[int]
    ds: Sequence[int]
    epss: Sequence[float]
    deltas: Sequence[float]
    algos: Sequence[str] = ("general",)
    trials: int = 1
    seed: int = 0
    out: Optional[str] = None
    class_kind: str = "all_functions"
    mode: str = "iid"
    noise: float = 0.0
    c: float = DEFAULT_C
    alpha: float = 1.0
    backend: str = "auto"
    doubling: bool = False
    jobs: int = 1
    max_rounds: int = 64

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if any(not 0 < e <= 0.125 for e in self.epss) or any(not 0 < d < 1 for d in self.deltas):
            raise InvalidInputError("eps must lie in (0, 1/8] and delta in (0, 1)")
        for a in self.algos:
            if a not in LEARNERS and a != "naive":
                raise InvalidInputError(f"unknown algorithm {a!r}")

    def cells(self) -> list:
        return [(n, k, d, e, dl) for n in self.ns for k in self.ks for d in self.ds for e in self.epss for dl in self.deltas]


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _run_trial(job):
    spec, cell_idx, cell, trial = job
    n, k, d, eps, delta = cell
    root = RngStream(spec.seed, (cell_idx, trial))
    F = from_descriptor({"kind": spec.class_kind, "d": d})
    rows = []
    try:
        inst = generate_planted(F, n, k, spec.noise, spec.mode, root.child(0), check=False)
    except ColearnError as exc:
        return [_failure_row(trial, a, cell, F, type(exc).__name__) for a in spec.algos]
    for a_idx, algo in enumerate(spec.algos):
        stream = root.child(1, a_idx)
        try:
            if algo == "naive":
                rep = naive_baseline(inst.distributions, F, eps, delta, spec.c, stream)
                mult = 1.0
            else:
                cfg = LearnerConfig(k=k, eps=eps, delta=delta, c=spec.c, alpha=spec.alpha, backend=spec.backend,
                                    max_rounds=spec.max_rounds, force=True)
                if spec.doubling:
                    rep = doubling_wrapper(algo, inst.distributions, F, cfg, stream)
                else:
                    rep = LEARNERS[algo](inst.distributions, F, cfg, stream)
            rows.append({
                "trial": trial, "algo": algo, "n": n, "k": k, "d": F.vc_dim, "eps": eps, "delta": delta,
                "total_samples": rep.total_samples, "max_err": _fmt(rep.max_error(inst.distributions)),
                "rounds": rep.rounds, "erm_calls": rep.erm_calls, "flags": "|".join(rep.flags),
            })
        except (ColearnError, AssertionError) as exc:
            rows.append(_failure_row(trial, algo, cell, F, type(exc).__name__))
    return rows


def _failure_row(trial, algo, cell, F, why):
    n, k, d, eps, delta = cell
    return {"trial": trial, "algo": algo, "n": n, "k": k, "d": d, "eps": eps, "delta": delta,
            "total_samples": 0, "max_err": "nan", "rounds": 0, "erm_calls": 0, "flags": f"error:{why}"}


def run_experiment(spec: ExperimentSpec) -> list:
    """Run every (cell, trial) and return rows sorted by (cell, trial, algo order).

    Trials are independent and seeded from ``(seed, cell, trial)``, so the
    output does not depend on ``jobs``. Failures become flagged rows.
    """
    jobs = [(spec, ci, cell, t) for ci, cell in enumerate(spec.cells()) for t in range(spec.trials)]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * spec.jobs))))
    else:
        results = [_run_trial(j) for j in jobs]
    rows = [row for chunk in results for row in chunk]
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r[c] for c in CSV_COLUMNS})
    return buf.getvalue()


def _multiplier(algo: str, alpha: float) -> float:
    if algo == "naive":
        return 1.0
    cfg = LearnerConfig(k=1, eps=0.1, delta=0.1, alpha=alpha)
    return GUARANTEE[algo](cfg)


def aggregate(rows, alpha: float = 1.0) -> list:
    """Per (algo, n, k, d, eps, delta): mean samples with a 95% normal CI and PAC success rate.

    Success means ``max_err <= multiplier * eps`` (8 general, 3 + alpha
    same-marginal, 1 refutable and naive). The binomial CI uses
    ``1.96 sqrt(p (1 - p) / T)``. Rows are grouped after sorting, so the
    result does not depend on row order.
    """
    groups: dict = {}
    for r in rows:
        key = (r["algo"], int(r["n"]), int(r["k"]), int(r["d"]), float(r["eps"]), float(r["delta"]))
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups):
        algo, n, k, d, eps, delta = key
        grp = sorted(groups[key], key=lambda r: int(r["trial"]))
        samples = np.array([float(r["total_samples"]) for r in grp])
        errs = np.array([float(r["max_err"]) for r in grp])
        t = len(grp)
        mean = float(samples.mean())
        half = 1.96 * float(samples.std(ddof=1)) / math.sqrt(t) if t > 1 else 0.0
        succ = float(np.mean(errs <= _multiplier(algo, alpha) * eps + 1e-12))
        out.append({
            "algo": algo, "n": n, "k": k, "d": d, "eps": eps, "delta": delta, "trials": t,
            "mean_samples": mean, "samples_ci": half,
            "success_rate": succ, "success_ci": 1.96 * math.sqrt(succ * (1 - succ) / t),
        })
    return out
