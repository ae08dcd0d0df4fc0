"""Collaborative learners: the general augmented-ERM learner, the
shared-marginal clustering learner, the coloring-based learner for
2-refutable classes, and a doubling wrapper for unknown ``k``.

Every learner draws through a :class:`SamplingOracle`, so the ledger holds
the exact per-distribution sample counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .classes import HypothesisClass
from .core import (
    PROB_TOL,
    DataDistribution,
    Dataset,
    Hypothesis,
    RngStream,
    SampleCapExceeded,
    SamplingOracle,
    ceil_count,
    population_error,
    training_error,
)
from .erm import ErmInstance, augmented_erm_min
from .errors import CapacityError, InvalidInputError
from .graph import approx_color, build_conflict_graph, exact_color, greedy_color, is_proper, merge_independent_set, two_color, wigderson_exponent

DEFAULT_C = 4.0
DEFAULT_MAX_ROUNDS = 64


@dataclass(frozen=True)
class LearnerConfig:
    k: Optional[int]
    eps: float
    delta: float
    c: float = DEFAULT_C
    alpha: float = 1.0
    backend: str = "auto"
    max_rounds: int = DEFAULT_MAX_ROUNDS
    max_samples: Optional[int] = None
    force: bool = False
    validation_slack: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps <= 0.125:
            raise InvalidInputError("eps must lie in (0, 1/8]")
        if not 0 < self.delta < 1:
            raise InvalidInputError("delta must lie in (0, 1)")
        if self.c < 1:
            raise InvalidInputError("c must be at least 1")
        if self.alpha <= 0:
            raise InvalidInputError("alpha must be positive")
        if self.k is not None and self.k < 1:
            raise InvalidInputError("k must be at least 1")
        if self.backend not in ("auto", "two", "wigderson", "exact"):
            raise InvalidInputError(f"unknown coloring backend {self.backend!r}")

    def with_k(self, k: int) -> "LearnerConfig":
        return replace(self, k=k)


@dataclass
class LearnerReport:
    algo: str
    hypotheses: list
    ledger: dict
    rounds: int = 0
    group_sizes: list = field(default_factory=list)
    erm_calls: int = 0
    realizability_queries: int = 0
    flags: list = field(default_factory=list)
    k: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @property
    def total_samples(self) -> int:
        return self.ledger["total"]

    def errors(self, distributions: Sequence[DataDistribution]) -> list:
        return [population_error(h, D) for h, D in zip(self.hypotheses, distributions)]

    def max_error(self, distributions: Sequence[DataDistribution]) -> float:
        return max(self.errors(distributions))

    def flag(self, name: str):
        if name not in self.flags:
            self.flags.append(name)


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    return RngStream(int(rng))


def _make_oracle(distributions, rng, config, oracle):
    if oracle is None:
        oracle = SamplingOracle(distributions, _as_stream(rng))
    if config.max_samples is not None:
        oracle.max_samples = config.max_samples
    return oracle


def _fill_missing(report: LearnerReport, F: HypothesisClass):
    default = None
    for i, h in enumerate(report.hypotheses):
        if h is None:
            if default is None:
                default = F.erm(Dataset())
            report.hypotheses[i] = default


def _check_inputs(distributions, F, config, need_k=True):
    if not distributions:
        raise InvalidInputError("need at least one distribution")
    if need_k and config.k is None:
        raise InvalidInputError("this learner needs k (use the doubling wrapper otherwise)")
    for D in distributions:
        if int(D.points.max()) >= F.space.size:
            raise InvalidInputError("distribution support lies outside the class's space")


def final_stage_size(d: int, k: int, eps: float, delta: float, c: float) -> int:
    return ceil_count(c * (d * math.log(1 / eps) + math.log(k / delta)) / eps)


def general_round_sizes(d: int, k: int, g: int, r: int, eps: float, delta: float, c: float):
    """(mixture sample size, per-index validation size) of round ``r`` with ``g`` active indices."""
    delta_r = delta / r**2
    d_r = c * (k * d + g * math.log2(k))
    m = ceil_count(c * (d_r * math.log(1 / eps) + math.log(1 / delta_r)) / eps)
    mv = ceil_count(c * math.log(g / delta_r) / eps)
    return m, mv


def learn_general(distributions, F: HypothesisClass, config: LearnerConfig, rng=None, oracle=None) -> LearnerReport:
    """Learner for (k, eps)-realizable distributions via ERM over the augmented class.

    Each round samples the uniform mixture over active indices, fits ``k``
    hypotheses plus an assignment, and keeps index ``i`` when a fresh
    validation sample puts its hypothesis at most ``6 eps``. Leftovers
    (at most ``k``) are learned one by one.
    """
    _check_inputs(distributions, F, config)
    n, k, eps, delta, c = len(distributions), config.k, config.eps, config.delta, config.c
    oracle = _make_oracle(distributions, rng, config, oracle)
    d = F.vc_dim
    report = LearnerReport("general", [None] * n, {}, k=k)
    active = list(range(n))
    r = 1
    try:
        while len(active) > k:
            if r > config.max_rounds:
                report.flag("capped")
                break
            oracle.ledger.start_round()
            report.group_sizes.append(len(active))
            m, mv = general_round_sizes(d, k, len(active), r, eps, delta, c)
            tagged = oracle.draw_mixture(active, m)
            sol, _ = augmented_erm_min(ErmInstance(F, [tagged[i] for i in active], k))
            report.erm_calls += 1
            rejected = []
            for pos, i in enumerate(active):
                h = sol.hypothesis_for(pos)
                if training_error(h, oracle.draw(i, mv)) <= 6 * eps:
                    report.hypotheses[i] = h
                else:
                    rejected.append(i)
            active = rejected
            report.rounds = r
            r += 1
        if active:
            oracle.ledger.start_round()
            mf = final_stage_size(d, k, eps, delta, c)
            for i in active:
                report.hypotheses[i] = F.erm(oracle.draw(i, mf))
                report.erm_calls += 1
    except SampleCapExceeded:
        report.flag("sample-cap")
    except CapacityError as exc:
        report.flag("capacity")
        report.extra["error"] = str(exc)
    _fill_missing(report, F)
    report.ledger = oracle.ledger.snapshot()
    return report


def shared_marginal(distributions) -> bool:
    """Exact comparison of finite-support X-marginals (probabilities to ``PROB_TOL``)."""
    ref = distributions[0].marginal()
    for D in distributions[1:]:
        m = D.marginal()
        if m.keys() != ref.keys():
            return False
        if any(abs(m[x] - ref[x]) > PROB_TOL for x in ref):
            return False
    return True


def learn_same_marginal(distributions, F: HypothesisClass, config: LearnerConfig, rng=None, oracle=None) -> LearnerReport:
    """Clustering learner for distributions sharing one X-marginal.

    Distribution ``i`` reuses the best pooled hypothesis when its empirical
    error is at most ``(3 + 2 alpha / 3) eps``; otherwise a fresh ERM fit is
    added to the pool.
    """
    _check_inputs(distributions, F, config)
    n, eps, delta, c, alpha = len(distributions), config.eps, config.delta, config.c, config.alpha
    report = LearnerReport("same-marginal", [None] * n, {}, k=config.k)
    if not shared_marginal(distributions):
        if not config.force:
            raise InvalidInputError("distributions do not share an X-marginal (use force to override)")
        report.flag("marginal-mismatch")
    oracle = _make_oracle(distributions, rng, config, oracle)
    d = F.vc_dim
    pool: list[Hypothesis] = []
    threshold = (3 + 2 * alpha / 3) * eps
    try:
        for i in range(n):
            oracle.ledger.start_round()
            if pool:
                test = oracle.draw(i, ceil_count(c * math.log(n * len(pool) / delta) / eps))
                errs = [training_error(h, test) for h in pool]
                j = int(np.argmin(errs))
                if errs[j] <= threshold:
                    report.hypotheses[i] = pool[j]
                    continue
            mf = ceil_count(c * (d * math.log(1 / eps) + math.log((len(pool) + 1) / delta)) / eps)
            h = F.erm(oracle.draw(i, mf))
            report.erm_calls += 1
            pool.append(h)
            report.hypotheses[i] = h
    except SampleCapExceeded:
        report.flag("sample-cap")
    report.rounds = n
    report.extra["pool_size"] = len(pool)
    if config.k is not None and len(pool) > config.k:
        report.flag("pool-exceeds-k")
    _fill_missing(report, F)
    report.ledger = oracle.ledger.snapshot()
    return report


def _backend_for(config: LearnerConfig) -> str:
    if config.backend != "auto":
        return config.backend
    return "two" if config.k <= 2 else "wigderson"


def refutable_gamma(backend: str, k: int, g: int) -> float:
    """Color-count bound used for the size filter and the per-round sample size."""
    if backend == "wigderson" and k >= 3:
        return k * g ** wigderson_exponent(k)
    return float(min(k, 2)) if backend == "two" else float(k)


def refutable_round_sizes(d, k, g, r, eps, delta, c, gamma):
    delta_r = delta / r**2
    m = ceil_count(c * max((gamma / g) * (d * math.log(1 / eps) + g + math.log(1 / delta_r)) / eps, math.log(g / delta_r)))
    mv = ceil_count(c * math.log(g / delta_r) / eps)
    return m, mv


def _color(G, k, backend, report):
    if backend == "two":
        col = two_color(G)
        if col is None:
            report.flag("promise-violation")
            from .graph import Coloring, _relabel

            got = greedy_color(G)
            col = Coloring(_relabel([got[v] for v in range(G.n)]), promise_violated=True, backend="greedy")
        return col
    if backend == "exact":
        col = exact_color(G, k)
        if col is None:
            report.flag("promise-violation")
            col = approx_color(G, k)
        return col
    col = approx_color(G, k)
    if col.promise_violated:
        report.flag("promise-violation")
    return col


def learn_refutable(distributions, F: HypothesisClass, config: LearnerConfig, rng=None, oracle=None) -> LearnerReport:
    """Coloring-based learner for (k, 0)-realizable data over a 2-refutable class.

    Per round: sample every active distribution, build the conflict graph,
    color it, fit one consistent hypothesis per large color class, and keep
    members whose validation error is at most ``eps / 2``.
    """
    _check_inputs(distributions, F, config)
    if not F.two_refutable:
        raise InvalidInputError(f"{F.kind} class is not known to be 2-refutable")
    n, k, eps, delta, c = len(distributions), config.k, config.eps, config.delta, config.c
    oracle = _make_oracle(distributions, rng, config, oracle)
    backend = _backend_for(config)
    d = F.vc_dim
    report = LearnerReport("refutable", [None] * n, {}, k=k)
    report.extra.update(backend=backend, colors=[], gammas=[], proper=[])
    active = list(range(n))
    r = 1
    try:
        while active:
            if r > config.max_rounds:
                report.flag("capped")
                break
            oracle.ledger.start_round()
            g = len(active)
            report.group_sizes.append(g)
            gamma = refutable_gamma(backend, k, g)
            m, mv = refutable_round_sizes(d, k, g, r, eps, delta, c, gamma)
            samples = [oracle.draw(i, m) for i in active]
            G = build_conflict_graph(F, samples)
            report.realizability_queries += g * (g - 1) // 2
            col = _color(G, k, backend, report)
            proper = is_proper(G, col.colors)
            if not proper:
                raise AssertionError("coloring backend returned an improper coloring")
            report.extra["colors"].append(col.num_colors)
            report.extra["gammas"].append(gamma)
            report.extra["proper"].append(proper)
            accepted = set()
            for members in col.classes():
                if len(members) < g / (2 * gamma):
                    continue
                h = merge_independent_set(F, samples, members)
                report.erm_calls += 1
                for pos in members:
                    i = active[pos]
                    if training_error(h, oracle.draw(i, mv)) <= eps / 2:
                        report.hypotheses[i] = h
                        accepted.add(i)
            active = [i for i in active if i not in accepted]
            report.rounds = r
            r += 1
    except SampleCapExceeded:
        report.flag("sample-cap")
    _fill_missing(report, F)
    report.ledger = oracle.ledger.snapshot()
    return report


LEARNERS: dict = {
    "general": learn_general,
    "same-marginal": learn_same_marginal,
    "refutable": learn_refutable,
}

GUARANTEE = {"general": lambda cfg: 8.0, "same-marginal": lambda cfg: 3.0 + cfg.alpha, "refutable": lambda cfg: 1.0}


def general_bound(k: int, n: int, d: int, eps: float, delta: float) -> float:
    """Sample-complexity expression of the general learner with constants dropped.

    ``log(n/k)`` is taken as ``ln(e n / k)`` so it stays positive at ``k = n``.
    """
    l1e = math.log(1 / eps)
    return (k * d * math.log(math.e * n / k) * l1e + n * math.log(k) * l1e + n * math.log(n / delta)) / eps


def doubling_schedule(n: int, d: int, eps: float, delta: float) -> list:
    """Guesses ``k_1, k_2 - 1, k_2, k_3 - 1, k_3, ...`` capped at ``n``.

    ``k_1 = 1`` and ``k_{i+1}`` is the smallest ``k`` whose bound is at least
    twice the bound at ``k_i``.
    """
    anchors = [1]
    while anchors[-1] < n:
        target = 2 * general_bound(anchors[-1], n, d, eps, delta)
        nxt = anchors[-1] + 1
        while nxt < n and general_bound(nxt, n, d, eps, delta) < target:
            nxt += 1
        anchors.append(nxt)
    order = []
    for a in anchors:
        for g in (a - 1, a):
            if g >= 1 and (not order or g > order[-1]):
                order.append(g)
    return order


def _learner_name(learner) -> str:
    for name, fn in LEARNERS.items():
        if fn is learner or learner == name:
            return name
    raise InvalidInputError(f"unknown learner {learner!r}")


def per_distribution(distributions, F, config: LearnerConfig, oracle, report):
    mf = ceil_count(config.c * (F.vc_dim * math.log(1 / config.eps) + math.log(len(distributions) / config.delta)) / config.eps)
    for i in range(len(distributions)):
        report.hypotheses[i] = F.erm(oracle.draw(i, mf))
        report.erm_calls += 1


def doubling_wrapper(learner, distributions, F: HypothesisClass, config: LearnerConfig, rng=None) -> LearnerReport:
    """Run ``learner`` over increasing guesses of ``k`` until a fresh validation passes.

    Guess ``j`` (1-based) gets confidence ``delta / 2^j``. Its outputs are
    validated on ``c ln(n / delta_j) / eps`` fresh samples per distribution
    against ``guarantee * eps * validation_slack``. If every guess up to
    ``k = n`` fails, each distribution is learned separately.
    """
    name = _learner_name(learner)
    fn = LEARNERS[name]
    _check_inputs(distributions, F, config, need_k=False)
    n = len(distributions)
    stream = _as_stream(rng)
    oracle = _make_oracle(distributions, stream, config, None)
    d = F.vc_dim
    schedule = doubling_schedule(n, d, config.eps, config.delta)
    threshold = GUARANTEE[name](config) * config.eps * config.validation_slack
    guesses = []
    report = None
    for j, kk in enumerate(schedule, start=1):
        delta_j = config.delta / 2**j
        cfg = replace(config, k=kk, delta=delta_j)
        sub = fn(distributions, F, cfg, oracle=oracle)
        oracle.ledger.start_round()
        mv = ceil_count(config.c * math.log(n / delta_j) / config.eps)
        try:
            passed = all(training_error(h, oracle.draw(i, mv)) <= threshold for i, h in enumerate(sub.hypotheses))
        except SampleCapExceeded:
            sub.flag("sample-cap")
            passed = False
        guesses.append({"k": kk, "passed": passed, "samples": oracle.ledger.total})
        report = sub
        if passed or "sample-cap" in sub.flags:
            break
    else:
        report = LearnerReport(name, [None] * n, {}, k=n)
        report.flag("doubling-exhausted")
        try:
            per_distribution(distributions, F, replace(config, k=n), oracle, report)
        except SampleCapExceeded:
            report.flag("sample-cap")
        _fill_missing(report, F)
    report.ledger = oracle.ledger.snapshot()
    report.extra["guesses"] = guesses
    report.extra["schedule"] = schedule
    report.k = guesses[-1]["k"] if guesses and guesses[-1]["passed"] else report.k
    return report
