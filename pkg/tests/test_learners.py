import numpy as np
import pytest

from colearn.classes import make_all_functions, make_at_most_one_positive
from colearn.core import DataDistribution, Hypothesis, RngStream
from colearn.errors import InvalidInputError
from colearn.harness import generate_planted, naive_baseline
from colearn.learners import (
    LEARNERS,
    LearnerConfig,
    doubling_schedule,
    doubling_wrapper,
    final_stage_size,
    general_bound,
    learn_general,
    learn_refutable,
    learn_same_marginal,
)

EPS, DELTA = 0.05, 0.1


def check_ledger(rep):
    led = rep.ledger
    assert led["total"] == sum(led["counts"]) == sum(led["round_draws"])


def test_config_validation():
    for bad in ({"eps": 0.2}, {"eps": 0.0}, {"delta": 1.0}, {"c": 0.5}, {"alpha": 0.0}, {"k": 0}, {"backend": "x"}):
        kw = {"k": 1, "eps": EPS, "delta": DELTA, **bad}
        with pytest.raises(InvalidInputError):
            LearnerConfig(**kw)


@pytest.mark.parametrize("name", sorted(LEARNERS))
def test_single_distribution_reduces_to_pac(name):
    F = make_all_functions(4)
    D = DataDistribution.labeled_by(Hypothesis([1, 0, 1, 1]), {0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25})
    rep = LEARNERS[name]([D], F, LearnerConfig(1, EPS, DELTA), RngStream(1))
    assert rep.max_error([D]) == 0.0
    assert len(rep.hypotheses) == 1
    check_ledger(rep)


def test_general_final_stage_only_when_n_le_k():
    F = make_all_functions(4)
    inst = generate_planted(F, 2, 2, 0.0, "iid", RngStream(2))
    rep = learn_general(inst.distributions, F, LearnerConfig(2, EPS, DELTA), RngStream(3))
    assert rep.rounds == 0
    assert rep.total_samples == 2 * final_stage_size(4, 2, EPS, DELTA, 4)


@pytest.mark.parametrize("name,mode", [("general", "iid"), ("same-marginal", "shared"), ("refutable", "refutable-exact")])
def test_ledger_conservation_and_determinism(name, mode):
    F = make_at_most_one_positive(6) if name == "refutable" else make_all_functions(4)
    inst = generate_planted(F, 8, 2, 0.0, mode, RngStream(4))
    cfg = LearnerConfig(2, EPS, DELTA)
    a = LEARNERS[name](inst.distributions, F, cfg, RngStream(5))
    b = LEARNERS[name](inst.distributions, F, cfg, RngStream(5))
    check_ledger(a)
    assert a.ledger == b.ledger and a.flags == b.flags
    assert [h.key() for h in a.hypotheses] == [h.key() for h in b.hypotheses]
    assert len(a.hypotheses) == 8


def test_general_pac_and_halving():
    F = make_all_functions(4)
    ok = 0
    for t in range(30):
        inst = generate_planted(F, 8, 2, 0.0, "iid", RngStream(6, (t, 0)))
        rep = learn_general(inst.distributions, F, LearnerConfig(2, EPS, DELTA), RngStream(6, (t, 1)))
        ok += rep.max_error(inst.distributions) <= 8 * EPS
        sizes = rep.group_sizes
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))
    assert ok >= 27


def test_same_marginal_identical_distributions_one_erm_call():
    F = make_all_functions(4)
    D = DataDistribution.labeled_by(Hypothesis([0, 1, 1, 0]), {x: 0.25 for x in range(4)})
    rep = learn_same_marginal([D] * 6, F, LearnerConfig(3, EPS, DELTA), RngStream(7))
    assert rep.erm_calls == 1
    assert len({h.key() for h in rep.hypotheses}) == 1


def test_same_marginal_checks_marginals():
    F = make_all_functions(2)
    a = DataDistribution.labeled_by(Hypothesis([0, 0]), {0: 1.0})
    b = DataDistribution.labeled_by(Hypothesis([1, 1]), {1: 1.0})
    with pytest.raises(InvalidInputError):
        learn_same_marginal([a, b], F, LearnerConfig(1, EPS, DELTA), RngStream(0))
    rep = learn_same_marginal([a, b], F, LearnerConfig(1, EPS, DELTA, force=True), RngStream(0))
    assert "marginal-mismatch" in rep.flags


def test_same_marginal_pool_exceeds_k_flag():
    # pairwise far-apart targets force a new fit per distribution
    F = make_all_functions(4)
    dists = [DataDistribution.labeled_by(Hypothesis([1 - (x == i) for x in range(4)]), {x: 0.25 for x in range(4)}) for i in range(4)]
    rep = learn_same_marginal(dists, F, LearnerConfig(1, EPS, DELTA), RngStream(1))
    assert rep.erm_calls == 4 and "pool-exceeds-k" in rep.flags


def test_same_marginal_frugality():
    F = make_all_functions(4)
    for t in range(30):
        inst = generate_planted(F, 12, 3, 0.0, "shared", RngStream(8, (t, 0)))
        rep = learn_same_marginal(inst.distributions, F, LearnerConfig(3, EPS, DELTA), RngStream(8, (t, 1)))
        assert rep.erm_calls <= 3


def test_refutable_two_and_wigderson():
    F = make_at_most_one_positive(6)
    for backend, n, k in (("two", 8, 2), ("wigderson", 27, 3)):
        for t in range(10):
            inst = generate_planted(F, n, k, 0.0, "refutable-exact", RngStream(9, (t, 0)))
            rep = learn_refutable(inst.distributions, F, LearnerConfig(k, EPS, DELTA, backend=backend), RngStream(9, (t, 1)))
            assert all(rep.extra["proper"])
            assert "promise-violation" not in rep.flags
            check_ledger(rep)


def test_max_rounds_cap_flags():
    F = make_all_functions(4)
    inst = generate_planted(F, 16, 4, 0.0, "iid", RngStream(10))
    rep = learn_general(inst.distributions, F, LearnerConfig(1, EPS, DELTA, max_rounds=1), RngStream(11))
    assert rep.rounds <= 1
    assert len(rep.hypotheses) == 16


def test_sample_cap_flags():
    F = make_all_functions(4)
    inst = generate_planted(F, 8, 2, 0.0, "iid", RngStream(12))
    rep = learn_general(inst.distributions, F, LearnerConfig(2, EPS, DELTA, max_samples=100), RngStream(13))
    assert "sample-cap" in rep.flags and rep.total_samples <= 100
    assert all(h is not None for h in rep.hypotheses)


def test_doubling_schedule_shape():
    sched = doubling_schedule(9, 4, EPS, DELTA)
    assert sched[0] == 1 and sched[-1] == 9 and sched == sorted(set(sched))
    assert general_bound(2, 9, 4, EPS, DELTA) > general_bound(1, 9, 4, EPS, DELTA)


def test_doubling_true_k1():
    F = make_all_functions(4)
    inst = generate_planted(F, 6, 1, 0.0, "iid", RngStream(14))
    known = learn_general(inst.distributions, F, LearnerConfig(1, EPS, DELTA), RngStream(15))
    rep = doubling_wrapper("general", inst.distributions, F, LearnerConfig(None, EPS, DELTA), RngStream(15))
    assert rep.extra["guesses"][0]["k"] == 1 and rep.extra["guesses"][0]["passed"]
    assert rep.total_samples <= 2 * known.total_samples
    check_ledger(rep)


def test_doubling_true_k3():
    F = make_all_functions(4)
    for t in range(5):
        inst = generate_planted(F, 9, 3, 0.0, "iid", RngStream(16, (t, 0)))
        rep = doubling_wrapper(learn_general, inst.distributions, F, LearnerConfig(None, EPS, DELTA), RngStream(16, (t, 1)))
        sched = rep.extra["schedule"]
        assert rep.k <= min(g for g in sched if g >= 3)
        assert rep.max_error(inst.distributions) <= 8 * EPS


def test_sample_totals_monotone_in_n():
    F = make_all_functions(4)
    means = []
    for n in (4, 8, 16):
        tot = []
        for t in range(20):
            inst = generate_planted(F, n, 2, 0.0, "iid", RngStream(17, (n, t, 0)))
            tot.append(learn_general(inst.distributions, F, LearnerConfig(2, EPS, DELTA), RngStream(17, (n, t, 1))).total_samples)
        means.append(np.mean(tot))
    assert means == sorted(means)


def test_naive_baseline_arithmetic():
    F = make_all_functions(4)
    inst = generate_planted(F, 5, 2, 0.0, "iid", RngStream(18))
    rep = naive_baseline(inst.distributions, F, EPS, DELTA, 4, RngStream(19))
    per = final_stage_size(4, 5, EPS, DELTA, 4)
    assert rep.total_samples == 5 * per and rep.ledger["counts"] == [per] * 5
    one = naive_baseline(inst.distributions[:1], F, EPS, DELTA, 4, RngStream(19))
    assert one.total_samples == final_stage_size(4, 1, EPS, DELTA, 4)
