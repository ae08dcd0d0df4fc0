"""Find the smallest power of two for the sample-size constant c that passes
the PAC checks of all three learners on planted instances.

    python3 scripts/calibrate_c.py --trials 100 --max-power 4
"""

import argparse
import math

from colearn.classes import make_all_functions, make_at_most_one_positive
from colearn.core import RngStream
from colearn.harness import generate_planted
from colearn.learners import GUARANTEE, LearnerConfig, learn_general, learn_refutable, learn_same_marginal

SUITE = [
    # name, learner, class, n, k, mode, backend
    ("general", learn_general, lambda: make_all_functions(4), 8, 2, "iid", "auto"),
    ("same-marginal", learn_same_marginal, lambda: make_all_functions(4), 12, 3, "shared", "auto"),
    ("refutable", learn_refutable, lambda: make_at_most_one_positive(6), 8, 2, "refutable-exact", "two"),
    ("refutable", learn_refutable, lambda: make_at_most_one_positive(6), 27, 3, "refutable-exact", "wigderson"),
]


def success_rate(c, entry, trials, eps, delta, seed):
    name, learner, make, n, k, mode, backend = entry
    F = make()
    cfg = LearnerConfig(k, eps, delta, c=c, backend=backend)
    limit = GUARANTEE[name](cfg) * eps
    ok = 0
    for t in range(trials):
        root = RngStream(seed, (n, k, t))
        inst = generate_planted(F, n, k, 0.0, mode, root.child(0), check=False)
        rep = learner(inst.distributions, F, cfg, root.child(1))
        ok += rep.max_error(inst.distributions) <= limit + 1e-12
    return ok / trials


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--max-power", type=int, default=4)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    # pass if the rate is at least 1 - delta minus three binomial standard errors
    need = 1 - args.delta - 3 * math.sqrt(args.delta * (1 - args.delta) / args.trials)
    chosen = None
    for p in range(args.max_power + 1):
        c = 2.0**p
        rates = [success_rate(c, e, args.trials, args.eps, args.delta, args.seed) for e in SUITE]
        passed = all(r >= need for r in rates)
        cells = " ".join(f"{e[0]}/{e[6]}:{r:.3f}" for e, r in zip(SUITE, rates))
        print(f"c={c:g} {'pass' if passed else 'fail'} {cells}")
        if passed and chosen is None:
            chosen = c
    print(f"smallest passing c: {chosen}" if chosen else "no c passed")


if __name__ == "__main__":
    main()
