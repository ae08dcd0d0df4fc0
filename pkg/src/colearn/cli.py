"""Command-line entry point ``colearn``.

Exit codes: 0 success, 2 invalid input, 3 capacity exceeded, 4 when the only
problem was a broken coloring promise, 1 for any other library error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .classes import parse_class_spec
from .core import RngStream
from .erm import ErmInstance, augmented_erm_feasible, augmented_erm_min
from .errors import CapacityError, ColearnError, InvalidInputError
from .graph import approx_color, build_conflict_graph, exact_color, is_proper, two_color
from .harness import ExperimentSpec, aggregate, generate_planted, naive_baseline, rows_to_csv, run_experiment
from .io import (
    dimacs,
    dump_json,
    graph_to_json,
    instance_to_json,
    InstanceFile,
    load_graph,
    load_instance,
    planted_to_file,
)
from .learners import LEARNERS, LearnerConfig, doubling_wrapper
from .reductions import (
    SubsetSumInstance,
    coloring_to_erm,
    sparsify_coloring,
    subset_sum_padding,
    subsetsum_to_erm,
)
from .vcdim import augment_class, vc_bound_threshold, vc_dimension

EXIT_INVALID, EXIT_CAPACITY, EXIT_PROMISE = 2, 3, 4


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solution_json(sol, k):
    if sol is None:
        return {"assignment": None, "hypotheses": None}
    return {
        "assignment": [c + 1 for c in sol.assignment],
        "hypotheses": [h.labels.tolist() for h in sol.hypotheses[:k]],
    }


def cmd_simulate(args):
    if args.instance:
        inst = load_instance(args.instance)
        if not inst.distributions:
            raise InvalidInputError("simulate needs an instance with distributions")
        k = args.k if args.k is not None else inst.k
        if k is None and not args.doubling:
            raise InvalidInputError("give --k, --doubling, or an instance with k")
        rows = []
        for t in range(args.trials):
            stream = RngStream(args.seed, (t,))
            if args.algo == "naive":
                rep = naive_baseline(inst.distributions, inst.cls, args.eps, args.delta, args.c, stream)
            else:
                cfg = LearnerConfig(k=k, eps=args.eps, delta=args.delta, c=args.c, alpha=args.alpha,
                                    backend=args.backend, force=args.force)
                if args.doubling:
                    rep = doubling_wrapper(args.algo, inst.distributions, inst.cls, cfg, stream)
                else:
                    rep = LEARNERS[args.algo](inst.distributions, inst.cls, cfg, stream)
            rows.append({
                "trial": t, "algo": args.algo, "n": len(inst.distributions), "k": rep.k if rep.k is not None else k,
                "d": inst.cls.vc_dim, "eps": args.eps, "delta": args.delta, "total_samples": rep.total_samples,
                "max_err": f"{rep.max_error(inst.distributions):.10g}", "rounds": rep.rounds,
                "erm_calls": rep.erm_calls, "flags": "|".join(rep.flags),
            })
    else:
        if not (args.class_kind and args.ns and args.ks and args.ds):
            raise InvalidInputError("without --instance, give --class-kind, --ns, --ks and --ds")
        spec = ExperimentSpec(
            ns=_ints(args.ns), ks=_ints(args.ks), ds=_ints(args.ds), epss=[args.eps], deltas=[args.delta],
            algos=args.algo.split(","), trials=args.trials, seed=args.seed, class_kind=args.class_kind,
            mode=args.mode, noise=args.noise, c=args.c, alpha=args.alpha, backend=args.backend,
            doubling=args.doubling, jobs=args.jobs,
        )
        rows = run_experiment(spec)
    _emit(rows_to_csv(rows), args.out)
    if args.summary:
        for agg in aggregate(rows, alpha=args.alpha):
            print(json.dumps(agg), file=sys.stderr)
    return 0


def cmd_erm(args):
    inst = load_instance(args.instance)
    k = args.k if args.k is not None else inst.k
    if k is None:
        raise InvalidInputError("give --k or an instance with k")
    if not inst.datasets:
        raise InvalidInputError("erm needs an instance with datasets")
    problem = ErmInstance(inst.cls, inst.datasets, k)
    if args.minimize:
        sol, err = augmented_erm_min(problem)
        out = {"feasible": err == 0, "error": err, **_solution_json(sol, k)}
    else:
        sol = augmented_erm_feasible(problem)
        out = {"feasible": sol is not None, "error": 0.0 if sol is not None else None, **_solution_json(sol, k)}
    _emit(json.dumps(out) + "\n", args.out)
    return 0


def cmd_vcdim(args):
    F = parse_class_spec(args.cls)
    target = F if args.n is None else augment_class(F, args.n, args.k or 1)
    vc = vc_dimension(target, cap=args.cap)
    out = {"vc": vc, "at_cap": vc == args.cap}
    if args.n is not None:
        out["bound_threshold"] = vc_bound_threshold(F.vc_dim, args.n, args.k or 1)
    _emit(json.dumps(out) + "\n", args.out)
    return 0


def cmd_conflict_graph(args):
    inst = load_instance(args.instance)
    datasets = inst.datasets
    if not datasets:
        raise InvalidInputError("conflict-graph needs an instance with datasets")
    G = build_conflict_graph(inst.cls, datasets)
    _emit(dimacs(G.n, G.edges()), args.out)
    return 0


def cmd_color(args):
    if args.graph:
        G = load_graph(args.graph).to_graph()
    elif args.instance:
        inst = load_instance(args.instance)
        G = build_conflict_graph(inst.cls, inst.datasets)
    else:
        raise InvalidInputError("give --graph or --instance")
    violated = False
    if args.backend == "two":
        col = two_color(G)
        if col is None:
            violated = True
    elif args.backend == "exact":
        col = exact_color(G, args.k)
        if col is None:
            violated = True
    else:
        col = approx_color(G, args.k)
        violated = col.promise_violated
    out = {
        "colorable": col is not None,
        "num_colors": col.num_colors if col is not None else None,
        "colors": [c for c in col.colors] if col is not None else None,
        "proper": is_proper(G, col.colors) if col is not None else None,
        "promise_violated": violated,
    }
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_PROMISE if violated else 0


def cmd_reduce(args):
    if args.kind == "coloring":
        G = load_graph(args.graph)
        inst = coloring_to_erm(G, args.k)
        doc = instance_to_json(InstanceFile(inst.cls, inst.k, datasets=inst.datasets))
    elif args.kind == "subsetsum":
        ss = SubsetSumInstance(_ints(args.values), args.t)
        inst = subsetsum_to_erm(ss)
        n, padded = subset_sum_padding(ss)
        doc = instance_to_json(InstanceFile(inst.cls, inst.k, datasets=inst.datasets, extra={"padded": padded}))
    else:
        G = load_graph(args.graph)
        doc = graph_to_json(sparsify_coloring(G, args.k))
    _emit(dump_json(doc), args.out)
    return 0


def cmd_gen(args):
    F = parse_class_spec(args.cls)
    inst = generate_planted(F, args.n, args.k, args.noise, args.mode, RngStream(args.seed, (0,)))
    _emit(dump_json(instance_to_json(planted_to_file(inst))), args.out)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="colearn", description="Collaborative PAC learning toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run learners on an instance or a planted grid")
    p.add_argument("--algo", default="general", help="general, same-marginal, refutable, naive (comma list in grid mode)")
    p.add_argument("--instance")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--doubling", action="store_true")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--c", type=float, default=4.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--backend", default="auto", choices=["auto", "two", "wigderson", "exact"])
    p.add_argument("--force", action="store_true", help="allow mismatched marginals for same-marginal")
    p.add_argument("--class-kind", dest="class_kind")
    p.add_argument("--ns")
    p.add_argument("--ks")
    p.add_argument("--ds")
    p.add_argument("--mode", default="iid", choices=["iid", "shared", "refutable-exact"])
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--summary", action="store_true", help="print aggregates to stderr")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("erm", parents=[common], help="zero-error decision or error minimization")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--decide", action="store_true", default=True)
    g.add_argument("--minimize", action="store_true")
    p.set_defaults(func=cmd_erm)

    p = sub.add_parser("vcdim", parents=[common], help="VC dimension of a class or its augmentation")
    p.add_argument("--class", dest="cls", required=True, help="kind:d or a JSON descriptor")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--cap", type=int, default=16)
    p.set_defaults(func=cmd_vcdim)

    p = sub.add_parser("conflict-graph", parents=[common], help="conflict graph of an instance's datasets")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_conflict_graph)

    p = sub.add_parser("color", parents=[common], help="color a graph")
    p.add_argument("--graph")
    p.add_argument("--instance")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--backend", default="wigderson", choices=["two", "wigderson", "exact"])
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("reduce", parents=[common], help="hardness gadgets")
    p.add_argument("kind", choices=["coloring", "subsetsum", "sparsify"])
    p.add_argument("--graph")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--values")
    p.add_argument("--t", type=int)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("gen", parents=[common], help="write a planted instance")
    p.add_argument("--class", dest="cls", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--mode", default="iid", choices=["iid", "shared", "refutable-exact"])
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "reduce":
        if args.kind in ("coloring", "sparsify") and not args.graph:
            print("colearn: reduce coloring/sparsify needs --graph", file=sys.stderr)
            return EXIT_INVALID
        if args.kind == "subsetsum" and (args.values is None or args.t is None):
            print("colearn: reduce subsetsum needs --values and --t", file=sys.stderr)
            return EXIT_INVALID
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"colearn: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapacityError as exc:
        print(f"colearn: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ColearnError, OSError, ValueError) as exc:
        print(f"colearn: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
