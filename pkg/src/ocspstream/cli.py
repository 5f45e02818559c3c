"""Command-line entry point: ``ocsp <verb> ...``.

Exit status is 0 when the command ran and every invariant it checks held,
1 when an invariant failed, and 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .coarsening import coarse_predicate, width
from .core import OcspInstance, OrderingPredicate
from .distributions import DistributionParams, sample_no, sample_yes
from .errors import OcspError
from .experiments import EXPERIMENTS, ExperimentConfig, derive_defaults, make_algorithm, run_experiment
from .hypergraphs import Hypergraph, sphe_certify, sshe_certify
from .irmd import IrmdParams, estimate_advantage, run_reduction, sample_irmd
from .permutations import Permutation
from .solvers import random_ordering_baseline, solve_csp_exact, solve_ocsp_exact, subsample_and_solve

log = logging.getLogger("ocspstream")


def _predicate(text: str) -> OrderingPredicate:
    """A name (``MAS``, ``Btwn``), a JSON file, or inline predicate JSON."""
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        return OrderingPredicate.from_json(json.loads(path.read_text(encoding="utf-8")))
    if text.lstrip().startswith("{"):
        return OrderingPredicate.from_json(json.loads(text))
    return OrderingPredicate.named(text)


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _secret_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".secret.json")


def _pi(args, predicate: OrderingPredicate) -> Permutation | None:
    if args.pi:
        return Permutation.parse(args.pi)
    support = predicate.support()
    return support[0] if support else None


def _check_k(args, predicate: OrderingPredicate) -> int:
    if args.k is not None and args.k != predicate.k:
        raise OcspError(f"--k {args.k} does not match predicate arity {predicate.k}")
    return predicate.k


# -- verbs ------------------------------------------------------------------


def cmd_gen(args) -> int:
    predicate = _predicate(args.predicate)
    k = _check_k(args, predicate)
    pi = _pi(args, predicate) if args.dist == "yes" else None
    params = DistributionParams(args.q, args.n, k, Fraction(args.alpha), args.T, predicate, pi)
    rng = np.random.default_rng(args.seed)
    sample = sample_yes(params, rng) if args.dist == "yes" else sample_no(params, rng)
    _emit(sample.instance.to_json(), args.out)
    if args.dist == "yes" and args.out:
        secret = dict(sample.secret_json(), params=params.to_json(), seed=args.seed)
        _secret_path(args.out).write_text(json.dumps(secret, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def cmd_solve(args) -> int:
    instance = OcspInstance.load(args.instance)
    if args.coarse:
        if args.q is None:
            raise OcspError("--coarse needs --q")
        report = solve_csp_exact(instance, coarse_predicate(instance.predicate, args.q))
    else:
        report = solve_ocsp_exact(instance)
    _emit(report.to_json(), args.out)
    return 0


def cmd_coarsen(args) -> int:
    predicate = _predicate(args.predicate)
    f = coarse_predicate(predicate, args.q)
    out = {
        "predicate": f.to_json(),
        "rho": str(f.rho()),
        "width": str(width(f)),
        "width_bound": str(1 - Fraction(predicate.k - 1, args.q)),
    }
    if args.table:
        out["satisfied_base_q"] = list(f.satisfied_codes())
    _emit(out, args.out)
    return 0 if Fraction(out["width"]) >= Fraction(out["width_bound"]) else 1


def cmd_expand_check(args) -> int:
    G = Hypergraph.from_json(json.loads(Path(args.instance).read_text(encoding="utf-8")))
    gamma = Fraction(args.gamma)
    exact = False if args.sampled else None
    rng = np.random.default_rng(args.seed)
    if args.q is None:
        cert = sshe_certify(G, gamma, exact=exact, trials=args.trials, rng=rng)
    else:
        cert = sphe_certify(G, gamma, args.q, exact=exact, trials=args.trials, rng=rng)
    _emit({"gamma": str(cert.gamma), "delta_min": str(cert.delta), "mode": cert.mode}, args.out)
    return 0


def cmd_irmd_sim(args) -> int:
    predicate = _predicate(args.predicate)
    k = _check_k(args, predicate)
    pi = _pi(args, predicate)
    params = IrmdParams(args.q, k, args.n, Fraction(args.alpha), args.T)
    alg = make_algorithm(args.alg, predicate, args.q)
    rng = np.random.default_rng(args.seed)
    if args.case == "both":
        est = estimate_advantage(alg, params, pi, args.trials, rng)
        out = {
            "advantage": est.advantage,
            "interval": list(est.interval),
            "yes_rate": est.yes_rate,
            "no_rate": est.no_rate,
            "trials": est.trials,
            "max_state_bits": est.max_state_bits,
        }
    else:
        ones, peak = 0, 0
        for child in rng.spawn(args.trials):
            run = run_reduction(alg, sample_irmd(params, args.case, child), pi)
            ones += run.output
            peak = max(peak, run.max_state_bits)
        out = {"case": args.case, "rate": ones / args.trials, "trials": args.trials, "max_state_bits": peak}
    out.update(alg=args.alg, params=params.to_json())
    _emit(out, args.out)
    return 0


def cmd_experiment(args) -> int:
    predicate = _predicate(args.predicate)
    config = ExperimentConfig(
        name=args.name,
        predicate=predicate,
        q=args.q,
        n=args.n,
        alpha=Fraction(args.alpha),
        T=args.T,
        pi=Permutation.parse(args.pi) if args.pi else None,
        trials=args.trials,
        seed=args.seed,
        gamma=Fraction(args.gamma),
        qs=tuple(int(x) for x in args.qs.replace(",", " ").split()),
        alg=args.alg,
        out=args.out,
    )
    result, text = run_experiment(config, threads=args.threads)
    if not args.out:
        sys.stdout.write(text)
    return 0 if result.passed else 1


def cmd_defaults(args) -> int:
    predicate = _predicate(args.predicate) if args.predicate else None
    k = predicate.k if predicate is not None and args.k is None else (args.k or 2)
    d = derive_defaults(Fraction(args.epsilon), k, Fraction(args.alpha) if args.alpha else None, predicate, args.q)
    _emit(d.to_json(), args.out)
    return 0


def cmd_baseline(args) -> int:
    instance = OcspInstance.load(args.instance)
    est = random_ordering_baseline(instance, args.trials, np.random.default_rng(args.seed))
    _emit({"mean": est.mean, "stderr": est.stderr, "trials": est.trials, "rho": str(instance.predicate.rho())}, args.out)
    return 0


def cmd_subsample(args) -> int:
    instance = OcspInstance.load(args.instance)
    report = subsample_and_solve(instance.constraints, instance.predicate, args.s, np.random.default_rng(args.seed))
    _emit(
        {
            "estimate": str(report.estimate),
            "estimate_float": float(report.estimate),
            "mode": report.mode,
            "sampled": len(report.sample),
            "variables": len(report.variables),
        },
        args.out,
    )
    return 0


# -- parser -----------------------------------------------------------------


def _add_dist_args(p: argparse.ArgumentParser, *, alpha: str = "1/8", T: int = 40) -> None:
    p.add_argument("--predicate", default="MAS", help="MAS, Btwn, or predicate JSON (inline or file)")
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--k", type=int, default=None, help="arity; must match the predicate")
    p.add_argument("--alpha", default=alpha, help="fraction, e.g. 1/8")
    p.add_argument("--T", type=int, default=T, help="number of hypermatchings")
    p.add_argument("--pi", default=None, help='permutation in one-line notation, e.g. "1 0"')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ocsp", description="Ordering-CSP hard instances, exact solvers and streaming-game simulation.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", parents=[common], help="sample a YES or NO instance")
    p.add_argument("--dist", choices=["yes", "no"], required=True)
    _add_dist_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", parents=[common], help="exact optimum of an instance")
    p.add_argument("instance")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="optimum over orderings (default)")
    mode.add_argument("--coarse", action="store_true", help="optimum of the q-coarsened CSP")
    p.add_argument("--q", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("coarsen", parents=[common], help="coarsen a predicate and report its width")
    p.add_argument("--predicate", default="MAS")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--table", action="store_true", help="also list accepted base-q codes")
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("expand-check", parents=[common], help="certify SSHE (or SPHE with --q)")
    p.add_argument("instance", help="instance or hypergraph JSON")
    p.add_argument("--gamma", required=True)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--sampled", action="store_true", help="randomized lower-bound mode")
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_expand_check)

    p = sub.add_parser("irmd-sim", parents=[common], help="run a streaming algorithm through the game")
    p.add_argument("--case", choices=["yes", "no", "both"], default="both")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--alg", default="count-threshold", help="constant, count-threshold, degree-sketch, exact, or module:Class")
    _add_dist_args(p)
    p.set_defaults(func=cmd_irmd_sim)

    p = sub.add_parser("experiment", parents=[common], help="run a seeded experiment and write CSV")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    _add_dist_args(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--gamma", default="1/2")
    p.add_argument("--qs", default="2,4,8", help="alphabet sizes for no-trend, e.g. 2,4,8")
    p.add_argument("--alg", default="count-threshold")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("defaults", parents=[common], help="constants derived from epsilon")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--predicate", default=None)
    p.add_argument("--q", type=int, default=None, help="evaluate T0 at this q instead of q0")
    p.set_defaults(func=cmd_defaults)

    p = sub.add_parser("baseline", parents=[common], help="value of uniformly random orderings")
    p.add_argument("instance")
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("subsample", parents=[common], help="reservoir-sample constraints and solve")
    p.add_argument("instance")
    p.add_argument("--s", type=int, required=True)
    p.set_defaults(func=cmd_subsample)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OcspError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
