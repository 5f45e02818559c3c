"""Seeded experiments that check the per-instance facts behind the hardness argument.

Every experiment takes an ``ExperimentConfig`` and returns an
``ExperimentResult`` whose CSV rendering is a pure function of the config:
trial ``i`` always draws from the ``i``-th child of ``SeedSequence(seed)`` and
rows are emitted in trial order whatever the thread count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np
import scipy
from scipy import stats

from ._version import __version__
from .coarsening import coarse_predicate
from .core import MAS, OrderingPredicate
from .distributions import DistributionParams, best_shifted_assignment, sample_no, sample_yes
from .errors import InvalidEpsilon, InvalidParameters, TooLarge
from .hypergraphs import constraint_hypergraph, sphe_certify, sshe_certify
from .irmd import IrmdParams, emission_table, estimate_advantage, fingerprint_test, load_algorithm
from .permutations import Permutation
from .solvers import CSP_EXACT_LIMIT, OCSP_EXACT_MAX_N, solve_csp_exact, solve_ocsp_exact

CHI2_REJECT_LEVEL = 1e-3
TREND_BAND_WIDTH = Fraction(1, 4)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    predicate: OrderingPredicate = MAS
    q: int = 4
    n: int = 10
    alpha: Fraction = Fraction(1, 8)
    T: int = 40
    pi: Permutation | None = None
    trials: int = 100
    seed: int = 0
    gamma: Fraction = Fraction(1, 2)
    qs: tuple[int, ...] = (2, 4, 8)
    alg: str = "count-threshold"
    out: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(self, "qs", tuple(int(q) for q in self.qs))
        if self.pi is None:
            support = self.predicate.support()
            if support:
                object.__setattr__(self, "pi", support[0])
        if self.trials < 1:
            raise InvalidParameters("trials must be >= 1")

    @property
    def k(self) -> int:
        return self.predicate.k

    def distribution(self, q: int | None = None, T: int | None = None) -> DistributionParams:
        return DistributionParams(
            q or self.q, self.n, self.k, self.alpha, T or self.T, self.predicate, self.pi
        )

    def to_json(self) -> dict[str, Any]:
        # `out` is where the bytes go, not what they are
        return {
            "name": self.name,
            "predicate": self.predicate.to_json(),
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "alpha": str(self.alpha),
            "T": self.T,
            "pi": list(self.pi.image) if self.pi is not None else None,
            "trials": self.trials,
            "seed": self.seed,
            "gamma": str(self.gamma),
            "qs": list(self.qs),
            "alg": self.alg,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[list[Any]]
    summary: dict[str, Any]
    passed: bool

    def to_csv(self, config: ExperimentConfig) -> str:
        buf = io.StringIO()
        buf.write(f"# experiment: {self.name}\n")
        buf.write(f"# config: {json.dumps(config.to_json(), sort_keys=True)}\n")
        buf.write(f"# config_sha256: {config.digest()}\n")
        buf.write(
            f"# versions: ocspstream={__version__} numpy={np.__version__} "
            f"scipy={scipy.__version__} python={platform.python_version()}\n"
        )
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows([_cell(x) for x in row] for row in self.rows)
        buf.write(f"# summary: {json.dumps(self.summary, sort_keys=True, default=str)}\n")
        buf.write(f"# passed: {str(self.passed).lower()}\n")
        return buf.getvalue()


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def run_trials(fn: Callable[[int, np.random.Generator], Any], seed: int, trials: int, threads: int = 1) -> list:
    """``[fn(i, rng_i) for i in range(trials)]``, optionally across threads, in order."""
    rngs = trial_rngs(seed, trials)
    if threads <= 1:
        return [fn(i, r) for i, r in enumerate(rngs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials), rngs))


def _mean(xs: Sequence[float]) -> float | None:
    return float(np.mean(xs)) if len(xs) else None


# -- value gap --------------------------------------------------------------


def yes_value_bound(k: int, q: int) -> Fraction:
    return 1 - Fraction(k - 1, q)


def exp_value_gap(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Exact YES and NO values; every YES instance must reach ``1 - (k-1)/q``."""
    if config.n > OCSP_EXACT_MAX_N:
        raise TooLarge(f"value-gap needs n <= {OCSP_EXACT_MAX_N} for the exact solver")
    params = config.distribution()
    bound = yes_value_bound(config.k, config.q)

    def trial(i: int, rng: np.random.Generator) -> list[list[Any]]:
        rng_yes, rng_no = rng.spawn(2)
        rows = []
        yes = sample_yes(params, rng_yes)
        if yes.instance.m:
            _, shifted = best_shifted_assignment(yes)
            val = solve_ocsp_exact(yes.instance).optimum
            rows.append([i, "yes", yes.instance.m, float(val), float(shifted), shifted >= bound and val >= shifted])
        else:
            rows.append([i, "yes", 0, None, None, None])
        no = sample_no(params, rng_no)
        if no.instance.m:
            rows.append([i, "no", no.instance.m, float(solve_ocsp_exact(no.instance).optimum), None, None])
        else:
            rows.append([i, "no", 0, None, None, None])
        return rows

    rows = [r for block in run_trials(trial, config.seed, config.trials, threads) for r in block]
    yes_vals = [r[3] for r in rows if r[1] == "yes" and r[2]]
    no_vals = [r[3] for r in rows if r[1] == "no" and r[2]]
    checks = [r[5] for r in rows if r[5] is not None]
    summary = {
        "bound": str(bound),
        "yes_mean": _mean(yes_vals),
        "no_mean": _mean(no_vals),
        "yes_trials": len(yes_vals),
        "no_trials": len(no_vals),
        "bound_failures": checks.count(False),
    }
    return ExperimentResult(
        "value-gap", ["trial", "case", "m", "value", "shifted_value", "bound_ok"], rows, summary, all(checks)
    )


# -- expansion --------------------------------------------------------------


def exp_expansion(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Exact SSHE / SPHE certificates of NO instances and the relations between them.

    Also compares the ordering value with the coarsened value when both exact
    solvers are in range.  An instance without constraints is recorded with
    both ``delta`` equal to 0.
    """
    params = config.distribution()
    gamma, q = config.gamma, config.q
    factor = 2 / gamma + 1
    f = coarse_predicate(config.predicate, q)
    compare_values = config.n <= OCSP_EXACT_MAX_N and q**config.n <= CSP_EXACT_LIMIT

    def trial(i: int, rng: np.random.Generator) -> list[Any]:
        instance = sample_no(params, rng).instance
        if instance.m == 0:
            return [i, 0, "0", "0", True, None, None, None]
        G = constraint_hypergraph(instance)
        d_ssh = sshe_certify(G, gamma, exact=True).delta
        d_sph = sphe_certify(G, gamma, q, exact=True).delta
        row = [i, instance.m, str(d_ssh), str(d_sph), d_sph <= d_ssh * factor]
        if compare_values:
            val = solve_ocsp_exact(instance).optimum
            coarse = solve_csp_exact(instance, f).optimum
            row += [str(val), str(coarse), val <= coarse + d_sph and val >= coarse]
        else:
            row += [None, None, None]
        return row

    rows = run_trials(trial, config.seed, config.trials, threads)
    relation = [r[4] for r in rows]
    gap = [r[7] for r in rows if r[7] is not None]
    summary = {
        "relation_failures": relation.count(False),
        "gap_failures": gap.count(False),
        "gap_checked": len(gap),
        "max_delta_sshe": str(max(Fraction(r[2]) for r in rows)),
        "max_delta_sphe": str(max(Fraction(r[3]) for r in rows)),
    }
    columns = ["trial", "m", "delta_sshe", "delta_sphe", "relation_ok", "value", "coarse_value", "gap_ok"]
    return ExperimentResult("expansion", columns, rows, summary, all(relation) and all(gap))


# -- reduction equivalence --------------------------------------------------


def exp_reduction_equivalence(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Exhaustive emission probabilities for every ``k <= q' <= q`` and pi in the
    support, then reduction-vs-direct fingerprint tests at the config parameters
    (``trials`` games per side and case)."""
    if config.k > 3 or config.q > 5:
        raise TooLarge("exhaustive mask enumeration is limited to k <= 3, q <= 5")
    rows: list[list[Any]] = []
    ok = True
    for q in range(config.k, config.q + 1):
        for pi in config.predicate.support():
            problems = emission_table(q, config.k, pi).check()
            ok &= not problems
            rows.append(["exhaustive", q, str(pi), "", len(problems), not problems])
    params = IrmdParams(config.q, config.k, config.n, config.alpha, config.T)
    rng_yes, rng_no = np.random.default_rng(np.random.SeedSequence(config.seed)).spawn(2)
    for case, rng in (("yes", rng_yes), ("no", rng_no)):
        test = fingerprint_test(params, config.predicate, config.pi, case, config.trials, rng)
        passed = test.p_value > CHI2_REJECT_LEVEL
        ok &= passed
        rows.append(["chi-square", config.q, str(config.pi), case, repr(test.p_value), passed])
    summary = {"checks": len(rows), "failures": sum(not r[5] for r in rows)}
    return ExperimentResult("reduction-equivalence", ["check", "q", "pi", "case", "statistic", "passed"], rows, summary, ok)


# -- NO-value trend ---------------------------------------------------------


def scaled_T(q: int, k: int, ref_q: int, ref_T: int) -> int:
    """Matchings for alphabet ``q``, keeping ``T / (q^k ln q)`` fixed at its value for ``ref_q``."""
    if q < 2 or ref_q < 2:
        raise InvalidParameters("T scaling needs q >= 2")
    return math.ceil(ref_T * q**k * math.log(q) / (ref_q**k * math.log(ref_q)))


def exp_no_trend(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Mean exact NO value as ``q`` grows with ``T`` scaled like the coarse-value term of ``T0``.

    ``config.T`` is the number of matchings at the largest ``q``.  Passes when
    the means strictly decrease and the last lies in ``[rho, rho + 1/4]``.
    """
    if config.n > OCSP_EXACT_MAX_N:
        raise TooLarge(f"trend needs n <= {OCSP_EXACT_MAX_N} for the exact solver")
    qs = sorted(config.qs)
    rows = []
    for q in qs:
        T = scaled_T(q, config.k, qs[-1], config.T)
        params = DistributionParams(q, config.n, config.k, config.alpha, T, config.predicate)

        def trial(i: int, rng: np.random.Generator) -> float | None:
            inst = sample_no(params, rng).instance
            return float(solve_ocsp_exact(inst).optimum) if inst.m else None

        vals = [v for v in run_trials(trial, config.seed + q, config.trials, threads) if v is not None]
        stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else None
        rows.append([q, T, len(vals), _mean(vals), stderr])
    means = [r[3] for r in rows]
    rho = float(config.predicate.rho())
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    in_band = means[-1] is not None and rho <= means[-1] <= rho + float(TREND_BAND_WIDTH)
    summary = {"decreasing": decreasing, "last_in_band": in_band, "band": [rho, rho + float(TREND_BAND_WIDTH)]}
    return ExperimentResult("no-trend", ["q", "T", "trials", "mean_value", "stderr"], rows, summary, decreasing and in_band)


# -- constraint counts ------------------------------------------------------


def exp_constraint_count(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Mean and variance of ``m`` against ``Binomial(floor(alpha n) T, q^-k)`` within 3 sigma."""
    params = config.distribution()
    N = params.edges_per_matching * params.T
    p = 1 / config.q**config.k
    mu, var, _, kurt = (float(x) for x in stats.binom.stats(N, p, moments="mvsk"))
    n = config.trials
    se_mean = math.sqrt(var / n)
    # standard error of the unbiased sample variance
    mu4 = (kurt + 3) * var**2
    se_var = math.sqrt(max(mu4 - var**2 * (n - 3) / (n - 1), 0.0) / n)
    rows, ok = [], True
    for case, sampler in (("yes", sample_yes), ("no", sample_no)):
        counts = np.array(run_trials(lambda i, r: sampler(params, r).instance.m, config.seed, n, threads))
        mean, s2 = float(counts.mean()), float(counts.var(ddof=1))
        z_mean, z_var = (mean - mu) / se_mean, (s2 - var) / se_var
        passed = abs(z_mean) <= 3 and abs(z_var) <= 3
        ok &= passed
        rows.append([case, n, mean, mu, z_mean, s2, var, z_var, passed])
    columns = ["case", "samples", "mean", "binomial_mean", "z_mean", "variance", "binomial_variance", "z_variance", "passed"]
    return ExperimentResult("constraint-count", columns, rows, {"edges": N, "keep_probability": p}, ok)


# -- distinguishing advantage -----------------------------------------------


def exact_tracker_threshold(predicate: OrderingPredicate, q: int) -> Fraction:
    """Midpoint between the YES bound ``1 - (k-1)/q`` and ``rho``."""
    return (yes_value_bound(predicate.k, q) + predicate.rho()) / 2


def make_algorithm(name: str, predicate: OrderingPredicate, q: int):
    if name == "exact":
        return load_algorithm("exact", predicate=predicate, threshold=exact_tracker_threshold(predicate, q))
    return load_algorithm(name)


def exp_advantage(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Distinguishing advantage of ``config.alg`` run through the reduction."""
    params = IrmdParams(config.q, config.k, config.n, config.alpha, config.T)
    alg = make_algorithm(config.alg, config.predicate, config.q)
    est = estimate_advantage(alg, params, config.pi, max(config.trials, 2), np.random.default_rng(config.seed))
    row = [config.alg, est.trials, est.yes_rate, est.no_rate, est.advantage, est.interval[0], est.interval[1], est.max_state_bits]
    columns = ["alg", "trials", "yes_rate", "no_rate", "advantage", "ci_low", "ci_high", "max_state_bits"]
    return ExperimentResult("advantage", columns, [row], {"advantage": est.advantage}, True)


EXPERIMENTS: dict[str, Callable[..., ExperimentResult]] = {
    "value-gap": exp_value_gap,
    "expansion": exp_expansion,
    "reduction-equivalence": exp_reduction_equivalence,
    "no-trend": exp_no_trend,
    "constraint-count": exp_constraint_count,
    "advantage": exp_advantage,
}


def run_experiment(config: ExperimentConfig, threads: int = 1) -> tuple[ExperimentResult, str]:
    if config.name not in EXPERIMENTS:
        raise InvalidParameters(f"unknown experiment {config.name!r}; choose from {sorted(EXPERIMENTS)}")
    result = EXPERIMENTS[config.name](config, threads)
    text = result.to_csv(config)
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return result, text


# -- default constants ------------------------------------------------------


@dataclass(frozen=True)
class DefaultParams:
    epsilon: Fraction
    k: int
    rho: Fraction
    q0: int
    alpha0: Fraction
    alpha: Fraction
    gamma: Fraction
    eta: Fraction
    delta: Fraction
    delta_prime: Fraction
    T0: int

    def to_json(self) -> dict[str, Any]:
        out = {}
        for name in ("epsilon", "rho", "alpha0", "alpha", "gamma", "eta", "delta", "delta_prime"):
            out[name] = str(getattr(self, name))
        out.update(k=self.k, q0=self.q0, T0=self.T0)
        return out


def derive_defaults(
    epsilon: Fraction | float | str,
    k: int,
    alpha: Fraction | float | str | None = None,
    predicate: OrderingPredicate | None = None,
    q: int | None = None,
) -> DefaultParams:
    """Constants for accuracy ``epsilon``: alphabet size, set-size ratio, and
    the number of matchings ``T0`` (evaluated at ``q``, default ``q0``)."""
    eps = Fraction(epsilon).limit_denominator(10**9) if isinstance(epsilon, float) else Fraction(epsilon)
    if not 0 < eps < 1:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
    if k < 2:
        raise InvalidParameters("k must be >= 2")
    alpha0 = Fraction(1, 2 * k)
    alpha = alpha0 if alpha is None else Fraction(alpha)
    if not 0 < alpha <= alpha0:
        raise InvalidParameters(f"alpha must lie in (0, 1/(2k)] = (0, {alpha0}], got {alpha}")
    if predicate is None:
        if k != 2:
            raise InvalidParameters("pass a predicate when k != 2")
        predicate = MAS
    if predicate.k != k:
        raise InvalidParameters(f"predicate arity {predicate.k} != k={k}")
    rho = predicate.rho()
    q0 = math.ceil(192 * k * k / eps)
    gamma = eps / (96 * k * k)
    eta = eps / 4
    q = q0 if q is None else q
    t_expansion = 4 * math.log(2) * q**k / (float(gamma) ** 2 * float(alpha))
    t_value = 8 * float(rho + eta) * q**k * math.log(q) / (float(eta) ** 2 * float(alpha))
    return DefaultParams(
        epsilon=eps,
        k=k,
        rho=rho,
        q0=q0,
        alpha0=alpha0,
        alpha=alpha,
        gamma=gamma,
        eta=eta,
        delta=8 * k * k * gamma**2,
        delta_prime=24 * k * k * gamma,
        T0=math.ceil(max(t_expansion, t_value)),
    )
