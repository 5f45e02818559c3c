from collections import Counter
from fractions import Fraction
from itertools import combinations
from math import comb, factorial

import numpy as np
import pytest
from scipy import stats

from ocspstream.coarsening import CoarsePredicate, coarse_predicate, csp_value
from ocspstream.core import BTWN, MAS, OcspInstance, OrderingPredicate, value
from ocspstream.distributions import DistributionParams, sample_no
from ocspstream.errors import EmptyInstance, EmptyStream, OcspError, TooLarge
from ocspstream.solvers import (
    random_ordering_baseline,
    reservoir_sample,
    solve_csp_exact,
    solve_ocsp_exact,
    solve_ocsp_heuristic,
    subsample_and_solve,
)

from oracles import csp_opt_ref, ocsp_opt_ref

CYCLE = OcspInstance(3, MAS, ((0, 1), (1, 2), (2, 0)))
TOURNAMENT = OcspInstance(3, MAS, ((0, 1), (1, 2), (0, 2)))
BTWN_PAIR = OcspInstance(3, BTWN, ((0, 1, 2), (1, 0, 2)))
PATH = OcspInstance(3, MAS, ((0, 1), (1, 2)))


def test_ocsp_exact_examples():
    assert solve_ocsp_exact(CYCLE).optimum == Fraction(2, 3)
    assert solve_ocsp_exact(TOURNAMENT).optimum == 1
    assert solve_ocsp_exact(BTWN_PAIR).optimum == Fraction(1, 2)


def test_ocsp_exact_witness_is_lexicographically_first():
    report = solve_ocsp_exact(CYCLE)
    assert report.mode == "exact" and report.explored == 6
    assert value(CYCLE, report.witness) == report.optimum
    # [0 1 2] satisfies (0,1),(1,2) and is the smallest ordering at all
    assert report.witness.image == (0, 1, 2)


def test_ocsp_exact_guards():
    with pytest.raises(EmptyInstance):
        solve_ocsp_exact(OcspInstance(3, MAS, ()))
    with pytest.raises(TooLarge):
        solve_ocsp_exact(OcspInstance(11, MAS, ((0, 1),)))


@pytest.mark.parametrize("seed", range(15))
def test_ocsp_exact_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 5))
    n = int(rng.integers(k, 7))
    ranks = frozenset(int(r) for r in rng.choice(factorial(k), size=int(rng.integers(1, factorial(k))), replace=False))
    cons = tuple(tuple(int(v) for v in rng.choice(n, k, replace=False)) for _ in range(int(rng.integers(1, 8))))
    inst = OcspInstance(n, OrderingPredicate(k, ranks), cons)
    assert solve_ocsp_exact(inst).optimum == ocsp_opt_ref(n, k, ranks, cons)


def test_csp_exact_examples():
    assert solve_csp_exact(CYCLE, coarse_predicate(MAS, 2)).optimum == Fraction(1, 3)
    assert solve_csp_exact(CYCLE, CoarsePredicate.constant(2, 2, True)).optimum == 1
    report = solve_csp_exact(PATH, coarse_predicate(MAS, 3))
    assert report.optimum == 1 and report.witness.b == (0, 1, 2)
    assert csp_value(PATH, coarse_predicate(MAS, 3), report.witness) == 1


def test_csp_exact_guards():
    with pytest.raises(TooLarge):
        solve_csp_exact(OcspInstance(12, MAS, ((0, 1),)), coarse_predicate(MAS, 4))
    with pytest.raises(EmptyInstance):
        solve_csp_exact(OcspInstance(3, MAS, ()), coarse_predicate(MAS, 2))


@pytest.mark.parametrize("seed", range(10))
def test_csp_exact_matches_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    n, q = int(rng.integers(3, 6)), int(rng.integers(2, 4))
    cons = tuple(tuple(int(v) for v in rng.choice(n, 3, replace=False)) for _ in range(5))
    inst = OcspInstance(n, BTWN, cons)
    assert solve_csp_exact(inst, coarse_predicate(BTWN, q)).optimum == csp_opt_ref(n, 3, BTWN.satisfied, q, cons)


def test_value_at_least_rho_and_monotone():
    rng = np.random.default_rng(7)
    for _ in range(20):
        cons = tuple(tuple(int(v) for v in rng.choice(6, 2, replace=False)) for _ in range(6))
        inst = OcspInstance(6, MAS, cons)
        opt = solve_ocsp_exact(inst).optimum
        assert opt >= MAS.rho()
        for q in (2, 3):
            assert opt >= solve_csp_exact(inst, coarse_predicate(MAS, q)).optimum


@pytest.mark.parametrize("pred, rho", [(MAS, 0.5), (BTWN, 1 / 3)])
def test_random_baseline(pred, rho):
    rng = np.random.default_rng(3)
    cons = tuple(tuple(int(v) for v in rng.choice(8, pred.k, replace=False)) for _ in range(12))
    est = random_ordering_baseline(OcspInstance(8, pred, cons), 10_000, rng)
    assert abs(est.mean - rho) <= 3 * est.stderr


def test_random_baseline_single_constraint():
    est = random_ordering_baseline(OcspInstance(3, BTWN, ((2, 0, 1),)), 10_000, np.random.default_rng(0))
    assert abs(est.mean - 1 / 3) <= 3 * est.stderr


def test_reservoir_uniform_subsets():
    rng = np.random.default_rng(4)
    m, s, draws = 6, 3, 20_000
    counts = Counter(frozenset(reservoir_sample(range(m), s, rng)) for _ in range(draws))
    assert len(counts) == comb(m, s)
    observed = [counts[frozenset(c)] for c in combinations(range(m), s)]
    assert stats.chisquare(observed).pvalue > 1e-3


def test_reservoir_short_stream():
    assert sorted(reservoir_sample(iter([1, 2]), 5, np.random.default_rng(0))) == [1, 2]
    with pytest.raises(OcspError):
        reservoir_sample([1], 0, np.random.default_rng(0))


def test_subsample_examples():
    rng = np.random.default_rng(0)
    assert subsample_and_solve(CYCLE.constraints, MAS, 1, rng).estimate == 1
    full = subsample_and_solve(CYCLE.constraints, MAS, 10, rng)
    assert full.estimate == solve_ocsp_exact(CYCLE).optimum and full.mode == "exact"
    with pytest.raises(EmptyStream):
        subsample_and_solve([], MAS, 3, rng)


def test_subsample_heuristic_flag():
    rng = np.random.default_rng(1)
    cons = [(2 * i, 2 * i + 1) for i in range(8)]
    report = subsample_and_solve(cons, MAS, 8, rng)
    # 16 touched variables: beyond exact range, so only a lower bound is claimed
    assert report.mode == "heuristic" and 0 < report.estimate <= 1


def test_heuristic_is_lower_bound():
    rng = np.random.default_rng(2)
    cons = tuple(tuple(int(v) for v in rng.choice(7, 2, replace=False)) for _ in range(15))
    inst = OcspInstance(7, MAS, cons)
    h = solve_ocsp_heuristic(inst, rng)
    assert h.mode == "heuristic" and h.optimum <= solve_ocsp_exact(inst).optimum


@pytest.mark.slow
def test_subsample_close_to_exact_on_no_instances():
    # s = 6n sampled constraints; band calibrated against the exact solver
    params = DistributionParams(4, 10, 2, Fraction(1, 4), 1000, MAS)
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        inst = sample_no(params, rng).instance
        est = subsample_and_solve(inst.constraints, MAS, 60, rng).estimate
        worst = max(worst, abs(float(est - solve_ocsp_exact(inst).optimum)))
    assert worst <= 0.2
