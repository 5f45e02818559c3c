from fractions import Fraction
from math import exp, sqrt

import numpy as np
import pytest

from ocspstream.coarsening import Partition
from ocspstream.core import BTWN, MAS, OcspInstance, OrderingPredicate
from ocspstream.distributions import (
    DistributionParams,
    Sample,
    best_shifted_assignment,
    contiguous_tuple,
    identifier,
    permute_tuple,
    sample_no,
    sample_yes,
)
from ocspstream.errors import ArityMismatch, EmptyInstance, InvalidParameters, OutOfRange
from ocspstream.hypergraphs import Hypermatching
from ocspstream.permutations import Permutation, compose, ord_of

P = Permutation.parse
ID2 = Permutation.identity(2)


def test_contiguous_tuple_examples():
    assert contiguous_tuple(5, 3, 4) == (4, 0, 1)
    assert contiguous_tuple(5, 3, 0) == (0, 1, 2)
    assert ord_of((0, 1, 2)) == Permutation.identity(3)
    assert ord_of((4, 0, 1)) == P("[1 2 0]")
    with pytest.raises(OutOfRange):
        contiguous_tuple(5, 3, 5)


def test_permute_tuple_examples():
    out = permute_tuple((7, 8, 9), P("[1 2 0]"))
    assert out == (9, 7, 8)
    assert ord_of(out) == P("[1 2 0]") == compose(P("[1 2 0]"), ord_of((7, 8, 9)))
    assert permute_tuple((7, 8, 9), Permutation.identity(3)) == (7, 8, 9)
    assert permute_tuple(contiguous_tuple(5, 2, 0), P("[1 0]")) == (1, 0)
    with pytest.raises(ArityMismatch):
        permute_tuple((1, 2, 3), ID2)


def test_identifier_examples():
    assert identifier((3, 4), (0, 1), ID2, 5) == 3
    assert identifier((4, 0), (0, 1), ID2, 5) == 4
    assert identifier((0, 0), (0, 1), ID2, 5) is None
    assert identifier(Partition(5, (9 % 5, 1, 0)), (2, 1), P("[1 0]"), 5) is None


def test_params_validation():
    with pytest.raises(InvalidParameters):
        DistributionParams(4, 10, 2, Fraction(3, 5), 5, MAS)
    with pytest.raises(InvalidParameters):
        DistributionParams(4, 10, 2, Fraction(1, 4), 5, MAS, P("[1 0]"))
    with pytest.raises(InvalidParameters):
        DistributionParams(4, 10, 3, Fraction(1, 4), 5, MAS)


def _yes(q=4, n=40, alpha=Fraction(1, 4), T=20, pred=MAS, pi=ID2):
    return DistributionParams(q, n, pred.k, alpha, T, pred, pi)


def test_yes_constraints_all_have_identifiers():
    params = _yes(q=6, n=30, pred=BTWN, pi=P("[2 1 0]"), alpha=Fraction(1, 3), T=40)
    for seed in range(20):
        s = sample_yes(params, np.random.default_rng(seed))
        assert all(identifier(s.hidden_partition, j, s.pi, 6) is not None for j in s.instance.constraints)
        kept = [e for g, mask in zip(s.matchings, s.kept) for e, keep in zip(g.edges, mask) if keep]
        assert tuple(kept) == s.instance.constraints


def test_degenerate_q1_k1():
    one = OrderingPredicate.all_ones(1)
    params = DistributionParams(1, 5, 1, 1, 3, one, Permutation.identity(1))
    assert sample_yes(params, np.random.default_rng(0)).instance.m == 15
    assert sample_no(params, np.random.default_rng(0)).instance.m == 15


def test_yes_requires_pi_and_k_le_q():
    with pytest.raises(InvalidParameters):
        sample_yes(_yes(pi=None), np.random.default_rng(0))
    with pytest.raises(InvalidParameters):
        sample_yes(_yes(q=2, pred=BTWN, pi=Permutation.identity(3)), np.random.default_rng(0))


@pytest.mark.parametrize("sampler", [sample_yes, sample_no])
def test_expected_constraint_count(sampler):
    params = _yes(q=3, n=60, T=10)
    draws = 2000
    ms = np.array([sampler(params, np.random.default_rng(s)).instance.m for s in range(draws)])
    N, p = params.edges_per_matching * params.T, 1 / 9
    assert float(params.expected_m) == pytest.approx(N * p)
    assert abs(ms.mean() - N * p) <= 3 * sqrt(N * p * (1 - p) / draws)


def test_no_lower_tail():
    params = _yes(q=2, n=20, T=8)
    mean = float(params.expected_m)
    draws = 4000
    low = sum(sample_no(params, np.random.default_rng(s)).instance.m <= mean / 2 for s in range(draws))
    bound = exp(-mean / 8)
    assert low / draws <= bound + 3 * sqrt(bound * (1 - bound) / draws)


def test_no_edge_keep_frequency():
    params = _yes(q=2, n=40, T=50)
    s = sample_no(params, np.random.default_rng(11))
    flags = [x for mask in s.kept for x in mask]
    p = 1 / 4
    assert abs(np.mean(flags) - p) <= 3 * sqrt(p * (1 - p) / len(flags))


def test_same_seed_same_instance():
    params = _yes()
    a = sample_yes(params, np.random.default_rng(5)).instance.to_json()
    b = sample_yes(params, np.random.default_rng(5)).instance.to_json()
    assert a == b


def _fixed_sample(q, labels, edges, pi):
    inst = OcspInstance(len(labels), OrderingPredicate.from_permutations([pi]), tuple(edges))
    matching = Hypermatching(len(labels), pi.k, tuple(edges))
    return Sample(inst, Partition(q, labels), (matching,), ((True,) * len(edges),), pi)


def test_best_shift_examples():
    # identifiers 0..q-k: no shift needed
    s = _fixed_sample(4, (0, 1, 1, 2), [(0, 1), (2, 3)], ID2)
    assert best_shifted_assignment(s) == (0, 1)
    # k=2, q=2, both identifiers equal 1: labels (1, 0); shift by 1 fixes both
    s = _fixed_sample(2, (1, 0, 1, 0), [(0, 1), (2, 3)], ID2)
    assert best_shifted_assignment(s) == (1, 1)


def test_best_shift_bound_on_samples():
    for pred, pi, q in ((MAS, ID2, 4), (BTWN, P("[2 1 0]"), 6)):
        params = _yes(q=q, n=12 if pred.k == 3 else 10, pred=pred, pi=pi, alpha=Fraction(1, 4), T=30)
        for seed in range(30):
            s = sample_yes(params, np.random.default_rng(seed))
            if s.instance.m:
                assert best_shifted_assignment(s)[1] >= 1 - Fraction(pred.k - 1, q)


def test_best_shift_empty():
    s = _fixed_sample(3, (0, 1), [], ID2)
    with pytest.raises(EmptyInstance):
        best_shifted_assignment(s)
