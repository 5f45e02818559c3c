from collections import Counter
from fractions import Fraction
from itertools import combinations
from math import exp, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocspstream.coarsening import Partition
from ocspstream.errors import DuplicateEntries, EmptyInstance, ExactModeTooLarge, LengthMismatch, OcspError, TooManyEdges
from ocspstream.hypergraphs import (
    Hypergraph,
    Hypermatching,
    congregating_count,
    lying_count,
    restricted_growth_strings,
    sample_hypermatching,
    sphe_certify,
    sshe_certify,
)

from oracles import sphe_ref, sshe_ref

MATCHING = Hypergraph(4, 2, ((0, 1), (2, 3)))


def test_validation():
    with pytest.raises(DuplicateEntries):
        Hypergraph(3, 2, ((1, 1),))
    with pytest.raises(OcspError):
        Hypermatching(4, 2, ((0, 1), (1, 2)))
    with pytest.raises(TooManyEdges):
        sample_hypermatching(5, 2, 3, np.random.default_rng(0))


def test_json_round_trip():
    G = Hypergraph(5, 3, ((0, 1, 2), (4, 3, 0)))
    assert Hypergraph.from_json(G.to_json()) == G
    inst_json = {"n": 5, "k": 3, "predicate": {"named": "Btwn"}, "constraints": [[0, 1, 2]]}
    assert Hypergraph.from_json(inst_json).edges == ((0, 1, 2),)


def test_sampler_perfect_matching_uniform():
    rng = np.random.default_rng(1)
    draws = 100_000
    counts = Counter(frozenset(sample_hypermatching(4, 2, 2, rng).edges) for _ in range(draws))
    assert len(counts) == 12
    p = 1 / 12
    sigma = sqrt(draws * p * (1 - p))
    assert all(abs(c - draws * p) <= 3 * sigma for c in counts.values())


def test_sampler_single_triple_and_empty():
    rng = np.random.default_rng(2)
    seen = Counter(sample_hypermatching(3, 3, 1, rng).edges[0] for _ in range(6000))
    assert len(seen) == 6 and all(800 < c < 1200 for c in seen.values())
    assert sample_hypermatching(7, 2, 0, rng).m == 0


def test_lying_count_examples():
    assert lying_count(MATCHING, {0, 1}) == 1
    assert lying_count(MATCHING, {2}) == 0
    assert lying_count(Hypergraph(3, 3, ((0, 1, 2),)), {0, 2}) == 1


def test_congregating_count_examples():
    assert congregating_count(Hypergraph(2, 2, ((0, 1),)), Partition(1, (0, 0))) == 1
    assert congregating_count(Hypergraph(2, 2, ((0, 1),)), Partition(2, (0, 1))) == 0
    assert congregating_count(Hypergraph(3, 3, ((0, 1, 2),)), Partition(2, (0, 1, 0))) == 1
    with pytest.raises(LengthMismatch):
        congregating_count(MATCHING, (0, 1))


@settings(max_examples=40)
@given(st.sets(st.integers(0, 7)), st.sets(st.integers(0, 7)))
def test_lying_monotone(S, extra):
    G = sample_hypermatching(8, 2, 4, np.random.default_rng(len(S)))
    assert lying_count(G, S) <= lying_count(G, S | extra)


def test_congregating_zero_for_bijection():
    G = Hypergraph(5, 2, tuple(combinations(range(5), 2)))
    assert congregating_count(G, Partition(7, (6, 0, 3, 1, 2))) == 0


def test_sshe_examples():
    perfect = Hypergraph(6, 2, ((0, 1), (2, 3), (4, 5)))
    assert sshe_certify(perfect, Fraction(1, 3)).delta == Fraction(1, 3)
    assert sshe_certify(perfect, Fraction(1, 6)).delta == 0
    k4 = Hypergraph(4, 2, tuple((u, v) for u in range(4) for v in range(4) if u != v))
    assert sshe_certify(k4, Fraction(1, 2)).delta == Fraction(2, 12)


def test_sphe_examples():
    single = Hypergraph(2, 2, ((0, 1),))
    assert sphe_certify(single, 1, 2).delta == 1
    assert sphe_certify(single, Fraction(1, 2), 2).delta == 0
    assert sphe_certify(MATCHING, Fraction(1, 2), 2).delta == 1


def test_certify_errors_and_modes():
    with pytest.raises(EmptyInstance):
        sshe_certify(Hypergraph(3, 2, ()), Fraction(1, 2))
    with pytest.raises(EmptyInstance):
        sphe_certify(Hypergraph(3, 2, ()), Fraction(1, 2), 2)
    big = Hypergraph(30, 2, ((0, 1),))
    with pytest.raises(ExactModeTooLarge):
        sshe_certify(big, Fraction(1, 2), exact=True)
    cert = sshe_certify(big, Fraction(1, 2), rng=np.random.default_rng(0), trials=200)
    assert cert.mode == "lower-bound" and cert.trials == 200
    assert cert.to_json()["mode"] == "lower-bound"
    assert sphe_certify(big, Fraction(1, 2), 3, rng=np.random.default_rng(0), trials=50).mode == "lower-bound"


def test_bell_numbers():
    assert restricted_growth_strings(4, 4, 4).shape[0] == 15
    assert restricted_growth_strings(10, 10, 10).shape[0] == 115975


def _random_graph(rng, n, k, m):
    return Hypergraph(n, k, tuple(tuple(int(v) for v in rng.choice(n, k, replace=False)) for _ in range(m)))


@pytest.mark.parametrize("seed", range(12))
def test_certify_matches_reference(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(4, 8)), int(rng.integers(2, 4))
    G = _random_graph(rng, n, k, int(rng.integers(1, 7)))
    gamma = Fraction(int(rng.integers(2, n + 1)), n)
    q = int(rng.integers(2, 4))
    assert sshe_certify(G, gamma).delta == sshe_ref(n, G.edges, gamma)
    assert sphe_certify(G, gamma, q).delta == sphe_ref(n, G.edges, gamma, q)


def test_random_matchings_barely_lie():
    n, k, alpha, gamma = 60, 2, Fraction(1, 4), Fraction(1, 3)
    S = set(range(int(gamma * n)))
    threshold = 8 * k * k * gamma**2 * alpha * n
    rng = np.random.default_rng(3)
    draws = 1000
    hits = sum(lying_count(sample_hypermatching(n, k, int(alpha * n), rng), S) >= threshold for _ in range(draws))
    bound = exp(-float(gamma**2 * alpha) * n)
    assert hits / draws <= bound + 3 * sqrt(bound * (1 - bound) / draws)
