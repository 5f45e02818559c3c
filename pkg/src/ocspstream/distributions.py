"""YES / NO instance distributions built from planted q-partitions.

Both distributions draw a uniform ``b in [q]^n`` and ``T`` independent
hypermatchings with ``floor(alpha n)`` edges.  The NO side keeps every edge
with probability ``q^-k``.  The YES side only considers edges whose labels
``b|_e`` form a permuted contiguous tuple ``(v^(l))_pi`` and keeps those with
probability ``1/q``.  Constraints are emitted matching by matching, in sampled
edge order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from math import floor
from typing import Sequence

import numpy as np

from .coarsening import Partition, coarse_predicate, csp_value
from .core import OcspInstance, OrderingPredicate
from .errors import ArityMismatch, EmptyInstance, InvalidParameters, OutOfRange
from .hypergraphs import Hypermatching, sample_hypermatching
from .permutations import Permutation, invert


def contiguous_tuple(q: int, k: int, ell: int) -> tuple[int, ...]:
    if not 0 <= ell < q:
        raise OutOfRange(f"shift {ell} outside [0, {q})")
    if k > q:
        raise OutOfRange(f"k={k} > q={q}: contiguous entries would repeat")
    return tuple((ell + i) % q for i in range(k))


def permute_tuple(a: Sequence[int], pi: Permutation) -> tuple[int, ...]:
    """``a_pi`` with ``a_pi[i] = a[pi^{-1}(i)]``.

    Sorting commutes with the relabelling: ``ord(a_pi) == compose(pi, ord(a))``,
    i.e. apply ``ord(a)`` first, then ``pi``.
    """
    if len(a) != pi.k:
        raise ArityMismatch(f"tuple of length {len(a)} with permutation of arity {pi.k}")
    inv = invert(pi)
    return tuple(a[inv(i)] for i in range(pi.k))


@lru_cache(maxsize=256)
def _patterns(q: int, pi: Permutation) -> dict[tuple[int, ...], int]:
    return {permute_tuple(contiguous_tuple(q, pi.k, ell), pi): ell for ell in range(q)}


def identifier(b: Partition | Sequence[int], j: Sequence[int], pi: Permutation, q: int) -> int | None:
    """The shift ``l`` with ``b|_j == (v^(l))_pi``, or ``None``.

    The shift is unique: position ``pi(0)`` of ``(v^(l))_pi`` carries ``l``.
    """
    labels = b.b if isinstance(b, Partition) else b
    if pi.k > q:
        return None
    return _patterns(q, pi).get(tuple(labels[x] for x in j))


@dataclass(frozen=True)
class DistributionParams:
    q: int
    n: int
    k: int
    alpha: Fraction
    T: int
    predicate: OrderingPredicate
    pi: Permutation | None = None

    def __post_init__(self) -> None:
        alpha = Fraction(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if self.k != self.predicate.k:
            raise InvalidParameters(f"k={self.k} but predicate arity {self.predicate.k}")
        if not 0 < alpha <= Fraction(1, self.k):
            raise InvalidParameters(f"alpha must lie in (0, 1/k], got {alpha}")
        if self.q < 1 or self.T < 1 or self.n < 1:
            raise InvalidParameters("q, n and T must be >= 1")
        if self.pi is not None and not self.predicate(self.pi):
            raise InvalidParameters(f"pi={self.pi} is not in the support of the predicate")

    @property
    def edges_per_matching(self) -> int:
        return floor(self.alpha * self.n)

    @property
    def keep_probability_no(self) -> Fraction:
        return Fraction(1, self.q**self.k)

    @property
    def expected_m(self) -> Fraction:
        return self.edges_per_matching * self.T * self.keep_probability_no

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "alpha": str(self.alpha),
            "T": self.T,
            "predicate": self.predicate.to_json(),
            "pi": list(self.pi.image) if self.pi is not None else None,
        }


@dataclass(frozen=True)
class Sample:
    """An instance plus the hidden data that produced it."""

    instance: OcspInstance
    hidden_partition: Partition
    matchings: tuple[Hypermatching, ...]
    kept: tuple[tuple[bool, ...], ...]
    pi: Permutation | None = field(default=None)

    def secret_json(self) -> dict:
        return {
            "hidden_partition": list(self.hidden_partition.b),
            "q": self.hidden_partition.q,
            "pi": list(self.pi.image) if self.pi is not None else None,
            "matchings": [[list(e) for e in g.edges] for g in self.matchings],
            "kept": [list(mask) for mask in self.kept],
        }


YesSample = Sample


def _matchings(params: DistributionParams, rng: np.random.Generator) -> tuple[Partition, list]:
    b = Partition(params.q, tuple(int(x) for x in rng.integers(0, params.q, size=params.n)))
    children = rng.spawn(params.T)
    return b, [(sample_hypermatching(params.n, params.k, params.edges_per_matching, child), child) for child in children]


def sample_yes(params: DistributionParams, rng: np.random.Generator) -> Sample:
    if params.pi is None:
        raise InvalidParameters("YES sampling needs pi")
    if params.k > params.q:
        raise InvalidParameters(f"YES sampling needs k <= q, got k={params.k}, q={params.q}")
    b, drawn = _matchings(params, rng)
    constraints, masks = [], []
    for matching, child in drawn:
        coins = child.random(matching.m) < 1.0 / params.q
        mask = tuple(
            bool(coin) and identifier(b, e, params.pi, params.q) is not None
            for e, coin in zip(matching.edges, coins)
        )
        constraints.extend(e for e, keep in zip(matching.edges, mask) if keep)
        masks.append(mask)
    instance = OcspInstance(params.n, params.predicate, tuple(constraints))
    return Sample(instance, b, tuple(g for g, _ in drawn), tuple(masks), params.pi)


def sample_no(params: DistributionParams, rng: np.random.Generator) -> Sample:
    """NO instance; ``b`` is drawn (to keep seeds aligned with YES) but unused."""
    b, drawn = _matchings(params, rng)
    p = 1.0 / params.q**params.k
    constraints, masks = [], []
    for matching, child in drawn:
        mask = tuple(bool(c) for c in child.random(matching.m) < p)
        constraints.extend(e for e, keep in zip(matching.edges, mask) if keep)
        masks.append(mask)
    instance = OcspInstance(params.n, params.predicate, tuple(constraints))
    return Sample(instance, b, tuple(g for g, _ in drawn), tuple(masks), None)


def best_shifted_assignment(sample: Sample) -> tuple[int, Fraction]:
    """Best cyclic relabelling ``b + t`` of the planted partition under ``f_P^q``.

    Returns ``(t, value)`` with the smallest ``t`` among ties.
    """
    instance = sample.instance
    if instance.m == 0:
        raise EmptyInstance("no constraints to evaluate")
    q = sample.hidden_partition.q
    f = coarse_predicate(instance.predicate, q)
    best_t, best = 0, Fraction(-1)
    for t in range(q):
        val = csp_value(instance, f, sample.hidden_partition.shifted(t))
        if val > best:
            best_t, best = t, val
    return best_t, best
