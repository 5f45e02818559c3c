"""Coarsening ordering predicates to alphabet-``[q]`` CSPs.

``coarse_predicate(P, q)`` accepts ``a in [q]^k`` iff the entries of ``a`` are
distinct and ``P(ord(a))`` holds.  The module also converts between orderings
and ``q``-partitions in the two directions used by the value comparisons, and
computes the width of a coarse predicate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb, floor
from typing import Any, Iterator, Sequence

import numpy as np

from .core import OcspInstance, OrderingPredicate, satisfied_mask
from .errors import (
    AlphabetTooSmall,
    ArityMismatch,
    BlockTooSmall,
    EmptyInstance,
    InvalidAlphabet,
    LengthMismatch,
    OcspError,
    TooLarge,
)
from .permutations import Permutation, ord_of

log = logging.getLogger(__name__)

MATERIALIZE_LIMIT = 2**24
WIDTH_LIMIT = 10**8


def encode(a: Sequence[int], q: int) -> int:
    """Base-``q`` code of a tuple, most significant digit first."""
    code = 0
    for x in a:
        code = code * q + int(x)
    return code


def decode(code: int, q: int, k: int) -> tuple[int, ...]:
    digits = [0] * k
    for i in range(k - 1, -1, -1):
        code, digits[i] = divmod(code, q)
    return tuple(digits)


def all_codes_digits(q: int, k: int) -> np.ndarray:
    """Digits of every code in ``[q^k]`` as a ``(k, q^k)`` array."""
    codes = np.arange(q**k, dtype=np.int64)
    digits = np.empty((k, q**k), dtype=np.int64)
    for i in range(k - 1, -1, -1):
        codes, digits[i] = np.divmod(codes, q)
    return digits


def _coarse_accepts(source: OrderingPredicate, a: Sequence[int]) -> bool:
    if len(set(a)) != len(a):
        return False
    return ord_of(a).rank() in source.satisfied


@dataclass(frozen=True)
class CoarsePredicate:
    """``f: [q]^k -> {0,1}``.

    Either an explicit table of accepted base-``q`` codes, or the coarsening of
    ``source`` (materialised into ``table`` when ``q^k`` is small enough).
    """

    k: int
    q: int
    table: frozenset[int] | None = None
    source: OrderingPredicate | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.q < 1:
            raise InvalidAlphabet(f"alphabet size must be >= 1, got {self.q}")
        if self.k < 1:
            raise OcspError("arity must be >= 1")
        if self.table is None and self.source is None:
            raise OcspError("need either an explicit table or a source predicate")
        if self.table is not None:
            table = frozenset(int(c) for c in self.table)
            if any(not 0 <= c < self.q**self.k for c in table):
                raise OcspError("table code outside [q^k]")
            object.__setattr__(self, "table", table)

    def __call__(self, a: Sequence[int]) -> bool:
        if len(a) != self.k:
            raise ArityMismatch(f"expected a {self.k}-tuple, got {tuple(a)}")
        if any(not 0 <= x < self.q for x in a):
            raise OcspError(f"{tuple(a)} not in [{self.q}]^{self.k}")
        if self.table is not None:
            return encode(a, self.q) in self.table
        return _coarse_accepts(self.source, a)

    @property
    def materialized(self) -> bool:
        return self.table is not None

    def support_size(self) -> int:
        if self.table is not None:
            return len(self.table)
        # each ord pattern is realised by exactly C(q, k) distinct tuples
        return len(self.source.satisfied) * comb(self.q, self.k)

    def rho(self) -> Fraction:
        """Value of a uniformly random assignment, ``|f^{-1}(1)| / q^k``."""
        return Fraction(self.support_size(), self.q**self.k)

    def satisfied_codes(self) -> Iterator[int]:
        if self.table is not None:
            yield from sorted(self.table)
            return
        for code in range(self.q**self.k):
            if _coarse_accepts(self.source, decode(code, self.q, self.k)):
                yield code

    def lookup(self) -> np.ndarray:
        """Boolean membership array indexed by base-``q`` code."""
        if self.q**self.k > WIDTH_LIMIT:
            raise TooLarge(f"q^k = {self.q ** self.k} too large to tabulate")
        if self.table is None:
            return _coarse_mask(self.source, self.q)
        out = np.zeros(self.q**self.k, dtype=bool)
        out[sorted(self.table)] = True
        return out

    def to_json(self) -> dict[str, Any]:
        if self.source is not None:
            return {"coarsen_of": self.source.to_json(), "q": self.q}
        return {"k": self.k, "q": self.q, "satisfied_base_q": sorted(self.table)}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "CoarsePredicate":
        if "coarsen_of" in data:
            return coarse_predicate(OrderingPredicate.from_json(data["coarsen_of"]), int(data["q"]))
        return cls(int(data["k"]), int(data["q"]), frozenset(data["satisfied_base_q"]))

    @classmethod
    def constant(cls, k: int, q: int, bit: bool) -> "CoarsePredicate":
        return cls(k, q, frozenset(range(q**k)) if bit else frozenset())


def coarse_predicate(predicate: OrderingPredicate, q: int) -> CoarsePredicate:
    if q < 1:
        raise InvalidAlphabet(f"alphabet size must be >= 1, got {q}")
    k = predicate.k
    if q < k:
        log.warning("q=%d < k=%d: the coarsened predicate is identically zero", q, k)
    if q**k > MATERIALIZE_LIMIT:
        return CoarsePredicate(k, q, None, predicate)
    table = frozenset(int(c) for c in np.flatnonzero(_coarse_mask(predicate, q)))
    return CoarsePredicate(k, q, table, predicate)


def _coarse_mask(predicate: OrderingPredicate, q: int) -> np.ndarray:
    k = predicate.k
    digits = all_codes_digits(q, k)
    distinct = np.ones(q**k, dtype=bool)
    for i, j in combinations(range(k), 2):
        distinct &= digits[i] != digits[j]
    return distinct & satisfied_mask(predicate, list(digits))


@dataclass(frozen=True)
class Partition:
    """``b in [q]^n``, read as an assignment or as blocks ``b^{-1}(i)``."""

    q: int
    b: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.q < 1:
            raise InvalidAlphabet(f"alphabet size must be >= 1, got {self.q}")
        b = tuple(int(x) for x in self.b)
        if any(not 0 <= x < self.q for x in b):
            raise OcspError(f"labels of {b} must lie in [{self.q}]")
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.b)

    def __getitem__(self, i: int) -> int:
        return self.b[i]

    def restrict(self, j: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.b[x] for x in j)

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.q)]
        for v, label in enumerate(self.b):
            out[label].append(v)
        return out

    def block_sizes(self) -> list[int]:
        return [len(block) for block in self.blocks()]

    def shifted(self, t: int) -> "Partition":
        return Partition(self.q, tuple((x + t) % self.q for x in self.b))


def csp_value(instance: OcspInstance, f: CoarsePredicate, b: Partition) -> Fraction:
    if instance.m == 0:
        raise EmptyInstance("csp value is undefined for an instance with no constraints")
    if b.n != instance.n:
        raise LengthMismatch(f"assignment has length {b.n}, instance has {instance.n} variables")
    if f.k != instance.k:
        raise ArityMismatch(f"predicate arity {f.k}, instance arity {instance.k}")
    if f.q != b.q:
        raise InvalidAlphabet(f"predicate alphabet {f.q}, partition alphabet {b.q}")
    hits = sum(f(b.restrict(j)) for j in instance.constraints)
    return Fraction(hits, instance.m)


def lift_partition_to_ordering(b: Partition) -> Permutation:
    """Place blocks ``0, 1, ..., q-1`` left to right, ascending index inside a block."""
    order = sorted(range(b.n), key=lambda v: (b.b[v], v))
    sigma = [0] * b.n
    for pos, v in enumerate(order):
        sigma[v] = pos
    return Permutation(tuple(sigma))


def block_length(gamma: Fraction | float | str, n: int) -> int:
    """``floor(gamma * n)`` computed exactly."""
    return floor(Fraction(gamma) * n)


def interval_coarsen(sigma: Permutation, gamma: Fraction | float | str, q: int) -> Partition:
    """Cut the ordering into consecutive runs of ``floor(gamma n)`` positions."""
    n = sigma.k
    width = block_length(gamma, n)
    if width < 1:
        raise BlockTooSmall(f"floor(gamma * n) = 0 for gamma={gamma}, n={n}")
    labels = tuple(sigma(i) // width for i in range(n))
    top = max(labels)
    if top >= q:
        raise AlphabetTooSmall(f"label {top} needs q > {top}, got q={q}")
    return Partition(q, labels)


def width(f: CoarsePredicate) -> Fraction:
    """``max_b #{l in [q] : f(b + l) = 1} / q`` over all ``b in [q]^k``."""
    q, k = f.q, f.k
    if q**k > WIDTH_LIMIT:
        raise TooLarge(f"q^k = {q ** k} exceeds the enumeration guard {WIDTH_LIMIT}")
    table = f.lookup()
    digits = all_codes_digits(q, k)
    hits = np.zeros(q**k, dtype=np.int64)
    for shift in range(q):
        shifted = np.zeros(q**k, dtype=np.int64)
        for i in range(k):
            shifted = shifted * q + (digits[i] + shift) % q
        hits += table[shifted]
    return Fraction(int(hits.max()), q)
