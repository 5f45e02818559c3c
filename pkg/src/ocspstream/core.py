"""Ordering predicates, OCSP instances and their exact values."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    DuplicateEntries,
    EmptyInstance,
    IndexOutOfRange,
    OcspError,
    TooLarge,
)
from .permutations import Permutation, all_permutations, invert, ord_of, unrank

MAX_CONSTRAINTS = 2**63 - 1

Constraint = tuple[int, ...]


@dataclass(frozen=True)
class OrderingPredicate:
    """A predicate on ``S_k`` stored as the set of lexicographic ranks it accepts."""

    k: int
    satisfied: frozenset[int]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise OcspError("predicate arity must be >= 1")
        sat = frozenset(int(r) for r in self.satisfied)
        bad = [r for r in sat if not 0 <= r < factorial(self.k)]
        if bad:
            raise OcspError(f"ranks {sorted(bad)} outside [0, {factorial(self.k)})")
        object.__setattr__(self, "satisfied", sat)

    def __call__(self, pi: Permutation) -> bool:
        if pi.k != self.k:
            raise ArityMismatch(f"predicate arity {self.k}, permutation arity {pi.k}")
        return pi.rank() in self.satisfied

    def support(self) -> list[Permutation]:
        return [unrank(r, self.k) for r in sorted(self.satisfied)]

    def rho(self) -> Fraction:
        return rho(self)

    @classmethod
    def from_permutations(cls, perms: Iterable[Permutation], name: str | None = None) -> "OrderingPredicate":
        perms = list(perms)
        if not perms:
            raise OcspError("use OrderingPredicate(k, frozenset()) for an empty predicate")
        k = perms[0].k
        if any(p.k != k for p in perms):
            raise ArityMismatch("mixed arities in predicate support")
        return cls(k, frozenset(p.rank() for p in perms), name)

    @classmethod
    def all_ones(cls, k: int) -> "OrderingPredicate":
        return cls(k, frozenset(range(factorial(k))))

    @classmethod
    def named(cls, name: str) -> "OrderingPredicate":
        key = name.strip().lower()
        if key == "mas":
            return MAS
        if key in ("btwn", "betweenness"):
            return BTWN
        raise OcspError(f"unknown predicate name {name!r}")

    def to_json(self) -> dict[str, Any]:
        if self.name is not None:
            return {"named": self.name}
        return {"k": self.k, "satisfied_ranks": sorted(self.satisfied)}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "OrderingPredicate":
        if "named" in data:
            return cls.named(data["named"])
        return cls(int(data["k"]), frozenset(data["satisfied_ranks"]))


MAS = OrderingPredicate.from_permutations([Permutation((0, 1))], name="MAS")
BTWN = OrderingPredicate.from_permutations(
    [Permutation((0, 1, 2)), Permutation((2, 1, 0))], name="Btwn"
)


def rho(predicate: OrderingPredicate) -> Fraction:
    """Fraction of ``S_k`` accepted: the value of a uniformly random ordering."""
    return Fraction(len(predicate.satisfied), factorial(predicate.k))


def _check_constraint(j: Sequence[int], n: int, k: int) -> Constraint:
    j = tuple(int(x) for x in j)
    if len(j) != k:
        raise ArityMismatch(f"constraint {j} has arity {len(j)}, expected {k}")
    for x in j:
        if not 0 <= x < n:
            raise IndexOutOfRange(f"variable {x} outside [0, {n})")
    if len(set(j)) != k:
        raise DuplicateEntries(f"constraint {j} repeats a variable")
    return j


@dataclass(frozen=True)
class OcspInstance:
    n: int
    predicate: OrderingPredicate
    constraints: tuple[Constraint, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise OcspError("instance needs n >= 1")
        cons = tuple(_check_constraint(j, self.n, self.predicate.k) for j in self.constraints)
        if len(cons) > MAX_CONSTRAINTS:
            raise TooLarge("constraint count overflows a signed 64-bit counter")
        object.__setattr__(self, "constraints", cons)

    @property
    def k(self) -> int:
        return self.predicate.k

    @property
    def m(self) -> int:
        return len(self.constraints)

    def with_constraints(self, constraints: Iterable[Sequence[int]]) -> "OcspInstance":
        return OcspInstance(self.n, self.predicate, tuple(tuple(c) for c in constraints))

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "predicate": self.predicate.to_json(),
            "constraints": [list(c) for c in self.constraints],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "OcspInstance":
        predicate = OrderingPredicate.from_json(data["predicate"])
        if "k" in data and int(data["k"]) != predicate.k:
            raise ArityMismatch(f"instance k={data['k']} but predicate k={predicate.k}")
        return cls(int(data["n"]), predicate, tuple(tuple(c) for c in data["constraints"]))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "OcspInstance":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def restrict(sigma: Permutation, j: Sequence[int]) -> tuple[int, ...]:
    return tuple(sigma(x) for x in j)


def evaluate_constraint(predicate: OrderingPredicate, sigma: Permutation, j: Sequence[int]) -> bool:
    j = _check_constraint(j, sigma.k, predicate.k)
    return ord_of(restrict(sigma, j)).rank() in predicate.satisfied


def value(instance: OcspInstance, sigma: Permutation) -> Fraction:
    if instance.m == 0:
        raise EmptyInstance("value is undefined for an instance with no constraints")
    if sigma.k != instance.n:
        raise ArityMismatch(f"ordering on {sigma.k} variables, instance has {instance.n}")
    sat = instance.predicate.satisfied
    hits = sum(ord_of(restrict(sigma, j)).rank() in sat for j in instance.constraints)
    return Fraction(hits, instance.m)


# -- vectorised evaluation -------------------------------------------------

_PATTERN_MAX_K = 6


@lru_cache(maxsize=None)
def _pattern_table(k: int, satisfied: frozenset[int]) -> np.ndarray:
    # Pairwise-comparison bits of a distinct tuple determine its ord; map every
    # reachable bit pattern to whether that ord is accepted.
    pairs = list(combinations(range(k), 2))
    table = np.zeros(1 << len(pairs), dtype=bool)
    for pi in all_permutations(k):
        a = invert(pi).image  # ord(a) == pi
        key = sum(1 << p for p, (i, j) in enumerate(pairs) if a[i] < a[j])
        table[key] = pi.rank() in satisfied
    return table


def satisfied_mask(predicate: OrderingPredicate, columns: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate one constraint across many assignments at once.

    ``columns[i]`` holds the value assigned to the constraint's i-th variable
    under every assignment; entries must be pairwise distinct per assignment.
    """
    k = predicate.k
    if len(columns) != k:
        raise ArityMismatch(f"expected {k} columns, got {len(columns)}")
    if k == 1:
        return np.full(np.shape(columns[0]), 0 in predicate.satisfied, dtype=bool)
    if k == 2:
        sat = predicate.satisfied
        if sat == {0}:
            return columns[0] < columns[1]
        if sat == {1}:
            return columns[0] > columns[1]
        return np.full(np.shape(columns[0]), bool(sat), dtype=bool)
    if k <= _PATTERN_MAX_K:
        table = _pattern_table(k, predicate.satisfied)
        dtype = np.uint8 if k <= 4 else np.uint16
        key = np.zeros(np.shape(columns[0]), dtype=dtype)
        for p, (i, j) in enumerate(combinations(range(k), 2)):
            bit = (columns[i] < columns[j]).view(np.uint8).astype(dtype, copy=False)
            key |= bit << dtype(p)
        return table[key]
    stacked = np.stack(columns)
    order = np.argsort(stacked, axis=0)
    ranks = np.zeros(stacked.shape[1:], dtype=np.int64)
    for pos in range(k):
        smaller = (order[pos + 1 :] < order[pos]).sum(axis=0)
        ranks += smaller * factorial(k - 1 - pos)
    return np.isin(ranks, np.fromiter(predicate.satisfied, dtype=np.int64))
