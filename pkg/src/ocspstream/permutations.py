"""Permutations in one-line notation, lexicographic (Lehmer) ranking, and ``ord``.

A permutation on ``[k] = {0, ..., k-1}`` is stored as its image tuple
``(p(0), ..., p(k-1))``.  Composition follows the usual convention
``compose(p, t)(i) == p(t(i))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations as _itertools_permutations
from math import factorial
from typing import Iterator, Sequence

import numpy as np

from .errors import ArityMismatch, DuplicateEntries, OcspError, OutOfRange


@dataclass(frozen=True)
class Permutation:
    image: tuple[int, ...]

    def __post_init__(self) -> None:
        image = tuple(int(x) for x in self.image)
        object.__setattr__(self, "image", image)
        if len(image) < 1:
            raise OcspError("permutation must have arity >= 1")
        if sorted(image) != list(range(len(image))):
            raise OcspError(f"{image} is not a permutation of [{len(image)}]")

    @property
    def k(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def __len__(self) -> int:
        return len(self.image)

    def __iter__(self) -> Iterator[int]:
        return iter(self.image)

    def __str__(self) -> str:
        return "[" + " ".join(map(str, self.image)) + "]"

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(k)))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Parse ``"[1 2 0]"``, ``"1 2 0"`` or ``"1,2,0"``."""
        cleaned = text.strip().strip("[]").replace(",", " ")
        return cls(tuple(int(tok) for tok in cleaned.split()))

    def rank(self) -> int:
        return rank(self)

    @classmethod
    def unrank(cls, r: int, k: int) -> "Permutation":
        return unrank(r, k)

    def inverse(self) -> "Permutation":
        return invert(self)

    def compose(self, other: "Permutation") -> "Permutation":
        return compose(self, other)


def rank(pi: Permutation) -> int:
    """Lexicographic rank of the one-line notation, in ``[k!]``."""
    k = pi.k
    remaining = list(range(k))
    r = 0
    for pos, v in enumerate(pi.image):
        idx = remaining.index(v)
        r += idx * factorial(k - 1 - pos)
        remaining.pop(idx)
    return r


def unrank(r: int, k: int) -> Permutation:
    if k < 1:
        raise OcspError("arity must be >= 1")
    if not 0 <= r < factorial(k):
        raise OutOfRange(f"rank {r} outside [0, {factorial(k)})")
    remaining = list(range(k))
    image = []
    for pos in range(k):
        f = factorial(k - 1 - pos)
        idx, r = divmod(r, f)
        image.append(remaining.pop(idx))
    return Permutation(tuple(image))


def ord_of(a: Sequence[int]) -> Permutation:
    """The unique ``p`` with ``a[p(0)] < a[p(1)] < ... < a[p(k-1)]``.

    Undefined for tuples with repeated entries; those raise rather than being
    tie-broken.
    """
    a = tuple(a)
    if len(a) < 1:
        raise OcspError("ord needs at least one entry")
    if len(set(a)) != len(a):
        raise DuplicateEntries(f"ord undefined for {a}: repeated entries")
    return Permutation(tuple(sorted(range(len(a)), key=a.__getitem__)))


def compose(pi: Permutation, tau: Permutation) -> Permutation:
    if pi.k != tau.k:
        raise ArityMismatch(f"cannot compose arities {pi.k} and {tau.k}")
    return Permutation(tuple(pi.image[t] for t in tau.image))


def invert(pi: Permutation) -> Permutation:
    inv = [0] * pi.k
    for i, v in enumerate(pi.image):
        inv[v] = i
    return Permutation(tuple(inv))


def all_permutations(k: int) -> list[Permutation]:
    """``S_k`` in lexicographic order, so ``all_permutations(k)[r].rank() == r``."""
    return [Permutation(p) for p in _itertools_permutations(range(k))]


@lru_cache(maxsize=4)
def lex_permutation_table(n: int) -> np.ndarray:
    """All of ``S_n`` as an ``(n, n!)`` int8 array, column ``r`` holding rank ``r``.

    Row ``i`` is ``sigma(i)`` across every ordering, which keeps per-variable
    reads contiguous for the vectorised solvers.
    """
    if n < 1:
        raise OcspError("n must be >= 1")
    table = np.zeros((1, 1), dtype=np.int8)
    for size in range(2, n + 1):
        sub = table.shape[1]
        out = np.empty((size, size * sub), dtype=np.int8)
        for first in range(size):
            rest = np.array([v for v in range(size) if v != first], dtype=np.int8)
            block = slice(first * sub, (first + 1) * sub)
            out[0, block] = first
            out[1:, block] = rest[table]
        table = out
    table.setflags(write=False)
    return table
