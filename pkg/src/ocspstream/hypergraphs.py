"""Ordered k-hypergraphs, random partial hypermatchings, and expansion checks.

An edge *lies on* a vertex set ``S`` when it touches at least two distinct
vertices of ``S``; it *congregates* on a partition when it lies on one of the
blocks.  ``sshe_certify`` and ``sphe_certify`` return the smallest ``delta``
for which a graph is a small-set (resp. small-partition) expander at a given
``gamma``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Literal, Sequence

import numpy as np

from .coarsening import Partition, block_length
from .core import OcspInstance
from .errors import (
    ArityMismatch,
    DuplicateEntries,
    EmptyInstance,
    ExactModeTooLarge,
    IndexOutOfRange,
    LengthMismatch,
    OcspError,
    TooManyEdges,
)

Edge = tuple[int, ...]

SSHE_EXACT_MAX_N = 24
SPHE_EXACT_LIMIT = 10**7
_MASK_CHUNK = 1 << 20


@dataclass(frozen=True)
class Hypergraph:
    n: int
    k: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        for e in edges:
            if len(e) != self.k:
                raise ArityMismatch(f"edge {e} is not a {self.k}-tuple")
            if any(not 0 <= v < self.n for v in e):
                raise IndexOutOfRange(f"edge {e} leaves [0, {self.n})")
            if len(set(e)) != self.k:
                raise DuplicateEntries(f"edge {e} repeats a vertex")
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    @classmethod
    def _trusted(cls, n: int, k: int, edges: tuple[Edge, ...]):
        # skips validation; callers guarantee the invariants by construction
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "k", k)
        object.__setattr__(obj, "edges", edges)
        return obj

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> "Hypergraph":
        edges = data.get("edges", data.get("constraints", []))
        k = int(data["k"]) if "k" in data else len(edges[0])
        return cls(int(data["n"]), k, tuple(tuple(e) for e in edges))


class Hypermatching(Hypergraph):
    def __post_init__(self) -> None:
        super().__post_init__()
        seen: set[int] = set()
        for e in self.edges:
            if seen.intersection(e):
                raise OcspError(f"edge {e} shares a vertex with an earlier edge")
            seen.update(e)


def constraint_hypergraph(instance: OcspInstance) -> Hypergraph:
    return Hypergraph(instance.n, instance.k, instance.constraints)


def union(graphs: Iterable[Hypergraph]) -> Hypergraph:
    graphs = list(graphs)
    if not graphs:
        raise OcspError("union of no graphs")
    n, k = graphs[0].n, graphs[0].k
    return Hypergraph(n, k, tuple(e for g in graphs for e in g.edges))


def sample_hypermatching(n: int, k: int, edge_count: int, rng: np.random.Generator) -> Hypermatching:
    """Uniform ``edge_count``-edge ordered k-hypermatching on ``[n]``.

    Shuffle ``[n]`` and cut the first ``k * edge_count`` vertices into
    consecutive k-tuples.
    """
    if edge_count < 0 or k < 1:
        raise OcspError("edge_count must be >= 0 and k >= 1")
    if k * edge_count > n:
        raise TooManyEdges(f"{edge_count} disjoint {k}-edges need {k * edge_count} > {n} vertices")
    order = rng.permutation(n)[: k * edge_count].reshape(edge_count, k)
    return Hypermatching._trusted(n, k, tuple(map(tuple, order.tolist())))


def lying_count(G: Hypergraph, S: Iterable[int]) -> int:
    S = set(S)
    return sum(len(S.intersection(e)) >= 2 for e in G.edges)


def congregating_count(G: Hypergraph, b: Partition | Sequence[int]) -> int:
    labels = b.b if isinstance(b, Partition) else tuple(b)
    if len(labels) != G.n:
        raise LengthMismatch(f"partition of length {len(labels)} for {G.n} vertices")
    count = 0
    for e in G.edges:
        seen = [labels[v] for v in e]
        count += len(set(seen)) < len(seen)
    return count


@dataclass(frozen=True)
class Certificate:
    """Result of an expansion check.

    ``mode == "exact"`` means ``delta`` is the true minimum; ``"lower-bound"``
    means it is the best value seen over ``trials`` random probes.
    """

    gamma: Fraction
    delta: Fraction
    mode: Literal["exact", "lower-bound"]
    trials: int | None = None
    witness: tuple[int, ...] | None = None

    def to_json(self) -> dict:
        return {
            "gamma": str(self.gamma),
            "delta_min": str(self.delta),
            "mode": self.mode,
            "trials": self.trials,
            "witness": list(self.witness) if self.witness is not None else None,
        }


def _edge_weights(G: Hypergraph) -> list[tuple[tuple[int, ...], int]]:
    # only the vertex set matters for lying/congregating
    return sorted(Counter(tuple(sorted(e)) for e in G.edges).items())


def _popcount_masks(n: int, size: int) -> Iterable[np.ndarray]:
    for start in range(0, 1 << n, _MASK_CHUNK):
        masks = np.arange(start, min(start + _MASK_CHUNK, 1 << n), dtype=np.uint32)
        bits = np.zeros(masks.shape, dtype=np.int8)
        for v in range(n):
            bits += ((masks >> v) & 1).astype(np.int8)
        yield masks[bits == size]


def sshe_certify(
    G: Hypergraph,
    gamma: Fraction | float | str,
    *,
    exact: bool | None = None,
    trials: int = 10_000,
    rng: np.random.Generator | None = None,
) -> Certificate:
    """Smallest ``delta`` with ``N(G, S) <= delta * m`` for all ``|S| <= gamma n``.

    Exact mode scans every subset of the largest admissible size (``N`` is
    monotone in ``S``); it is the default for ``n <= 24``.
    """
    gamma = Fraction(gamma)
    if G.m == 0:
        raise EmptyInstance("expansion is undefined for a graph with no edges")
    size = min(block_length(gamma, G.n), G.n)
    if exact is None:
        exact = G.n <= SSHE_EXACT_MAX_N
    if exact and G.n > SSHE_EXACT_MAX_N:
        raise ExactModeTooLarge(f"exact SSHE scan limited to n <= {SSHE_EXACT_MAX_N}")
    if size < 2:
        return Certificate(gamma, Fraction(0), "exact", witness=())
    weighted = _edge_weights(G)

    if not exact:
        rng = rng if rng is not None else np.random.default_rng()
        best, best_set = -1, ()
        for _ in range(trials):
            S = tuple(sorted(int(v) for v in rng.choice(G.n, size=size, replace=False)))
            count = lying_count(G, S)
            if count > best:
                best, best_set = count, S
        return Certificate(gamma, Fraction(best, G.m), "lower-bound", trials, best_set)

    best, best_mask = -1, 0
    for masks in _popcount_masks(G.n, size):
        if masks.size == 0:
            continue
        counts = np.zeros(masks.shape, dtype=np.int64)
        for verts, w in weighted:
            inside = np.zeros(masks.shape, dtype=np.int8)
            for v in verts:
                inside += ((masks >> v) & 1).astype(np.int8)
            counts += w * (inside >= 2)
        i = int(np.argmax(counts))
        if counts[i] > best:
            best, best_mask = int(counts[i]), int(masks[i])
    witness = tuple(v for v in range(G.n) if best_mask >> v & 1)
    return Certificate(gamma, Fraction(best, G.m), "exact", witness=witness)


@lru_cache(maxsize=32)
def restricted_growth_strings(n: int, max_blocks: int, cap: int) -> np.ndarray:
    """Set partitions of ``[n]`` with at most ``max_blocks`` blocks of size ``<= cap``.

    Rows are restricted-growth strings, so each unlabelled partition appears
    once.
    """
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        if rows.shape[0] == 0:
            break
        parts, tops = [], []
        for label in range(max_blocks):
            keep = top + 1 >= label
            if not keep.any():
                continue
            ext = np.concatenate([rows[keep], np.full((int(keep.sum()), 1), label, dtype=np.int8)], axis=1)
            parts.append(ext)
            tops.append(np.maximum(top[keep], label))
        rows = np.concatenate(parts)
        top = np.concatenate(tops)
        sizes = np.stack([(rows == label).sum(axis=1) for label in range(max_blocks)], axis=1)
        ok = (sizes <= cap).all(axis=1)
        rows, top = rows[ok], top[ok]
    out = rows if cap >= 1 and rows.shape[0] else np.zeros((0, n), dtype=np.int8)
    out.setflags(write=False)
    return out


def _congregating_counts(weighted: list[tuple[tuple[int, ...], int]], labels: np.ndarray) -> np.ndarray:
    counts = np.zeros(labels.shape[0], dtype=np.int64)
    for verts, w in weighted:
        hit = np.zeros(labels.shape[0], dtype=bool)
        for u, v in combinations(verts, 2):
            hit |= labels[:, u] == labels[:, v]
        counts += w * hit
    return counts


def sphe_certify(
    G: Hypergraph,
    gamma: Fraction | float | str,
    q: int,
    *,
    exact: bool | None = None,
    trials: int = 10_000,
    rng: np.random.Generator | None = None,
) -> Certificate:
    """Smallest ``delta`` such that every ``b in [q]^n`` with blocks of size
    ``<= gamma n`` has at most ``delta * m`` congregating edges.

    Only the block structure matters, so the exact scan walks unlabelled set
    partitions with at most ``q`` blocks.  The witness is a labelling in
    ``[q]^n``.
    """
    gamma = Fraction(gamma)
    if G.m == 0:
        raise EmptyInstance("expansion is undefined for a graph with no edges")
    if q < 1:
        raise OcspError("q must be >= 1")
    cap = block_length(gamma, G.n)
    labelled_space = min(q, G.n) ** G.n
    if exact is None:
        exact = labelled_space <= SPHE_EXACT_LIMIT
    if exact and labelled_space > SPHE_EXACT_LIMIT:
        raise ExactModeTooLarge(f"exact SPHE scan needs min(q,n)^n <= {SPHE_EXACT_LIMIT}")
    if cap < 2:
        # no block can hold two vertices of an edge
        return Certificate(gamma, Fraction(0), "exact", witness=None)
    weighted = _edge_weights(G)

    if not exact:
        rng = rng if rng is not None else np.random.default_rng()
        best, best_b = -1, None
        blocks_needed = -(-G.n // cap)
        for _ in range(trials):
            if blocks_needed <= q:
                order = rng.permutation(G.n)
                b = np.empty(G.n, dtype=np.int64)
                b[order] = np.arange(G.n) // cap
            else:
                b = rng.integers(0, q, size=G.n)
                if np.bincount(b, minlength=q).max() > cap:
                    continue
            count = congregating_count(G, tuple(int(x) for x in b))
            if count > best:
                best, best_b = count, tuple(int(x) for x in b)
        best = max(best, 0)
        return Certificate(gamma, Fraction(best, G.m), "lower-bound", trials, best_b)

    labels = restricted_growth_strings(G.n, min(q, G.n), cap)
    if labels.shape[0] == 0:
        return Certificate(gamma, Fraction(0), "exact", witness=None)
    counts = _congregating_counts(weighted, labels)
    i = int(np.argmax(counts))
    return Certificate(gamma, Fraction(int(counts[i]), G.m), "exact", witness=tuple(int(x) for x in labels[i]))
