"""Exact and baseline solvers for ordering and coarsened instances."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt
from typing import Iterable, Literal, Sequence

import numpy as np

from .coarsening import CoarsePredicate, Partition
from .core import OcspInstance, OrderingPredicate, satisfied_mask
from .errors import ArityMismatch, EmptyInstance, EmptyStream, InvalidAlphabet, OcspError, TooLarge
from .permutations import Permutation, lex_permutation_table

OCSP_EXACT_MAX_N = 10
CSP_EXACT_LIMIT = 10**7
LOCAL_SEARCH_RESTARTS = 20
_CSP_CHUNK = 1 << 18


@dataclass(frozen=True)
class SolveReport:
    optimum: Fraction
    witness: Permutation | Partition
    explored: int
    mode: Literal["exact", "heuristic"]

    def to_json(self) -> dict:
        if isinstance(self.witness, Permutation):
            witness = {"ordering": list(self.witness.image)}
        else:
            witness = {"partition": list(self.witness.b), "q": self.witness.q}
        return {
            "optimum": str(self.optimum),
            "optimum_float": float(self.optimum),
            "witness": witness,
            "explored": self.explored,
            "mode": self.mode,
        }


def _weighted_constraints(instance: OcspInstance) -> list[tuple[tuple[int, ...], int]]:
    return sorted(Counter(instance.constraints).items())


def solve_ocsp_exact(instance: OcspInstance) -> SolveReport:
    """Maximum value over all ``n!`` orderings.

    Every ordering is scored at once against a lexicographically ordered table
    of ``S_n``, so ``argmax`` returns the lexicographically smallest optimal
    ordering.
    """
    if instance.m == 0:
        raise EmptyInstance("optimum is undefined for an instance with no constraints")
    if instance.n > OCSP_EXACT_MAX_N:
        raise TooLarge(f"exact ordering search limited to n <= {OCSP_EXACT_MAX_N}")
    table = lex_permutation_table(instance.n)
    dtype = np.int16 if instance.m < 2**15 else np.int64
    counts = np.zeros(table.shape[1], dtype=dtype)
    for j, w in _weighted_constraints(instance):
        hit = satisfied_mask(instance.predicate, [table[v] for v in j])
        if w == 1:
            counts += hit
        else:
            counts += hit.astype(dtype) * dtype(w)
    best = int(np.argmax(counts))
    witness = Permutation(tuple(int(x) for x in table[:, best]))
    return SolveReport(Fraction(int(counts[best]), instance.m), witness, table.shape[1], "exact")


def _assignment_chunks(n: int, q: int) -> Iterable[tuple[int, np.ndarray]]:
    # lexicographic order over [q]^n: variable 0 is the most significant digit
    total = q**n
    for start in range(0, total, _CSP_CHUNK):
        codes = np.arange(start, min(start + _CSP_CHUNK, total), dtype=np.int64)
        digits = np.empty((n, codes.size), dtype=np.int64)
        for v in range(n - 1, -1, -1):
            codes, digits[v] = np.divmod(codes, q)
        yield start, digits


def solve_csp_exact(instance: OcspInstance, f: CoarsePredicate) -> SolveReport:
    """Maximum of the coarsened value over all ``b in [q]^n`` (lexicographically first witness)."""
    if instance.m == 0:
        raise EmptyInstance("optimum is undefined for an instance with no constraints")
    if f.k != instance.k:
        raise ArityMismatch(f"predicate arity {f.k}, instance arity {instance.k}")
    q, n = f.q, instance.n
    if q**n > CSP_EXACT_LIMIT:
        raise TooLarge(f"q^n = {q ** n} exceeds the exact limit {CSP_EXACT_LIMIT}")
    lookup = f.lookup()
    weighted = _weighted_constraints(instance)
    best, best_code = -1, 0
    for start, digits in _assignment_chunks(n, q):
        counts = np.zeros(digits.shape[1], dtype=np.int32)
        for j, w in weighted:
            code = np.zeros(digits.shape[1], dtype=np.int64)
            for v in j:
                code = code * q + digits[v]
            counts += w * lookup[code].astype(np.int32)
        i = int(np.argmax(counts))
        if counts[i] > best:
            best, best_code = int(counts[i]), start + i
    labels = []
    for _ in range(n):
        best_code, d = divmod(best_code, q)
        labels.append(d)
    witness = Partition(q, tuple(reversed(labels)))
    return SolveReport(Fraction(best, instance.m), witness, q**n, "exact")


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    trials: int


def random_ordering_baseline(instance: OcspInstance, trials: int, rng: np.random.Generator) -> Estimate:
    """Monte Carlo value of a uniformly random ordering."""
    if instance.m == 0:
        raise EmptyInstance("no constraints to evaluate")
    if trials < 1:
        raise OcspError("trials must be >= 1")
    # row t of `positions` is a uniform ordering: positions[t, v] = sigma_t(v)
    positions = np.argsort(rng.random((trials, instance.n)), axis=1).argsort(axis=1)
    hits = np.zeros(trials, dtype=np.int64)
    for j, w in _weighted_constraints(instance):
        hits += w * satisfied_mask(instance.predicate, [positions[:, v] for v in j])
    values = hits / instance.m
    stderr = float(values.std(ddof=1) / sqrt(trials)) if trials > 1 else float("inf")
    return Estimate(float(values.mean()), stderr, trials)


def reservoir_sample(stream: Iterable, s: int, rng: np.random.Generator) -> list:
    """Uniform ``s``-subset (without replacement) of a stream of unknown length."""
    if s < 1:
        raise OcspError("sample size must be >= 1")
    reservoir: list = []
    for seen, item in enumerate(stream):
        if seen < s:
            reservoir.append(item)
        else:
            slot = int(rng.integers(0, seen + 1))
            if slot < s:
                reservoir[slot] = item
    return reservoir


def _local_search(instance: OcspInstance, rng: np.random.Generator) -> tuple[int, Permutation]:
    n = instance.n
    pred = instance.predicate
    touching: list[list[int]] = [[] for _ in range(n)]
    for idx, j in enumerate(instance.constraints):
        for v in j:
            touching[v].append(idx)

    def satisfied(pos: list[int], idx: int) -> bool:
        j = instance.constraints[idx]
        vals = [pos[v] for v in j]
        ranked = tuple(sorted(range(len(j)), key=vals.__getitem__))
        return Permutation(ranked).rank() in pred.satisfied

    best_count, best_sigma = -1, None
    for _ in range(LOCAL_SEARCH_RESTARTS):
        order = [int(v) for v in rng.permutation(n)]  # order[p] = variable at position p
        pos = [0] * n
        for p, v in enumerate(order):
            pos[v] = p
        improved = True
        while improved:
            improved = False
            for p in range(n - 1):
                u, v = order[p], order[p + 1]
                affected = set(touching[u]) | set(touching[v])
                before = sum(satisfied(pos, i) for i in affected)
                pos[u], pos[v] = p + 1, p
                after = sum(satisfied(pos, i) for i in affected)
                if after > before:
                    order[p], order[p + 1] = v, u
                    improved = True
                else:
                    pos[u], pos[v] = p, p + 1
        count = sum(satisfied(pos, i) for i in range(instance.m))
        if count > best_count:
            best_count, best_sigma = count, Permutation(tuple(pos))
    return best_count, best_sigma


def solve_ocsp_heuristic(instance: OcspInstance, rng: np.random.Generator) -> SolveReport:
    """Adjacent-transposition hill climbing with random restarts; a lower bound only."""
    if instance.m == 0:
        raise EmptyInstance("no constraints to evaluate")
    count, sigma = _local_search(instance, rng)
    return SolveReport(Fraction(count, instance.m), sigma, LOCAL_SEARCH_RESTARTS, "heuristic")


@dataclass(frozen=True)
class SubsampleReport:
    estimate: Fraction
    mode: Literal["exact", "heuristic"]
    sample: tuple[tuple[int, ...], ...]
    variables: tuple[int, ...]


def subsample_and_solve(
    stream: Iterable[Sequence[int]],
    predicate: OrderingPredicate,
    s: int,
    rng: np.random.Generator,
) -> SubsampleReport:
    """Reservoir-sample ``s`` constraints and solve the subinstance they span.

    Solved exactly when the sample touches at most 10 variables, otherwise by
    local search (reported as ``mode="heuristic"``).
    """
    sample = [tuple(int(v) for v in c) for c in reservoir_sample(stream, s, rng)]
    if not sample:
        raise EmptyStream("no constraints in the stream")
    variables = tuple(sorted({v for c in sample for v in c}))
    relabel = {v: i for i, v in enumerate(variables)}
    sub = OcspInstance(len(variables), predicate, tuple(tuple(relabel[v] for v in c) for c in sample))
    if sub.n <= OCSP_EXACT_MAX_N:
        report = solve_ocsp_exact(sub)
    else:
        report = solve_ocsp_heuristic(sub, rng)
    return SubsampleReport(report.optimum, report.mode, tuple(sample), variables)


def max_rank(n: int) -> int:
    return factorial(n)
