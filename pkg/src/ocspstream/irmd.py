"""The T-player implicit randomized mask detection game and the streaming reduction.

Player ``t`` holds a hypermatching and ``z_t = M_t b + y_t (mod q)``.  The
matrix ``M_t`` is never built: its rows are the matching's vertices taken
edge-major, position-minor, so block ``i`` of ``z_t`` is ``b|_{e_i} + y_{t,i}``.
In the YES case ``y_{t,i}`` is a constant tuple ``(a, ..., a)``; in the NO case
it is uniform on ``[q]^k``.

Running a streaming algorithm through the game: player ``t`` streams edge
``e_i`` iff ``z_{t,i} == (v^(0))_pi`` and passes the algorithm state on.
"""
from __future__ import annotations

import importlib
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import floor
from typing import Iterable, Literal

import numpy as np
from scipy import stats

from .coarsening import Partition
from .core import OcspInstance, OrderingPredicate
from .distributions import (
    DistributionParams,
    contiguous_tuple,
    identifier,
    permute_tuple,
    sample_no,
    sample_yes,
)
from .errors import ArityMismatch, InvalidParameters, StateBoundExceeded
from .hypergraphs import Hypermatching, sample_hypermatching
from .permutations import Permutation
from .solvers import solve_ocsp_exact

Case = Literal["yes", "no"]


@dataclass(frozen=True)
class IrmdParams:
    q: int
    k: int
    n: int
    alpha: Fraction
    T: int

    def __post_init__(self) -> None:
        alpha = Fraction(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not 0 < alpha < Fraction(1, self.k):
            raise InvalidParameters(f"alpha must lie in (0, 1/k), got {alpha}")
        if min(self.q, self.k, self.n, self.T) < 1:
            raise InvalidParameters("q, k, n, T must all be >= 1")
        if self.k * self.edges_per_matching > self.n:
            raise InvalidParameters("matching does not fit on n vertices")

    @property
    def edges_per_matching(self) -> int:
        return floor(self.alpha * self.n)

    def distribution(self, predicate: OrderingPredicate, pi: Permutation | None = None) -> DistributionParams:
        return DistributionParams(self.q, self.n, self.k, self.alpha, self.T, predicate, pi)

    def to_json(self) -> dict:
        return {"q": self.q, "k": self.k, "n": self.n, "alpha": str(self.alpha), "T": self.T}


@dataclass(frozen=True)
class PlayerInput:
    matching: Hypermatching
    z: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class IrmdInstance:
    params: IrmdParams
    hidden_partition: Partition
    players: tuple[PlayerInput, ...]
    case: Case


def sample_irmd(params: IrmdParams, case: Case, rng: np.random.Generator) -> IrmdInstance:
    if case not in ("yes", "no"):
        raise InvalidParameters(f"case must be 'yes' or 'no', got {case!r}")
    q, k = params.q, params.k
    b = Partition(q, tuple(int(x) for x in rng.integers(0, q, size=params.n)))
    players = []
    for child in rng.spawn(params.T):
        matching = sample_hypermatching(params.n, k, params.edges_per_matching, child)
        if case == "yes":
            masks = np.repeat(child.integers(0, q, size=(matching.m, 1)), k, axis=1)
        else:
            masks = child.integers(0, q, size=(matching.m, k))
        z = tuple(
            tuple((b.b[v] + int(y)) % q for v, y in zip(e, mask))
            for e, mask in zip(matching.edges, masks)
        )
        players.append(PlayerInput(matching, z))
    return IrmdInstance(params, b, tuple(players), case)


def reduction_emit(player: PlayerInput, pi: Permutation, q: int) -> list[tuple[int, ...]]:
    """Edges whose masked labels equal ``(v^(0))_pi``, in matching order."""
    if player.matching.k != pi.k:
        raise ArityMismatch(f"matching arity {player.matching.k}, permutation arity {pi.k}")
    target = permute_tuple(contiguous_tuple(q, pi.k, 0), pi)
    return [e for e, z in zip(player.matching.edges, player.z) if z == target]


def reduction_stream(inst: IrmdInstance, pi: Permutation) -> list[tuple[int, ...]]:
    return [c for player in inst.players for c in reduction_emit(player, pi, inst.params.q)]


# -- streaming algorithms ---------------------------------------------------


class StreamingAlgorithm:
    """Base class for algorithms run through the game.

    Subclasses implement ``init``, ``ingest``, ``finish`` and ``state_bytes``.
    ``state_bytes`` must return the full serialised state: its length is what
    is checked against ``state_bound_bits`` (``None`` means unbounded) and
    reported as the communication cost.
    """

    name = "base"
    state_bound_bits: int | None = None

    def init(self, n: int, params: IrmdParams) -> None:
        raise NotImplementedError

    def ingest(self, constraint: tuple[int, ...]) -> None:
        raise NotImplementedError

    def finish(self) -> int:
        raise NotImplementedError

    def state_bytes(self) -> bytes:
        raise NotImplementedError

    def state_bits(self) -> int:
        """Size of ``state_bytes()`` in bits; override when serialising is costly."""
        return 8 * len(self.state_bytes())


class ConstantAlgorithm(StreamingAlgorithm):
    name = "constant"
    state_bound_bits = 0

    def __init__(self, bit: int = 0):
        self.bit = int(bit)

    def init(self, n, params):
        pass

    def ingest(self, constraint):
        pass

    def finish(self):
        return self.bit

    def state_bytes(self):
        return b""


class CountThreshold(StreamingAlgorithm):
    """Outputs 1 once at least ``threshold`` constraints have been seen."""

    name = "count-threshold"
    state_bound_bits = 64

    def __init__(self, threshold: int = 1):
        self.threshold = threshold
        self.count = 0

    def init(self, n, params):
        self.count = 0

    def ingest(self, constraint):
        self.count += 1

    def finish(self):
        return int(self.count >= self.threshold)

    def state_bytes(self):
        return self.count.to_bytes(8, "little")


class DegreeSketch(StreamingAlgorithm):
    """Per-vertex out-minus-in degree for 2-ary constraints.

    Outputs 1 when the imbalance statistic ``1/2 + sum_v |imbalance_v| / (4m)``
    reaches ``threshold``; a planted acyclic structure skews degrees, uniform
    noise does not.  Uses ``O(n log m)`` bits.
    """

    name = "degree-sketch"

    def __init__(self, threshold: float = 0.75):
        self.threshold = threshold
        self.imbalance = np.zeros(0, dtype=np.int32)
        self.m = 0

    def init(self, n, params):
        self.imbalance = np.zeros(n, dtype=np.int32)
        self.m = 0
        self.state_bound_bits = 32 * (n + 1)

    def ingest(self, constraint):
        u, v = constraint[0], constraint[-1]
        self.imbalance[u] += 1
        self.imbalance[v] -= 1
        self.m += 1

    def finish(self):
        if self.m == 0:
            return 0
        bound = 0.5 + float(np.abs(self.imbalance).sum()) / (4 * self.m)
        return int(bound >= self.threshold)

    def state_bytes(self):
        return self.imbalance.tobytes() + self.m.to_bytes(4, "little")


class ExactTracker(StreamingAlgorithm):
    """Stores every constraint and thresholds the exact optimum (unbounded space)."""

    name = "exact"
    state_bound_bits = None

    def __init__(self, predicate: OrderingPredicate, threshold: float):
        self.predicate = predicate
        self.threshold = Fraction(threshold)
        self.constraints: list[tuple[int, ...]] = []
        self.n = 0

    def init(self, n, params):
        self.n = n
        self.constraints = []

    def ingest(self, constraint):
        self.constraints.append(tuple(constraint))

    def finish(self):
        if not self.constraints:
            return 0
        instance = OcspInstance(self.n, self.predicate, tuple(self.constraints))
        return int(solve_ocsp_exact(instance).optimum >= self.threshold)

    def state_bytes(self):
        width = max(1, (self.n - 1).bit_length() + 7 >> 3)
        return b"".join(v.to_bytes(width, "little") for c in self.constraints for v in c)

    def state_bits(self):
        width = max(1, (self.n - 1).bit_length() + 7 >> 3)
        return 8 * width * self.predicate.k * len(self.constraints)


BUILTIN_ALGORITHMS = {
    "constant": ConstantAlgorithm,
    "count-threshold": CountThreshold,
    "degree-sketch": DegreeSketch,
    "exact": ExactTracker,
}


def load_algorithm(spec: str, **kwargs) -> StreamingAlgorithm:
    """Build a builtin by name, or a plug-in given as ``"package.module:ClassName"``."""
    if spec in BUILTIN_ALGORITHMS:
        return BUILTIN_ALGORITHMS[spec](**kwargs)
    if ":" not in spec:
        raise InvalidParameters(f"unknown algorithm {spec!r}")
    module_name, attr = spec.split(":", 1)
    cls = getattr(importlib.import_module(module_name), attr)
    alg = cls(**kwargs)
    if not isinstance(alg, StreamingAlgorithm):
        raise InvalidParameters(f"{spec} does not subclass StreamingAlgorithm")
    return alg


@dataclass(frozen=True)
class ReductionRun:
    output: int
    max_state_bits: int
    streamed: int


def _probe(alg: StreamingAlgorithm) -> int:
    bits = alg.state_bits()
    bound = alg.state_bound_bits
    if bound is not None and bits > bound:
        raise StateBoundExceeded(f"{alg.name} state is {bits} bits, bound {bound}")
    return bits


def run_reduction(alg: StreamingAlgorithm, inst: IrmdInstance, pi: Permutation) -> ReductionRun:
    """Players 0..T-1 feed their emitted constraints to ``alg`` in turn."""
    alg.init(inst.params.n, inst.params)
    peak = _probe(alg)
    streamed = 0
    for player in inst.players:
        for c in reduction_emit(player, pi, inst.params.q):
            alg.ingest(c)
            streamed += 1
            peak = max(peak, _probe(alg))
        # the message handed to the next player
        peak = max(peak, _probe(alg))
    return ReductionRun(int(alg.finish()), peak, streamed)


@dataclass(frozen=True)
class AdvantageEstimate:
    advantage: float
    yes_rate: float
    no_rate: float
    interval: tuple[float, float]
    trials: int
    max_state_bits: int


def _wilson_halfwidth(successes: int, trials: int) -> float:
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return (ci.high - ci.low) / 2


def estimate_advantage(
    alg: StreamingAlgorithm,
    params: IrmdParams,
    pi: Permutation,
    trials: int,
    rng: np.random.Generator,
) -> AdvantageEstimate:
    """``|Pr[1 | YES] - Pr[1 | NO]|`` over ``trials`` games of each case.

    The interval is the point estimate widened by the sum of the two Wilson 95%
    half-widths, clipped to ``[0, 1]``.
    """
    if trials < 2:
        raise InvalidParameters("estimate_advantage needs trials >= 2")
    ones = {"yes": 0, "no": 0}
    peak = 0
    for case, child in zip(("yes", "no"), rng.spawn(2)):
        for trial_rng in child.spawn(trials):
            run = run_reduction(alg, sample_irmd(params, case, trial_rng), pi)
            ones[case] += run.output
            peak = max(peak, run.max_state_bits)
    p_yes, p_no = ones["yes"] / trials, ones["no"] / trials
    adv = abs(p_yes - p_no)
    margin = _wilson_halfwidth(ones["yes"], trials) + _wilson_halfwidth(ones["no"], trials)
    return AdvantageEstimate(adv, p_yes, p_no, (max(0.0, adv - margin), min(1.0, adv + margin)), trials, peak)


# -- equivalence with the direct distributions -----------------------------


@dataclass(frozen=True)
class EmissionTable:
    """Per-edge emission probabilities over the full mask space, by ``b|_e``."""

    q: int
    k: int
    pi: Permutation
    yes: dict[tuple[int, ...], Fraction]
    no: dict[tuple[int, ...], Fraction]

    def check(self) -> list[str]:
        """Mismatches against the direct distributions (empty when exact)."""
        problems = []
        for labels in self.yes:
            pattern = identifier(labels, range(self.k), self.pi, self.q) is not None
            want_yes = Fraction(1, self.q) if pattern else Fraction(0)
            if self.yes[labels] != want_yes:
                problems.append(f"YES {labels}: {self.yes[labels]} != {want_yes}")
            want_no = Fraction(1, self.q**self.k)
            if self.no[labels] != want_no:
                problems.append(f"NO {labels}: {self.no[labels]} != {want_no}")
        return problems


def emission_table(q: int, k: int, pi: Permutation) -> EmissionTable:
    """Enumerate every mask for a single edge and every labelling of its vertices."""
    edge = tuple(range(k))
    matching = Hypermatching(k, k, (edge,))
    yes, no = {}, {}
    for labels in product(range(q), repeat=k):
        hits = sum(
            bool(reduction_emit(PlayerInput(matching, (tuple((x + a) % q for x in labels),)), pi, q))
            for a in range(q)
        )
        yes[labels] = Fraction(hits, q)
        hits = sum(
            bool(reduction_emit(PlayerInput(matching, (tuple((x + y) % q for x, y in zip(labels, ys)),)), pi, q))
            for ys in product(range(q), repeat=k)
        )
        no[labels] = Fraction(hits, q**k)
    return EmissionTable(q, k, pi, yes, no)


def _two_sample_chi2(a: Iterable, b: Iterable, min_expected: float = 5.0) -> tuple[float, int]:
    ca, cb = Counter(a), Counter(b)
    keys = sorted(set(ca) | set(cb), key=repr)
    total_a, total_b = sum(ca.values()), sum(cb.values())
    rows_a, rows_b, pool_a, pool_b = [], [], 0, 0
    share_a = total_a / (total_a + total_b)
    for key in keys:
        combined = ca[key] + cb[key]
        # pool cells whose smaller expected count is below the threshold
        if combined * min(share_a, 1 - share_a) < min_expected:
            pool_a += ca[key]
            pool_b += cb[key]
        else:
            rows_a.append(ca[key])
            rows_b.append(cb[key])
    if (pool_a + pool_b) * min(share_a, 1 - share_a) >= min_expected:
        rows_a.append(pool_a)
        rows_b.append(pool_b)
    if len(rows_a) < 2:
        return 1.0, len(rows_a)
    result = stats.chi2_contingency(np.array([rows_a, rows_b]), correction=False)
    return float(result.pvalue), len(rows_a)


@dataclass(frozen=True)
class FingerprintTest:
    case: Case
    p_value: float
    cells: int
    trials: int


def fingerprint_test(
    params: IrmdParams,
    predicate: OrderingPredicate,
    pi: Permutation,
    case: Case,
    trials: int,
    rng: np.random.Generator,
) -> FingerprintTest:
    """Two-sample chi-square: reduction streams vs. direct YES/NO samples.

    The fingerprint of an instance is its constraint stream.
    """
    dist = params.distribution(predicate, pi if case == "yes" else None)
    direct = sample_yes if case == "yes" else sample_no
    rng_red, rng_dir = rng.spawn(2)
    via_reduction = [tuple(reduction_stream(sample_irmd(params, case, r), pi)) for r in rng_red.spawn(trials)]
    via_direct = [direct(dist, r).instance.constraints for r in rng_dir.spawn(trials)]
    p, cells = _two_sample_chi2(via_reduction, via_direct)
    return FingerprintTest(case, p, cells, trials)


