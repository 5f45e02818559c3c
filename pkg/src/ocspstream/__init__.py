"""Hard instance distributions, exact solvers and streaming-game simulation for ordering CSPs."""
from ._version import __version__
from .coarsening import (
    CoarsePredicate,
    Partition,
    block_length,
    coarse_predicate,
    csp_value,
    interval_coarsen,
    lift_partition_to_ordering,
    width,
)
from .core import BTWN, MAS, OcspInstance, OrderingPredicate, evaluate_constraint, restrict, rho, value
from .distributions import (
    DistributionParams,
    Sample,
    best_shifted_assignment,
    contiguous_tuple,
    identifier,
    permute_tuple,
    sample_no,
    sample_yes,
)
from .errors import *  # noqa: F401,F403
from .experiments import DefaultParams, ExperimentConfig, derive_defaults, run_experiment
from .hypergraphs import (
    Certificate,
    Hypergraph,
    Hypermatching,
    congregating_count,
    lying_count,
    sample_hypermatching,
    sphe_certify,
    sshe_certify,
)
from .irmd import (
    IrmdInstance,
    IrmdParams,
    StreamingAlgorithm,
    estimate_advantage,
    reduction_emit,
    run_reduction,
    sample_irmd,
)
from .permutations import Permutation, all_permutations, compose, invert, ord_of, rank, unrank
from .solvers import (
    SolveReport,
    random_ordering_baseline,
    reservoir_sample,
    solve_csp_exact,
    solve_ocsp_exact,
    subsample_and_solve,
)
