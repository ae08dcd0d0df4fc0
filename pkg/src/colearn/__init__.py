"""Collaborative PAC learning: learners, ERM oracles, coloring backends,
hardness gadgets and an experiment harness."""

from .classes import (
    AllFunctions,
    AtMostOnePositive,
    ExplicitClass,
    HypothesisClass,
    ThresholdBudgetClass,
    compose,
    from_descriptor,
    is_2_refutable_on,
    make_all_functions,
    make_at_most_one_positive,
    make_threshold_budget,
    parse_class_spec,
    xor,
)
from .core import (
    DataDistribution,
    Dataset,
    Hypothesis,
    InstanceSpace,
    RngStream,
    SampleLedger,
    SamplingOracle,
    population_error,
    realizability_check,
    sample,
    training_error,
)
from .erm import (
    AugmentedSolution,
    ErmInstance,
    augmented_erm_decide,
    augmented_erm_decide_many,
    augmented_erm_feasible,
    augmented_erm_min,
    erm,
    threshold_consistency,
)
from .errors import (
    CapacityError,
    ColearnError,
    DomainMismatchError,
    InvalidInputError,
    NotTwoRefutable,
    PromiseViolation,
    RefutabilityViolation,
)
from .graph import (
    Coloring,
    ConflictGraph,
    approx_color,
    build_conflict_graph,
    exact_color,
    is_proper,
    merge_independent_set,
    two_color,
)
from .harness import ExperimentSpec, PlantedInstance, aggregate, generate_planted, naive_baseline, run_experiment
from .learners import LearnerConfig, LearnerReport, doubling_wrapper, learn_general, learn_refutable, learn_same_marginal
from .reductions import (
    GraphInstance,
    SubsetSumInstance,
    coloring_to_erm,
    erm_to_distributional,
    sparsify_coloring,
    subsetsum_to_erm,
)
from .vcdim import augment_class, sauer_bound, vc_bound_threshold, vc_dimension

__version__ = "0.1.0"
