"""Exact computation and verification toolkit for correlated product spaces."""

from .dist_core import (
    Alphabet,
    DistributionFormatError,
    EdgeVarianceReport,
    MarginalDistribution,
    MarkovKernel,
    StepDistribution,
    alpha,
    beta,
    check_edge_variance,
    double_sample_kernel,
    equal_marginals,
    format_distribution,
    is_markov_generated,
    kernel_second_eigenvalue,
    marginal,
    maximal_correlation,
    parse_distribution,
    rho,
)
from .decompose import (
    ConvexDecomposition,
    CycleDistribution,
    DecompositionPart,
    GuaranteeReport,
    WeightedCycle,
    WeightedDigraph,
    convex_cycle_decomposition,
    cycle_rho,
    decomposition_guarantees,
    digraph_cycle_decomposition,
    make_cycle,
)
from .fourier import (
    BudgetExceeded,
    FourierExpansion,
    FunctionSpec,
    OrthonormalBasis,
    Restriction,
    analyze,
    build_basis,
    evaluate,
    expectation,
    format_function,
    influence,
    is_resilient,
    is_upper_resilient,
    low_degree_max_coefficient,
    make_anchored_symmetric,
    make_junta,
    make_mod_linear,
    make_table_function,
    max_operator,
    noise_operator,
    parse_function,
    projection_subset,
    resilience_from_local_variance,
    restrict,
    synthesize,
    to_table,
    total_influence,
    variance,
)

from .hitting import (
    DensityStep,
    ExponentReport,
    HittingInstance,
    InfluenceStep,
    MarkovCheckReport,
    MaxGainReport,
    ReductionLog,
    SkewReport,
    ThreeSetsReport,
    ap3_distribution,
    counterexample_three_sets,
    counterexample_unequal_marginals,
    density_increment,
    estimate_hitting_exponent,
    explicit_c_bound,
    influence_reduction,
    low_influence_bound,
    markov_same_set_check,
    max_gain_check,
    multi_set_expectation,
    same_set_expectation,
    skew_pair_distribution,
)
from .invariance import (
    EnsembleSequence,
    GammaDecayReport,
    GaussianCounterpart,
    HypercontractivityReport,
    InvarianceGapReport,
    MultilinearPolynomial,
    RhcReport,
    SmoothingReport,
    ThresholdForm,
    discrete_ensemble,
    ensemble_orthonormality,
    gamma_decay_check,
    gaussian_counterpart,
    gaussian_ensemble,
    gaussian_rhc_check,
    hypercontractivity_check,
    invariance_gap,
    mollifier_chi,
    mollifier_phi,
    poly_from_function,
    projection_part,
    sample_ensemble,
    smoothing_gap,
    t_rho_poly,
    truncate,
)

__version__ = "1.0.0"
