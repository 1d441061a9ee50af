"""staranc: ancestral state reconstruction on star trees with unknown
edge lengths under the proportional substitution model.

The library has four layers: the exact probability kernel (`model`),
reproducible data generation (`simulate`), the reconstruction methods
(`estimators`), and the exact large-n consistency analysis
(`asymptotics`), with a seeded Monte Carlo harness (`experiments`) and
a CLI (`cli`) on top.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    TOL,
    Alignment,
    AncestralSequence,
    DiagCounts,
    EdgeSpec,
    StationaryDistribution,
    diag_counts,
    letters_from_states,
    mu,
    s_from_t,
    seq_log_likelihood,
    states_from_letters,
    t_from_s,
    transition_prob,
)
from .simulate import (  # noqa: E402
    IidEdgeLaw,
    SimulationConfig,
    pattern_counts,
    sample_edge_lengths,
    simulate,
    simulate_alignment,
)
from .estimators import (  # noqa: E402
    CapacityError,
    EdgeLengthFit,
    EstimateResult,
    Method,
    VStatistic,
    difference_estimator,
    eb_ancestral,
    eb_edge_lengths,
    eb_objective,
    estimate,
    majority_rule,
    mle_ancestral,
    mle_edge_length,
    profile_log_likelihood,
)
from .asymptotics import (  # noqa: E402
    AsymptoticReport,
    CriticalTimeRow,
    QPolynomial,
    TwoSiteCoefficients,
    ZoneGrid,
    constant_ancestor_profile,
    critical_time_scan,
    e_function,
    expected_pattern_prob,
    maximizer_set,
    q_polynomial,
    q_with_moments,
    single_site_threshold,
    two_site_baseline,
    two_site_coefficients,
    v_function,
    zone_scan,
)
from .experiments import (  # noqa: E402
    ExperimentConfig,
    ExperimentRow,
    SummaryRow,
    config_from_manifest,
    derive_replicate_seed,
    emit_manifest,
    run_experiment,
    run_experiment_to_dir,
)

__all__ = [name for name in dir() if not name.startswith("_")]
