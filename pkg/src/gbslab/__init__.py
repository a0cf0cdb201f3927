"""Desk-scale Gaussian boson sampling laboratory.

Simulates squeezed-light threshold-detection experiments exactly: Gaussian
covariance calculus, hafnian/torontonian/permanent kernels, exact click
distributions, chain-rule sampling with arithmetic instrumentation,
hypothesis-test validation statistics, and sampling-driven max-hafnian
subgraph search.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DecompositionError,
    GbsLabError,
    GuardError,
    KernelConsistencyError,
    UnphysicalStateError,
)
from .gaussian import (
    EfficiencySpec,
    GaussianState,
    Interferometer,
    SingleModeSqueezerSpec,
    SqueezerSpec,
    apply_interferometer,
    apply_loss,
    apply_single_mode_squeezer,
    apply_two_mode_squeezer,
    load_unitary_file,
    random_unitary,
    sampling_matrix,
    save_unitary_file,
    thermal_state,
    thermalize,
    threshold_kernel,
    vacuum,
)
from .matrixfn import (
    brute_force_hafnian,
    brute_force_permanent,
    brute_force_torontonian,
    hafnian,
    permanent,
    torontonian,
)
from .sampling import (
    ClickDistribution,
    ClickPattern,
    OpCounter,
    chain_rule_sample,
    chain_rule_sample_masks,
    derive_rng,
    distinguishable_distribution,
    distinguishable_sample_masks,
    empirical_distribution,
    exact_distribution,
    pattern_probability,
    uniform_distribution,
    uniform_sample,
)
from .validation import (
    LrtTrace,
    MetricReport,
    expected_lrt_drift,
    likelihood_ratio_test,
    metric_report,
    similarity,
    sorted_overlay,
    tvd,
)
from .maxhaf import (
    GraphEncoding,
    SearchCurve,
    WeightedGraph,
    brute_force_max_haf,
    encode_graph,
    load_graph_file,
    random_search,
    save_graph_file,
    takagi,
)
from .config import ExperimentConfig, MaxHafSettings, config_from_dict, load_config

__all__ = [
    "__version__",
    "ConfigError",
    "DecompositionError",
    "GbsLabError",
    "GuardError",
    "KernelConsistencyError",
    "UnphysicalStateError",
    "EfficiencySpec",
    "GaussianState",
    "Interferometer",
    "SingleModeSqueezerSpec",
    "SqueezerSpec",
    "apply_interferometer",
    "apply_loss",
    "apply_single_mode_squeezer",
    "apply_two_mode_squeezer",
    "load_unitary_file",
    "random_unitary",
    "sampling_matrix",
    "save_unitary_file",
    "thermal_state",
    "thermalize",
    "threshold_kernel",
    "vacuum",
    "brute_force_hafnian",
    "brute_force_permanent",
    "brute_force_torontonian",
    "hafnian",
    "permanent",
    "torontonian",
    "ClickDistribution",
    "ClickPattern",
    "OpCounter",
    "chain_rule_sample",
    "chain_rule_sample_masks",
    "derive_rng",
    "distinguishable_distribution",
    "distinguishable_sample_masks",
    "empirical_distribution",
    "exact_distribution",
    "pattern_probability",
    "uniform_distribution",
    "uniform_sample",
    "LrtTrace",
    "MetricReport",
    "expected_lrt_drift",
    "likelihood_ratio_test",
    "metric_report",
    "similarity",
    "sorted_overlay",
    "tvd",
    "GraphEncoding",
    "SearchCurve",
    "WeightedGraph",
    "brute_force_max_haf",
    "encode_graph",
    "load_graph_file",
    "random_search",
    "save_graph_file",
    "takagi",
    "ExperimentConfig",
    "MaxHafSettings",
    "config_from_dict",
    "load_config",
]
