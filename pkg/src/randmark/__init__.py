"""Randomized tightenings of classical tail bounds, and what they buy.

The package turns external randomization (one uniform draw, one batch of
permutations) into strictly smaller rejection thresholds and shorter
confidence intervals while keeping every stated error guarantee: scalar
threshold rules, randomized tail bounds, path-crossing rules for
nonnegative martingales, e-value combination, split-likelihood mixture
tests, betting-based mean inference, and a deterministic simulation
harness with a CSV-writing command line.
"""

from .betting import (
    BettingRule,
    TwoSidedWealth,
    betting_reject,
    default_strategy_lambda,
    invert_mean_ci,
    wealth_paths,
)
from .evalues import CombinationRule, combine_dependent, mway_reject, mway_ustat
from .experiments import (
    CSV_SCHEMAS,
    EXPERIMENT_IDS,
    ExperimentConfig,
    ResultRow,
    run_betting_power_experiment,
    run_evalue_power_experiment,
    run_experiment,
    run_gaussian_ci_experiment,
    run_ui_power_experiment,
)
from .markov import (
    Decision,
    MonotonePair,
    ami_reject,
    e_to_p,
    emi_reject,
    eumi_reject,
    mi_reject,
    randomized_tail_threshold,
    umi_reject,
)
from .normal import norm_ppf
from .rand_core import (
    RngStream,
    beta_block,
    gaussian_block,
    make_rng,
    random_permutation,
    rank_randomizer,
    sample_ar1_toeplitz,
    substream,
    uniform01,
    uniform_block,
)
from .tail_bounds import (
    ConfidenceInterval,
    bernstein_threshold,
    cantelli_threshold,
    chebyshev_ci,
    empirical_bernstein_ci,
    hoeffding_ci,
)
from .universal_inference import (
    MixtureFit,
    SplitEValue,
    UiRule,
    em_fit_two_component,
    goffinet_lrt_reject,
    split_evalues_block,
    split_lrt,
    ui_reject,
)
from .ville import (
    ReverseAverageMonitor,
    WealthPath,
    randomized_ville_reject,
    reverse_avg_monitor,
    ville_first_crossing,
)

__version__ = "0.1.0"

__all__ = [
    "BettingRule",
    "CSV_SCHEMAS",
    "CombinationRule",
    "ConfidenceInterval",
    "Decision",
    "EXPERIMENT_IDS",
    "ExperimentConfig",
    "MixtureFit",
    "MonotonePair",
    "ResultRow",
    "ReverseAverageMonitor",
    "RngStream",
    "SplitEValue",
    "TwoSidedWealth",
    "UiRule",
    "WealthPath",
    "ami_reject",
    "bernstein_threshold",
    "beta_block",
    "betting_reject",
    "cantelli_threshold",
    "chebyshev_ci",
    "combine_dependent",
    "default_strategy_lambda",
    "e_to_p",
    "em_fit_two_component",
    "emi_reject",
    "empirical_bernstein_ci",
    "eumi_reject",
    "gaussian_block",
    "goffinet_lrt_reject",
    "hoeffding_ci",
    "invert_mean_ci",
    "make_rng",
    "mi_reject",
    "mway_reject",
    "mway_ustat",
    "norm_ppf",
    "random_permutation",
    "randomized_tail_threshold",
    "randomized_ville_reject",
    "rank_randomizer",
    "reverse_avg_monitor",
    "run_betting_power_experiment",
    "run_evalue_power_experiment",
    "run_experiment",
    "run_gaussian_ci_experiment",
    "run_ui_power_experiment",
    "sample_ar1_toeplitz",
    "split_evalues_block",
    "split_lrt",
    "substream",
    "ui_reject",
    "umi_reject",
    "uniform01",
    "uniform_block",
    "ville_first_crossing",
    "wealth_paths",
]
