"""Level sets of binary power sums, their proximity statistics, the associated
base-beta digit dynamics, and covering-based dimension estimates."""

from .expansion import (
    Interval,
    Lambda,
    LevelSet,
    LevelTooLargeError,
    as_lambda,
    collapse_check,
    enumerate_level,
    eval_word,
    g_map,
    gamma_witness,
    lambda_digits,
    lambda_interval,
    tau_estimate,
)
from .betashift import (
    Beta,
    CylinderStats,
    ExpansionOfOne,
    PerronResult,
    Sft,
    a_beta_membership,
    as_beta,
    beta_map,
    beta_orbit,
    count_words,
    cylinder_stats,
    expansion_of_one,
    forbidden_word_adjacency,
    greedy_digits,
    is_sft,
    multinacci,
    parry_admissible,
    perron_eigenvalue,
)

__version__ = "0.1.0"
