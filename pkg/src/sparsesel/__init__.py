"""
sparsesel: information-criterion model selection for sparse linear regression.

The package scores candidate supports with BIC, EBIC, EFIC and the
scale-invariant EBIC_R, builds candidate paths with OMP, a LASSO homotopy
or exhaustive enumeration, and estimates the probability of correct model
selection (PCMS) by Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .core import Dataset, FitResult, Support, as_support, gram_logdet, null_variance, ols_fit, projection_energy
from .criteria import (CriterionKind, CriterionScore, CriterionSpec, log_binomial, score, score_bic,
                       score_difference, score_ebic, score_ebic_r, score_efic, score_support)
from .errors import (AllCandidatesFailed, ConfigError, DataError, DegenerateResidual, NoSuchCardinality,
                     RankDeficient, SparseSelError, TooLarge)
from .selectors import (CandidatePath, PathSource, SelectionResult, default_k_max, exhaustive_path, lars_path,
                        omp_path, run_selector, select, select_many)
from .simlab import (Axis, GeneratorConfig, SweepResult, TrialRecord, draw_trial, generate_trial, oracle_select,
                     run_sweep)

__all__ = [
    "__version__",
    "Dataset", "FitResult", "Support", "as_support", "gram_logdet", "null_variance", "ols_fit", "projection_energy",
    "CriterionKind", "CriterionScore", "CriterionSpec", "log_binomial", "score", "score_bic", "score_difference",
    "score_ebic", "score_ebic_r", "score_efic", "score_support",
    "AllCandidatesFailed", "ConfigError", "DataError", "DegenerateResidual", "NoSuchCardinality", "RankDeficient",
    "SparseSelError", "TooLarge",
    "CandidatePath", "PathSource", "SelectionResult", "default_k_max", "exhaustive_path", "lars_path", "omp_path",
    "run_selector", "select", "select_many",
    "Axis", "GeneratorConfig", "SweepResult", "TrialRecord", "draw_trial", "generate_trial", "oracle_select",
    "run_sweep",
]
