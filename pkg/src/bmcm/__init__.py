"""Boolean Monte Carlo Method: operator tendencies for multivariate binary data.

Assign ``and``/``or`` to the slots of a model template, tally which operators
reproduce the outcome, and collapse the chosen Boolean function into a 2x2
contingency table.
"""

__version__ = "0.1.0"

from .data import Dataset, NullClass, generate_dependent, generate_random, load_csv, read_csv
from .engine import decide_operators, run_exhaustive, run_sampled
from .expr import (
    ModelTemplate,
    Op,
    OperatorAssignment,
    enumerate_assignments,
    enumerate_models,
    evaluate,
    parse_template,
)
from .pipeline import RunConfig, run_full, step1_null, step2_model, step3_contingency
from .stats import Table2x2, binomial_chisq, chi2_sf, contingency_chisq, fisher_exact

__all__ = [
    "Dataset",
    "NullClass",
    "ModelTemplate",
    "Op",
    "OperatorAssignment",
    "RunConfig",
    "Table2x2",
    "binomial_chisq",
    "chi2_sf",
    "contingency_chisq",
    "decide_operators",
    "enumerate_assignments",
    "enumerate_models",
    "evaluate",
    "fisher_exact",
    "generate_dependent",
    "generate_random",
    "load_csv",
    "parse_template",
    "read_csv",
    "run_exhaustive",
    "run_full",
    "run_sampled",
    "step1_null",
    "step2_model",
    "step3_contingency",
]
