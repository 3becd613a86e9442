"""Cost-aware selection of human annotators to team with a probabilistic classifier."""

from .confusion import DirichletPrior, estimate_accuracy, estimate_confusion, fit_profile
from .domain import (
    ConfusionMatrix,
    HumanProfile,
    InstanceRecord,
    ProbVector,
    SelectionOutcome,
    ValidationError,
    validate_instance,
)
from .estimation import max_max_estimate, posterior_estimate, random_estimate, top_k_estimate
from .fusion import CombinedPrediction, combine
from .selection import BudgetSpec, exhaustive_oracle, placo_greedy, placo_lp_select, pseudo_lb_select
from .valuation import ValueParams, human_value, lemma1_bounds, select_y_star

__version__ = "0.1.0"
