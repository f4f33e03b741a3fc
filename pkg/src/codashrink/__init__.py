"""Co-data guided adaptive shrinkage for high-dimensional linear regression.

Empirical-Bayes ridge penalties driven by feature-level co-data, transferred
to a group-adaptive lasso or to spike-and-slab inclusion probabilities.
"""

__version__ = "0.1.0"

from .codata import (CoDataError, CoDataMatrix, CoDataSource, Dataset, GroupStructure,
                     encode_codata, to_group_structure)
from .lasso import group_adaptive_lasso, lasso_select
from .metrics import f1_at, roc
from .ridge_eb import (PenaltyFit, ShrinkConfig, fit_codata_alpha, fit_single_penalty,
                       log_marglik)
from .sgl import sgl_path_select
from .spike_slab import SSPrior, elbo, guided_ss_pipeline, vb_fit
from .transfer import ridge_to_inclusion_probs, ridge_to_lasso_rates

__all__ = [
    "CoDataError", "CoDataMatrix", "CoDataSource", "Dataset", "GroupStructure",
    "encode_codata", "to_group_structure", "group_adaptive_lasso", "lasso_select",
    "f1_at", "roc", "PenaltyFit", "ShrinkConfig", "fit_codata_alpha",
    "fit_single_penalty", "log_marglik", "sgl_path_select", "SSPrior", "elbo",
    "guided_ss_pipeline", "vb_fit", "ridge_to_inclusion_probs", "ridge_to_lasso_rates",
]
