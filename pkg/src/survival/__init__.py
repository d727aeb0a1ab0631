"""
Survival math: Cox losses, CoxPH baseline, concordance and bootstrap intervals.
"""

from .cox import BaselineHazard, SurvivalOutcome, breslow_baseline, cox_loss_exact, cox_loss_fast, cox_loss_grad  # noqa: F401
from .coxph import CoxPHModel, coxph_fit, coxph_subgroup  # noqa: F401
from .metrics import EvalReport, bootstrap_ci, concordance_index  # noqa: F401
