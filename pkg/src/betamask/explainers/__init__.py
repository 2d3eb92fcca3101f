from .baseline import (BaselineConfig, BaselineResult, fit_baseline,
                       random_mask_baseline)
from .beta_mask import (BetaEdgeParams, EmaBaseline, ExplainerConfig,
                        ExplanationReport, capture_target, ecdf, elbo_step,
                        fit, likelihood_term, score_function_step)

__all__ = [
    "BaselineConfig",
    "BaselineResult",
    "BetaEdgeParams",
    "EmaBaseline",
    "ExplainerConfig",
    "ExplanationReport",
    "capture_target",
    "ecdf",
    "elbo_step",
    "fit",
    "fit_baseline",
    "likelihood_term",
    "random_mask_baseline",
    "score_function_step",
]
