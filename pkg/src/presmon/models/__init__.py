from .ensemble import (
    BaggedTreeEnsemble,
    DecisionTree,
    PredictiveEstimate,
    binary_entropy,
    fit_ensemble,
    predictive_estimate,
)
from .cox import CoxModel, SurvivalEstimate, cox_gradient, cox_loglik, fit_cox, predict_iw
from .tlearner import CausalEstimate, TLearner, fit_tlearner, predict_te

__all__ = [
    "DecisionTree",
    "BaggedTreeEnsemble",
    "PredictiveEstimate",
    "binary_entropy",
    "fit_ensemble",
    "predictive_estimate",
    "CoxModel",
    "SurvivalEstimate",
    "fit_cox",
    "cox_loglik",
    "cox_gradient",
    "predict_iw",
    "CausalEstimate",
    "TLearner",
    "fit_tlearner",
    "predict_te",
]
