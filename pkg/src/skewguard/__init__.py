"""skewguard: robust minority oversampling for imbalanced classification.

robROSE (outlier-aware, covariance-shaped kernel oversampling) alongside
SMOTE and ROSE, the FastMCD estimator it relies on, logistic regression,
imbalance-aware metrics and a reproducible simulation benchmark.
"""
__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .classify import LogitModel, fit_logit, predict_proba
from .dataio import Dataset, ScalingSpec, apply_scaling, fit_scaling, read_csv, write_csv
from .mcd import RobustFit, c_step, fast_mcd, mahalanobis_sq
from .metrics import ConfusionMatrix, CurveReport, confusion, pr_auprc, roc_auc, summary_stats
from .numkit import RngStream, chi2_quantile, cholesky, mvn_sample, solve_lower
from .resample import (
    OversampleConfig,
    OversampleResult,
    flag_outliers,
    rebalance,
    rob_rose,
    rose,
    smote,
    smoothing_constant,
)

__all__ = [
    "KERNEL_BACKEND", "LogitModel", "fit_logit", "predict_proba", "Dataset", "ScalingSpec",
    "apply_scaling", "fit_scaling", "read_csv", "write_csv", "RobustFit", "c_step",
    "fast_mcd", "mahalanobis_sq", "ConfusionMatrix", "CurveReport", "confusion",
    "pr_auprc", "roc_auc", "summary_stats", "RngStream", "chi2_quantile", "cholesky",
    "mvn_sample", "solve_lower", "OversampleConfig", "OversampleResult", "flag_outliers",
    "rebalance", "rob_rose", "rose", "smote", "smoothing_constant",
]
