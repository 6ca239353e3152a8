"""Median Based Unit Rayleigh distribution and parametric quantile regression.

Public surface:

* :mod:`mbur.distribution` -- the one-parameter family on (0, 1)
* :mod:`mbur.links` -- quantile constants c(u) and the logit / log-log links
* :mod:`mbur.regression` -- reparameterized likelihood, score, damped
  Gauss-Newton fitting, prediction
* :mod:`mbur.diagnostics` -- residuals, KS testing, information criteria,
  pseudo R^2, distance correlation
* :mod:`mbur.dataio` -- embedded OECD dataset and CSV ingestion
* :mod:`mbur.cli` -- the ``mbur`` command
"""

__version__ = "0.1.0"

from .dataio import Dataset, describe, load_builtin_oecd, load_csv
from .diagnostics import (DiagnosticsReport, ReferenceDist, build_report,
                          cs_residuals, distance_correlation, info_criteria,
                          ks_test, norm_ppf, qq_points, r_squared_m,
                          rq_residuals)
from .distribution import (DistFit, MburParam, cdf, fit_mle, log_likelihood,
                           log_pdf, pdf, quantile, sample)
from .links import (Link, QuantileSpec, compute_c, link_apply, link_inverse,
                    theta_from_phi)
from .regression import (DesignMatrix, FitResult, LmConfig, lm_fit, neg_loglik,
                         predict_quantile, quantile_change_series, score,
                         vcov_of)

__all__ = [
    "__version__",
    "Dataset", "describe", "load_builtin_oecd", "load_csv",
    "DiagnosticsReport", "ReferenceDist", "build_report", "cs_residuals",
    "distance_correlation", "info_criteria", "ks_test", "norm_ppf",
    "qq_points", "r_squared_m", "rq_residuals",
    "DistFit", "MburParam", "cdf", "fit_mle", "log_likelihood", "log_pdf",
    "pdf", "quantile", "sample",
    "Link", "QuantileSpec", "compute_c", "link_apply", "link_inverse",
    "theta_from_phi",
    "DesignMatrix", "FitResult", "LmConfig", "lm_fit", "neg_loglik",
    "predict_quantile", "quantile_change_series", "score", "vcov_of",
]
