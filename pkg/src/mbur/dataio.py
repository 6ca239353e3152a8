"""Embedded OECD Better Life dataset and generic CSV ingestion.

The builtin table pairs the share of dwellings without basic facilities
(percent, later scaled to (0, 1)) with the long-term unemployment rate for
27 countries.  Two truncated country names in the original source are stored
in full (Luxembourg, Netherlands).
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Dataset", "OECD_TABLE", "load_builtin_oecd", "load_csv", "describe"]

# (country, index, dwellings without basic facilities %, long-term unemployment rate)
OECD_TABLE = (
    ("Austria", 1, 0.8, 1.3),
    ("Belgium", 2, 0.7, 2.3),
    ("Canada", 3, 0.2, 0.5),
    ("Colombia", 4, 12.3, 1.1),
    ("Costa Rica", 5, 2.3, 1.5),
    ("Czechia", 6, 0.5, 0.6),
    ("Denmark", 7, 0.5, 0.9),
    ("Estonia", 8, 5.7, 1.2),
    ("Finland", 9, 0.4, 1.2),
    ("France", 10, 0.5, 2.9),
    ("Germany", 11, 0.1, 1.2),
    ("Hungary", 12, 3.5, 1.2),
    ("Ireland", 13, 0.2, 1.2),
    ("Italy", 14, 0.6, 4.8),
    ("Japan", 15, 6.4, 0.8),
    ("Latvia", 16, 11.2, 2.2),
    ("Lithuania", 17, 11.8, 2.5),
    ("Luxembourg", 18, 0.1, 1.7),
    ("Netherlands", 19, 0.1, 0.9),
    ("Poland", 20, 2.3, 0.6),
    ("Portugal", 21, 0.9, 2.3),
    ("Slovak Republic", 22, 1.5, 3.0),
    ("Slovenia", 23, 0.2, 1.9),
    ("Spain", 24, 0.3, 5.0),
    ("Türkiye", 25, 4.9, 3.3),
    ("UK", 26, 0.5, 0.9),
    ("USA", 27, 0.1, 0.5),
)

RESPONSE_NAME = "dwellings_without_basic_facilities"
PREDICTOR_NAME = "long_term_unemployment_rate"


@dataclass(frozen=True)
class Dataset:
    """Response in (0, 1) plus covariates (intercept excluded)."""

    names: tuple
    response: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.response, dtype=float).ravel()
        Z = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        if Z.shape[0] != y.size and Z.shape[1] == y.size:
            Z = Z.T
        if y.size == 0:
            raise ValueError("empty dataset")
        if np.any(~np.isfinite(y)) or (y.size and (y.min() <= 0.0 or y.max() >= 1.0)):
            idx = int(np.flatnonzero(~np.isfinite(y) | (y <= 0.0) | (y >= 1.0))[0])
            raise ValueError(f"response must lie strictly inside (0, 1); "
                             f"row {idx + 1} has value {y[idx]!r}")
        if np.any(~np.isfinite(Z)):
            raise ValueError("covariates contain non-finite values")
        if Z.shape[0] != y.size:
            raise ValueError(f"covariate rows {Z.shape[0]} do not match response length {y.size}")
        names = tuple(self.names)
        if len(names) != 1 + Z.shape[1]:
            raise ValueError("names must label the response and every covariate")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "covariates", Z)

    @property
    def n(self) -> int:
        return self.response.size

    def to_csv(self, path) -> None:
        """Write response and covariates with a header row."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            for i in range(self.n):
                writer.writerow([repr(float(self.response[i]))]
                                + [repr(float(v)) for v in self.covariates[i]])


def load_builtin_oecd(log_predictor: bool = True) -> Dataset:
    """Builtin 27-row dataset: response scaled by 1/100, predictor optionally logged."""
    y = np.array([row[2] for row in OECD_TABLE]) / 100.0
    x = np.array([row[3] for row in OECD_TABLE])
    if log_predictor:
        return Dataset((RESPONSE_NAME, "log_" + PREDICTOR_NAME), y, np.log(x)[:, None])
    return Dataset((RESPONSE_NAME, PREDICTOR_NAME), y, x[:, None])


def load_csv(path, response_col: str, covariate_cols, scale_response: float = None,
             log_covariates=None) -> Dataset:
    """Read a comma-separated file (header required, UTF-8, '.' decimal).

    Any row with a non-numeric cell in a used column is rejected with a
    row-indexed error, as is any response outside (0, 1) after scaling.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    covariate_cols = list(covariate_cols)
    if log_covariates is None:
        log_covariates = [False] * len(covariate_cols)
    if len(log_covariates) != len(covariate_cols):
        raise ValueError("log_covariates flags must match covariate_cols")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: missing header row")
        for col in [response_col, *covariate_cols]:
            if col not in reader.fieldnames:
                raise ValueError(f"{path}: column {col!r} not found "
                                 f"(have {', '.join(reader.fieldnames)})")
        ys, zs = [], []
        for i, row in enumerate(reader, start=1):
            vals = {}
            for col in [response_col, *covariate_cols]:
                cell = (row.get(col) or "").strip()
                try:
                    vals[col] = float(cell)
                except ValueError:
                    raise ValueError(f"{path}: row {i}: non-numeric value {cell!r} "
                                     f"in column {col!r}") from None
            yv = vals[response_col]
            if scale_response:
                yv /= scale_response
            if not (0.0 < yv < 1.0):
                raise ValueError(f"{path}: row {i}: response {yv!r} outside (0, 1) "
                                 "after scaling")
            covs = []
            for col, take_log in zip(covariate_cols, log_covariates):
                v = vals[col]
                if take_log:
                    if v <= 0.0:
                        raise ValueError(f"{path}: row {i}: cannot log non-positive "
                                         f"value {v!r} in column {col!r}")
                    v = math.log(v)
                covs.append(v)
            ys.append(yv)
            zs.append(covs)
    if not ys:
        raise ValueError(f"{path}: no data rows (header only)")
    names = [response_col] + [("log_" + c if lg else c)
                              for c, lg in zip(covariate_cols, log_covariates)]
    return Dataset(tuple(names), np.array(ys), np.array(zs))


_QUARTILE_METHODS = {"linear": "linear", "hazen": "hazen", "nearest": "inverted_cdf"}


def describe(y, quartile_method: str = "linear") -> dict:
    """Moment statistics and quartiles of a sample.

    Standard deviation uses the n-1 denominator.  Skewness and kurtosis are
    the bias-corrected estimators, kurtosis on the raw (non-excess) scale, so
    a normal sample centers on 3.  Constant input yields sd 0 with NaN
    markers for the shape statistics.  Quartile methods: 'linear'
    (interpolated order statistics, the default), 'hazen', 'nearest'.
    """
    if quartile_method not in _QUARTILE_METHODS:
        raise ValueError(f"unknown quartile method {quartile_method!r}")
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    mean = float(y.mean())
    sd = float(y.std(ddof=1))
    if sd == 0.0:
        skew = kurt = math.nan
    else:
        d = y - mean
        m2 = float((d**2).mean())
        g1 = float((d**3).mean()) / m2**1.5
        g2 = float((d**4).mean()) / m2**2
        skew = g1 * math.sqrt(n * (n - 1)) / (n - 2) if n > 2 else math.nan
        if n > 3:
            kurt = ((n + 1) * g2 - 3 * (n - 1)) * (n - 1) / ((n - 2) * (n - 3)) + 3.0
        else:
            kurt = math.nan
    q1, q2, q3 = np.quantile(y, [0.25, 0.5, 0.75],
                             method=_QUARTILE_METHODS[quartile_method])
    return {"mean": mean, "sd": sd, "skewness": skew, "kurtosis": kurt,
            "min": float(y.min()), "q1": float(q1), "q2": float(q2),
            "q3": float(q3), "max": float(y.max())}
