"""Quantile-level constants and link functions.

The base distribution (shape parameter equal to one) has CDF
``3c**2 - 2c**3`` on (0, 1).  For a chosen quantile level ``u`` the constant
``c(u)`` is the unique root of ``3c**2 - 2c**3 = u`` inside (0, 1), available
in closed trigonometric form.  A link function maps the linear predictor
``phi = x'beta`` to the modeled quantile ``mu`` and, through ``c(u)``, to the
distribution parameter ``theta = alpha**2``:

* logit:    mu = exp(phi)/(1 + exp(phi)),  theta = ln(mu)/ln(c)
* log-log:  mu = exp(-exp(phi)),           theta = -exp(phi)/ln(c)

Both links keep theta strictly positive for any finite phi.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = ["Link", "QuantileSpec", "compute_c", "link_inverse", "link_apply",
           "theta_from_phi"]

# c(u) degenerates as u approaches 0 or 1 (ln c -> 0 or -inf); levels beyond
# this window are rejected rather than silently clamped.
U_MIN = 1e-6
U_MAX = 1.0 - 1e-6

_SQRT3 = math.sqrt(3.0)
_TINY = np.finfo(float).tiny


class Link(str, Enum):
    """Supported link functions for the linear predictor."""

    LOGIT = "logit"
    LOGLOG = "loglog"


def _check_u(u: float) -> float:
    u = float(u)
    if not (U_MIN < u < U_MAX):
        raise ValueError(f"quantile level must lie in ({U_MIN}, {U_MAX}); got {u}")
    return u


def compute_c(u: float) -> float:
    """Quantile constant c(u): the root in (0, 1) of 3c^2 - 2c^3 = u.

    Evaluates the closed trigonometric form of the relevant cubic root,
    -0.5*(cos(A) - sqrt(3)*sin(A)) + 0.5 with A = arccos(1 - 2u)/3.
    """
    u = _check_u(u)
    a = math.acos(1.0 - 2.0 * u) / 3.0
    return -0.5 * (math.cos(a) - _SQRT3 * math.sin(a)) + 0.5


@dataclass(frozen=True)
class QuantileSpec:
    """A quantile level, its constant c(u), and the link in use."""

    u: float
    link: Link
    c: float = field(init=False)
    ln_c: float = field(init=False)

    def __post_init__(self):
        link = Link(self.link)
        object.__setattr__(self, "link", link)
        c = compute_c(self.u)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "ln_c", math.log(c))


def _log_sigmoid(phi):
    """log(exp(phi)/(1+exp(phi))), overflow-safe for any finite phi.

    For large positive phi this evaluates to -log1p(exp(-phi)) = -exp(-phi)
    to machine precision, which keeps ln(mu) strictly negative far into the
    tail instead of underflowing to zero early.
    """
    phi = np.asarray(phi, dtype=float)
    out = np.where(phi >= 0.0,
                   -np.log1p(np.exp(-np.abs(phi))),
                   phi - np.log1p(np.exp(np.where(phi < 0.0, phi, 0.0))))
    return out


def link_inverse(link: Link, phi):
    """Map a linear predictor to the modeled quantile in (0, 1)."""
    link = Link(link)
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("linear predictor must be finite")
    if link is Link.LOGIT:
        out = np.exp(_log_sigmoid(phi))
    else:
        out = np.exp(-np.exp(np.minimum(phi, 709.0)))
    out = np.clip(out, _TINY, 1.0 - np.finfo(float).epsneg)
    return float(out) if out.ndim == 0 else out


def link_apply(link: Link, q: float) -> float:
    """Forward link: the phi for which link_inverse(link, phi) == q."""
    link = Link(link)
    q = float(q)
    if not (0.0 < q < 1.0):
        raise ValueError(f"quantile value must lie in (0, 1); got {q}")
    if link is Link.LOGIT:
        return math.log(q / (1.0 - q))
    return math.log(-math.log(q))


def theta_from_phi(spec: QuantileSpec, phi):
    """Distribution parameter theta = alpha^2 implied by the predictor.

    Logit: theta = ln(mu)/ln(c); log-log: theta = -exp(phi)/ln(c).  ln(mu)
    (respectively exp(phi)) is floored at the smallest positive double so the
    result stays strictly positive for any finite phi.
    """
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("linear predictor must be finite")
    if spec.link is Link.LOGIT:
        ln_mu = np.minimum(_log_sigmoid(phi), -_TINY)
        out = ln_mu / spec.ln_c
    else:
        out = np.maximum(np.exp(phi), _TINY) / (-spec.ln_c)
    return float(out) if out.ndim == 0 else out
