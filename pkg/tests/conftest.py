import numpy as np
import pytest

import mbur


@pytest.fixture(scope="session")
def oecd():
    return mbur.load_builtin_oecd()


@pytest.fixture(scope="session")
def oecd_design(oecd):
    return mbur.DesignMatrix.with_intercept(oecd.covariates, names=list(oecd.names[1:]))


def simulate_regression(beta, u, link, n, seed, x_low=-1.2, x_high=0.7):
    """Draw (X, y) from the model itself.

    The bounded covariate range keeps the implied theta moderate so that
    draws stay clear of the 1e-12 boundary fence; the final clip is a safety
    net that fires with probability well under 1/n for the configs used here.
    """
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    Z = rng.uniform(x_low, x_high, size=(n, beta.size - 1))
    X = mbur.DesignMatrix.with_intercept(Z)
    spec = mbur.QuantileSpec(u, link)
    theta = mbur.theta_from_phi(spec, X.X @ beta)
    uu = rng.uniform(size=n)
    a = np.arccos(1.0 - 2.0 * uu) / 3.0
    c = 0.5 - 0.5 * (np.cos(a) - np.sqrt(3.0) * np.sin(a))
    y = np.exp(theta * np.log(c))
    return X, np.clip(y, 1e-11, 1.0 - 1e-11), spec
