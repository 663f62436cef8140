"""Special functions used for inference: modified Bessel I, chi-squared
and F survival functions.

These wrap scipy.special (series/asymptotic implementations with full
double precision); the test suite checks them against independent
quadrature of the defining integrals.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

from .errors import InvalidArgumentError


def bessel_i(order, nu):
    """Modified Bessel function of the first kind, I_order(nu).

    Parameters
    ----------
    order : int
        Nonnegative integer order.
    nu : float
        Nonnegative argument.
    """
    if not isinstance(order, (int, np.integer)) or isinstance(order, bool) or order < 0:
        raise InvalidArgumentError(f"order must be a nonnegative integer, got {order!r}")
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise InvalidArgumentError(f"argument must be finite and >= 0, got {nu!r}")
    return float(_sp.iv(int(order), nu))


def bessel_i_scaled(order, nu):
    """exp(-nu) * I_order(nu); stays finite for large nu."""
    if not isinstance(order, (int, np.integer)) or isinstance(order, bool) or order < 0:
        raise InvalidArgumentError(f"order must be a nonnegative integer, got {order!r}")
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise InvalidArgumentError(f"argument must be finite and >= 0, got {nu!r}")
    return float(_sp.ive(int(order), nu))


def chi2_sf(x, df):
    """Chi-squared survival function P(X > x) via the regularized upper
    incomplete gamma function.

    Parameters
    ----------
    x : float
        Test statistic, >= 0 (infinity allowed; gives 0).
    df : int
        Positive integer degrees of freedom.
    """
    if not isinstance(df, (int, np.integer)) or isinstance(df, bool) or df <= 0:
        raise InvalidArgumentError(f"degrees of freedom must be a positive integer, got {df!r}")
    x = float(x)
    if math.isnan(x) or x < 0:
        raise InvalidArgumentError(f"statistic must be >= 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    return float(_sp.gammaincc(df / 2.0, x / 2.0))


def f_sf(x, d1, d2):
    """F-distribution survival function P(X > x) via the regularized
    incomplete beta function.

    Parameters
    ----------
    x : float
        Test statistic, >= 0 (infinity allowed; gives 0).
    d1, d2 : int
        Positive integer degrees of freedom.
    """
    for name, d in (("d1", d1), ("d2", d2)):
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d <= 0:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {d!r}")
    x = float(x)
    if math.isnan(x) or x < 0:
        raise InvalidArgumentError(f"statistic must be >= 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    # SF(x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2)
    u = d2 / (d2 + d1 * x)
    return float(_sp.betainc(d2 / 2.0, d1 / 2.0, u))
