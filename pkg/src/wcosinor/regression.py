"""Weighted and unweighted least-squares fitting of the harmonic model.

The estimate minimizes sum_i w_i (y_i - theta^T f(x_i))^2 (uniform
weights give ordinary least squares), with the noise variance estimated
as N / ((N - 2K - 1) * sum_j w_j) * sum_i w_i r_i^2.  All formulas are
invariant to rescaling the weight vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as _la

from .basis import basis_matrix, n_params, validate_order
from .errors import (
    DegenerateDesignError,
    InsufficientDataError,
    InvalidArgumentError,
)

# Condition-number ceiling for the information matrix before the design
# is declared degenerate.
_COND_LIMIT = 1e12


@dataclass
class TrigFit:
    """A fitted order-k harmonic regression.

    Attributes
    ----------
    theta : ndarray, shape (2k+1,)
        Coefficients: intercept, then (sin, cos) pairs per harmonic.
    sigma2 : float
        Estimated noise variance (>= 0).
    info : ndarray
        Normalized weighted information matrix used by the fit.
    weights : ndarray
        Normalized weights actually applied (uniform for the unweighted
        fit); sums to 1.
    n : int
        Sample count.
    k : int
        Harmonic order.
    """

    theta: np.ndarray
    sigma2: float
    info: np.ndarray
    weights: np.ndarray
    n: int
    k: int


def _prepare_design(times_hours, weights, k, allow_high_order):
    k = validate_order(k, allow_high_order)
    t = np.asarray(times_hours, dtype=float)
    if t.ndim != 1:
        raise InvalidArgumentError("times must be a 1-D array")
    n = t.size
    p = n_params(k)
    if n <= p:
        raise InsufficientDataError(
            f"need more than {p} samples for an order-{k} fit, got {n}"
        )
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != t.shape:
            raise InvalidArgumentError("weights must match times in length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgumentError("weights must be finite and nonnegative")
        if w.sum() <= 0:
            raise InvalidArgumentError("weights must not all be zero")
    b = basis_matrix(t, k, allow_high_order)
    sw = w.sum()
    m = (b * w[:, None]).T @ b / sw
    m = 0.5 * (m + m.T)
    if np.linalg.cond(m) > _COND_LIMIT:
        raise DegenerateDesignError(
            "information matrix is numerically singular for this design"
        )
    try:
        factor = _la.cho_factor(m)
    except _la.LinAlgError as exc:
        raise DegenerateDesignError(
            "information matrix is not positive definite"
        ) from exc
    return k, t, w, b, sw, m, factor


def _solve_gene(y, w, b, sw, factor, n, p):
    rhs = b.T @ (w * y) / sw
    theta = _la.cho_solve(factor, rhs)
    resid = y - b @ theta
    sigma2 = n / ((n - p) * sw) * float(np.sum(w * resid * resid))
    return theta, max(sigma2, 0.0)


def fit(times_hours, y, weights=None, k=1, allow_high_order=False):
    """Fit one response vector.

    Parameters
    ----------
    times_hours : array-like, shape (N,)
        Sample times in hours.
    y : array-like, shape (N,)
        Responses.
    weights : array-like or None
        Nonnegative sample weights; None means uniform.
    k : int
        Harmonic order.

    Returns
    -------
    TrigFit

    Raises
    ------
    InsufficientDataError
        If N <= 2k + 1 (the variance denominator would vanish).
    DegenerateDesignError
        If the weighted information matrix is numerically singular.
    """
    k, t, w, b, sw, m, factor = _prepare_design(times_hours, weights, k, allow_high_order)
    yv = np.asarray(y, dtype=float)
    if yv.shape != t.shape:
        raise InvalidArgumentError("y must match times in length")
    if not np.all(np.isfinite(yv)):
        raise InvalidArgumentError("responses must be finite")
    theta, sigma2 = _solve_gene(yv, w, b, sw, factor, t.size, n_params(k))
    return TrigFit(theta=theta, sigma2=sigma2, info=m, weights=w / sw, n=t.size, k=k)


def fit_panel(times_hours, y_matrix, weights=None, k=1, allow_high_order=False):
    """Fit every row of a (G, N) response matrix against shared times.

    The information matrix is factored once and reused; each gene then
    goes through exactly the same solve as ``fit``, so the results match
    gene-by-gene fitting bit for bit.
    """
    k, t, w, b, sw, m, factor = _prepare_design(times_hours, weights, k, allow_high_order)
    ym = np.asarray(y_matrix, dtype=float)
    if ym.ndim == 1:
        ym = ym[None, :]
    if ym.shape[1] != t.size:
        raise InvalidArgumentError(
            f"response matrix has {ym.shape[1]} columns for {t.size} times"
        )
    if not np.all(np.isfinite(ym)):
        raise InvalidArgumentError("responses must be finite")
    p = n_params(k)
    w_norm = w / sw
    fits = []
    for g in range(ym.shape[0]):
        theta, sigma2 = _solve_gene(ym[g], w, b, sw, factor, t.size, p)
        fits.append(
            TrigFit(theta=theta, sigma2=sigma2, info=m, weights=w_norm, n=t.size, k=k)
        )
    return fits


def fit_variance(trig_fit):
    """Coefficient covariance sigma2 * info^{-1} for a fitted model.

    Returns a symmetric PSD matrix; a zero noise estimate gives the zero
    matrix.
    """
    m = np.asarray(trig_fit.info, dtype=float)
    if np.linalg.cond(m) > _COND_LIMIT:
        raise DegenerateDesignError("information matrix is numerically singular")
    try:
        factor = _la.cho_factor(m)
    except _la.LinAlgError as exc:
        raise DegenerateDesignError(
            "information matrix is not positive definite"
        ) from exc
    inv = _la.cho_solve(factor, np.eye(m.shape[0]))
    v = trig_fit.sigma2 * inv
    return 0.5 * (v + v.T)
