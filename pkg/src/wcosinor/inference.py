"""Rhythmicity tests: Wald and F statistics with p-values, batched
screening over a gene panel, and the closed-form variance block for
von-Mises-distributed collection times used as an analytic reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .basis import basis_matrix, n_params
from .errors import DegenerateDesignError, InsufficientDataError, InvalidArgumentError
from .design import validate_weights
from .regression import fit_panel, fit_variance
from .special import bessel_i, chi2_sf, f_sf

F_MODE_PAPER = "paper"
F_MODE_CLASSICAL = "classical"
_F_MODES = (F_MODE_PAPER, F_MODE_CLASSICAL)

# Sums of squares at or below this fraction of the weighted mean square
# of the response are indistinguishable from rounding noise in doubles
# and are treated as exact zeros.
_RELATIVE_ZERO = 1e-24


def _zero_floor(weights, y):
    return _RELATIVE_ZERO * max(float(np.sum(weights * y * y)), 1e-300)


class WaldResult(NamedTuple):
    stat: float
    df: int
    p: float


class FTestResult(NamedTuple):
    stat: float
    d1: int
    d2: int
    p: float
    undefined: bool


@dataclass(frozen=True)
class TestReport:
    """Per-gene test outcome; ``flags`` records any degeneracies."""

    gene_id: str
    wald_stat: float
    wald_df: int
    wald_p: float
    f_stat: float
    f_d1: int
    f_d2: int
    f_p: float
    flags: tuple = ()


def wald_test(trig_fit, variance):
    """Wald statistic N * gamma^T [Var_gg]^{-1} gamma for the null that
    every non-intercept coefficient is zero.

    ``variance`` is the full coefficient covariance; its non-intercept
    block is inverted here.  The statistic has 2k degrees of freedom.

    Raises
    ------
    DegenerateDesignError
        If the covariance block is singular.
    """
    v = np.asarray(variance, dtype=float)
    p = n_params(trig_fit.k)
    if v.shape != (p, p):
        raise InvalidArgumentError(f"variance must be {p}x{p}, got {v.shape}")
    gamma = np.asarray(trig_fit.theta, dtype=float)[1:]
    vgg = v[1:, 1:]
    cond = np.linalg.cond(vgg)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateDesignError("variance block for the harmonic terms is singular")
    stat = trig_fit.n * float(gamma @ np.linalg.solve(vgg, gamma))
    stat = max(stat, 0.0)
    df = 2 * trig_fit.k
    return WaldResult(stat=stat, df=df, p=chi2_sf(stat, df))


def f_test(times_hours, y, weights, trig_fit, mode=F_MODE_PAPER):
    """Weighted F statistic for rhythm detection.

    The numerator averages, with the given normalized weights, the gap
    between squared deviations from the weighted mean and squared
    residuals, divided by 2k.  The default mode divides by the weighted
    total sum of squares (degrees of freedom 2k-1 and N-2k-1); the
    "classical" mode divides by the weighted residual sum of squares
    (degrees of freedom 2k and N-2k-1).

    A zero denominator (constant response) is reported as an undefined
    statistic: stat 0, p 1, ``undefined=True``.
    """
    if mode not in _F_MODES:
        raise InvalidArgumentError(f"mode must be one of {_F_MODES}, got {mode!r}")
    t = np.asarray(times_hours, dtype=float)
    yv = np.asarray(y, dtype=float)
    if t.shape != yv.shape or t.ndim != 1:
        raise InvalidArgumentError("times and y must be matching 1-D arrays")
    n = t.size
    k = trig_fit.k
    p = n_params(k)
    if n <= p:
        raise InsufficientDataError(f"need more than {p} samples, got {n}")
    w = validate_weights(weights, n)

    b = basis_matrix(t, k, allow_high_order=True)
    ybar = float(np.sum(w * yv))
    tss_terms = (yv - ybar) ** 2
    rss_terms = (yv - b @ np.asarray(trig_fit.theta)) ** 2
    num = float(np.sum(w * (tss_terms - rss_terms))) / (2 * k)
    d2 = n - p
    if mode == F_MODE_PAPER:
        denom_ss = float(np.sum(w * tss_terms))
        d1 = 2 * k - 1
    else:
        denom_ss = float(np.sum(w * rss_terms))
        d1 = 2 * k
    if denom_ss <= _zero_floor(w, yv):
        return FTestResult(stat=0.0, d1=d1, d2=d2, p=1.0, undefined=True)
    stat = max(num / (denom_ss / d2), 0.0)
    return FTestResult(stat=stat, d1=d1, d2=d2, p=f_sf(stat, d1, d2), undefined=False)


def bessel_variance_oracle():
    """Closed-form inverse variance block for first-order regression when
    collection angles follow a unit-concentration von Mises law.

    Returns the diagonal 2x2 matrix
    diag(1/2 - I2(1)/(2 I0(1)),
         1/2 + I2(1)/(2 I0(1)) - I1(1)^2 / I0(1)^2),
    approximately diag(0.446, 0.354).
    """
    i0 = bessel_i(0, 1.0)
    i1 = bessel_i(1, 1.0)
    i2 = bessel_i(2, 1.0)
    top = 0.5 - i2 / (2.0 * i0)
    bottom = 0.5 + i2 / (2.0 * i0) - (i1 / i0) ** 2
    return np.diag([top, bottom])


def _degenerate_wald(trig_fit, floor):
    """Flagged Wald outcome for a gene with no usable residual variance.

    Zero noise with a nonzero harmonic signal is infinitely significant;
    zero noise with no signal is a null result.
    """
    gamma = np.asarray(trig_fit.theta)[1:]
    df = 2 * trig_fit.k
    if float(np.sum(gamma * gamma)) <= floor:
        return WaldResult(stat=0.0, df=df, p=1.0)
    return WaldResult(stat=float("inf"), df=df, p=0.0)


def screen_panel(panel, weights=None, k=1, f_mode=F_MODE_PAPER, allow_high_order=False):
    """Run Wald and F tests for every gene in a panel.

    Fits share one factorization of the common information matrix.
    Genes whose statistics are undefined (zero residual variance,
    constant response) yield flagged reports instead of aborting the
    batch.

    Returns
    -------
    list of TestReport, in panel order.
    """
    times = np.asarray(panel.times, dtype=float)
    expr = np.asarray(panel.expr, dtype=float)
    if expr.ndim != 2 or expr.shape[1] != times.size:
        raise InvalidArgumentError("panel expression must be (genes, samples)")
    if expr.shape[0] < 1:
        raise InvalidArgumentError("panel has no genes")
    fits = fit_panel(times, expr, weights=weights, k=k, allow_high_order=allow_high_order)

    reports = []
    for g, (gene_id, gene_fit) in enumerate(zip(panel.gene_ids, fits)):
        flags = []
        floor = _zero_floor(gene_fit.weights, expr[g])
        if gene_fit.sigma2 <= floor:
            wald = _degenerate_wald(gene_fit, floor)
            flags.append("zero_variance")
        else:
            try:
                wald = wald_test(gene_fit, fit_variance(gene_fit))
            except DegenerateDesignError:
                wald = _degenerate_wald(gene_fit, floor)
                flags.append("zero_variance")
        ftr = f_test(times, expr[g], gene_fit.weights, gene_fit, mode=f_mode)
        if ftr.undefined:
            flags.append("undefined_f")
        reports.append(
            TestReport(
                gene_id=str(gene_id),
                wald_stat=wald.stat,
                wald_df=wald.df,
                wald_p=wald.p,
                f_stat=ftr.stat,
                f_d1=ftr.d1,
                f_d2=ftr.d2,
                f_p=ftr.p,
                flags=tuple(flags),
            )
        )
    return reports
