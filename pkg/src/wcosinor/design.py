"""Sample weights from reciprocal KDE densities, information matrices,
eigenvalue design criteria, and the concentration search that maximizes
the determinant criterion.

Weighting a design this way pushes the weighted information matrix
toward the equispaced ideal diag(1, 1/2, ..., 1/2), whose determinant
1/4^K is the best any nonnegative normalized weighting can achieve
(Hadamard bound, see ``d_optimal_bound``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .basis import basis_matrix, hours_to_angle, n_params, validate_order
from .errors import (
    DegenerateDesignError,
    InvalidArgumentError,
    SearchFailureError,
    SingularCriterionError,
)
from .kde import DENSITY_FLOOR, CircularKde, validate_folds

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def d_optimal_bound(k):
    """Largest determinant any weighted design can reach: 1/4^k."""
    k = validate_order(k, allow_high_order=True)
    return 0.25 ** k


def validate_weights(w, n=None):
    """Check the weight-vector contract: nonnegative, sums to 1 within 1e-12."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise InvalidArgumentError("weights must be a 1-D array")
    if n is not None and w.size != n:
        raise InvalidArgumentError(f"expected {n} weights, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be finite")
    if np.any(w < 0):
        raise InvalidArgumentError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def _normalize_reciprocals(densities):
    dens = np.maximum(np.asarray(densities, dtype=float), DENSITY_FLOOR)
    recip = 1.0 / dens
    total = recip.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateDesignError(
            "density underflow while normalizing reciprocal weights"
        )
    return recip / total


def compute_weights(times_hours, kde):
    """Normalized reciprocal-density weights w_i = (1/rho(x_i)) / sum_j (1/rho(x_j)).

    Samples collected at underrepresented times receive larger weights.
    """
    t = np.asarray(times_hours, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidArgumentError("need at least one sample time")
    if not isinstance(kde, CircularKde):
        raise InvalidArgumentError("kde must be a CircularKde")
    return _normalize_reciprocals(kde.density(t))


def _cv_densities(cos_diff, kappa, fold_of, fold_onehot, fold_sizes):
    """Fold-excluded KDE density of each sample at its own time.

    ``cos_diff[i, j]`` holds cos(z_i - z_j) for the sample angles; the
    density for sample i excludes every sample sharing its fold and
    normalizes by the remaining count.
    """
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 0:
        raise InvalidArgumentError(f"concentration must be > 0, got {kappa!r}")
    n = cos_diff.shape[0]
    scaled_norm = 2.0 * math.pi * float(_sp.ive(0, kappa))
    kmat = np.exp(kappa * (cos_diff - 1.0)) / scaled_norm
    rowsum = kmat.sum(axis=1)
    own_fold_sum = (kmat @ fold_onehot)[np.arange(n), fold_of]
    remaining = n - fold_sizes[fold_of]
    if np.any(remaining < 1):
        raise DegenerateDesignError("a fold exclusion leaves no training points")
    return (rowsum - own_fold_sum) / remaining


def compute_weights_cv(times_hours, kappa, fold_of):
    """Cross-validated reciprocal-density weights.

    Each sample's density comes from the KDE trained without its own
    fold; the reciprocals are normalized jointly across all samples.
    """
    t = np.asarray(times_hours, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidArgumentError("need at least one sample time")
    fold_of, m = validate_folds(fold_of, t.size)
    z = hours_to_angle(t)
    cos_diff = np.cos(z[:, None] - z[None, :])
    onehot = np.zeros((t.size, m))
    onehot[np.arange(t.size), fold_of] = 1.0
    sizes = np.bincount(fold_of, minlength=m)
    dens = _cv_densities(cos_diff, kappa, fold_of, onehot, sizes)
    return _normalize_reciprocals(dens)


def information_matrix(times_hours, weights, k, allow_high_order=False):
    """Weighted average of regressor outer products, sum_i w_i f(x_i) f(x_i)^T.

    ``weights=None`` uses the uniform 1/N weighting, which reproduces
    the plain empirical information matrix.  The result is symmetrized
    to remove floating-point asymmetry.
    """
    k = validate_order(k, allow_high_order)
    t = np.asarray(times_hours, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidArgumentError("need at least one sample time")
    p = n_params(k)
    if t.size < p:
        warnings.warn(
            f"only {t.size} samples for {p} coefficients; "
            "the information matrix is singular",
            stacklevel=2,
        )
    if weights is None:
        w = np.full(t.size, 1.0 / t.size)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != t.shape:
            raise InvalidArgumentError("weights must match times in length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgumentError("weights must be finite and nonnegative")
    b = basis_matrix(t, k, allow_high_order)
    m = (b * w[:, None]).T @ b
    return 0.5 * (m + m.T)


def phi_p_criterion(m, p):
    """Eigenvalue design criterion of a symmetric PSD matrix.

    ``p = +inf`` gives the largest eigenvalue, ``p = -inf`` the smallest,
    ``p = 0`` the product of eigenvalues (the determinant), and any
    other p the power mean ``(mean(lambda^p))^(1/p)``.  Negative p with
    a zero eigenvalue raises SingularCriterionError.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError("criterion input must be a square matrix")
    if not np.allclose(m, m.T, atol=1e-10):
        raise InvalidArgumentError("criterion input must be symmetric")
    lam = np.linalg.eigvalsh(m)
    p = float(p)
    if math.isinf(p):
        return float(lam.max()) if p > 0 else float(lam.min())
    if p == 0.0:
        return float(np.prod(lam))
    if p < 0 and lam.min() <= 0.0:
        raise SingularCriterionError(
            f"negative-power criterion p={p} undefined with eigenvalue {lam.min()!r}"
        )
    return float(np.mean(lam ** p) ** (1.0 / p))


def d_criterion_for_kappa(times_hours, kappa, k, fold_of=None, allow_high_order=False):
    """Determinant of the weighted information matrix induced by a
    concentration value.

    With ``fold_of`` given, weights come from fold-excluded densities
    (the cross-validated objective); otherwise from the all-sample KDE.
    """
    t = np.asarray(times_hours, dtype=float)
    if fold_of is None:
        w = compute_weights(t, CircularKde(t, kappa))
    else:
        w = compute_weights_cv(t, kappa, fold_of)
    m = information_matrix(t, w, k, allow_high_order)
    return float(np.linalg.det(m))


@dataclass(frozen=True)
class KappaSearchResult:
    """Outcome of the concentration search.

    ``trace`` lists every (kappa, criterion) pair evaluated, sorted by
    kappa; failed evaluations carry NaN.  ``bound`` is the 1/4^K ceiling
    the criterion cannot exceed.
    """

    kappa_opt: float
    criterion_value: float
    trace: tuple
    bound: float


def select_kappa(
    times_hours,
    k,
    fold_of,
    kappa_lo=1e-3,
    kappa_hi=1e3,
    n_grid=60,
    n_refine=40,
    allow_high_order=False,
):
    """Maximize the cross-validated determinant criterion over kappa.

    A log-spaced coarse grid locates the best cell, then golden-section
    refinement (in log space) polishes it.  Among evaluations within
    1e-12 of the maximum, the smallest kappa wins: a flatter kernel
    keeps the weights closer to uniform.  Deterministic for fixed
    inputs.

    Parameters
    ----------
    times_hours : array-like
        Sample times, at least 2.
    k : int
        Harmonic order.
    fold_of : array of int
        Fold index per sample (``kde.loo_folds`` for leave-one-out).
    kappa_lo, kappa_hi : float
        Search interval, 0 < lo < hi.
    n_grid, n_refine : int
        Evaluation budget for the grid scan and the refinement stage.

    Returns
    -------
    KappaSearchResult
    """
    t = np.asarray(times_hours, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidArgumentError("need at least two sample times")
    if not (0 < kappa_lo < kappa_hi) or not math.isfinite(kappa_hi):
        raise InvalidArgumentError(
            f"need 0 < kappa_lo < kappa_hi, got [{kappa_lo!r}, {kappa_hi!r}]"
        )
    if n_grid < 2:
        raise InvalidArgumentError("grid budget must be >= 2")
    k = validate_order(k, allow_high_order)
    fold_of, m = validate_folds(fold_of, t.size)

    z = hours_to_angle(t)
    cos_diff = np.cos(z[:, None] - z[None, :])
    onehot = np.zeros((t.size, m))
    onehot[np.arange(t.size), fold_of] = 1.0
    sizes = np.bincount(fold_of, minlength=m)
    b = basis_matrix(t, k, allow_high_order)

    evals = {}

    def objective(kappa):
        kappa = float(kappa)
        if kappa in evals:
            return evals[kappa]
        try:
            dens = _cv_densities(cos_diff, kappa, fold_of, onehot, sizes)
            w = _normalize_reciprocals(dens)
            im = (b * w[:, None]).T @ b
            im = 0.5 * (im + im.T)
            val = float(np.linalg.det(im))
        except DegenerateDesignError:
            val = math.nan
        evals[kappa] = val
        return val

    grid = np.geomspace(kappa_lo, kappa_hi, n_grid)
    grid_vals = np.array([objective(kap) for kap in grid])
    finite = np.isfinite(grid_vals)
    if not finite.any():
        raise SearchFailureError("every grid evaluation was degenerate")

    best_idx = int(np.nanargmax(grid_vals))

    # Golden-section refinement on the bracketing cell, in log space.
    lo = math.log(grid[max(best_idx - 1, 0)])
    hi = math.log(grid[min(best_idx + 1, n_grid - 1)])
    budget = max(n_refine, 0)
    if hi > lo and budget >= 2:
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1 = objective(math.exp(x1))
        f2 = objective(math.exp(x2))
        for _ in range(budget - 2):
            # NaN evaluations count as -inf so refinement drifts away from them
            v1 = f1 if math.isfinite(f1) else -math.inf
            v2 = f2 if math.isfinite(f2) else -math.inf
            if v1 > v2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = objective(math.exp(x1))
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = objective(math.exp(x2))

    finite_pairs = [(kap, val) for kap, val in evals.items() if math.isfinite(val)]
    if not finite_pairs:
        raise SearchFailureError("every evaluation was degenerate")
    vmax = max(val for _, val in finite_pairs)
    kappa_opt = min(kap for kap, val in finite_pairs if val >= vmax - 1e-12)

    trace = tuple(sorted(evals.items()))
    return KappaSearchResult(
        kappa_opt=float(kappa_opt),
        criterion_value=float(evals[kappa_opt]),
        trace=trace,
        bound=d_optimal_bound(k),
    )
