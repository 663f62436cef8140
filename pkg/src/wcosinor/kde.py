"""Circular kernel density estimation of sample-collection times.

Times in hours map to angles z = pi * x / 12 on [0, 2*pi); the density
estimate is per unit angle (radian).  The downstream weight function
only uses reciprocals of density values and then normalizes, so the
radians-vs-hours constant cancels there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from .basis import hours_to_angle
from .errors import DegenerateDesignError, InvalidArgumentError

# Densities are floored here before taking reciprocals so that extreme
# concentrations cannot overflow the weight computation.
DENSITY_FLOOR = 1e-300

KERNEL_VON_MISES = "vonmises"
_SUPPORTED_KERNELS = (KERNEL_VON_MISES,)


def vm_kernel(z, kappa):
    """Von Mises kernel exp(kappa*cos z) / (2*pi*I0(kappa)).

    Evaluated as exp(kappa*(cos z - 1)) / (2*pi*exp(-kappa)*I0(kappa))
    so it stays finite for large concentrations.  ``z`` may be a scalar
    or array of angles in radians.
    """
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 0:
        raise InvalidArgumentError(f"concentration must be finite and > 0, got {kappa!r}")
    z = np.asarray(z, dtype=float)
    scaled_norm = 2.0 * math.pi * float(_sp.ive(0, kappa))
    out = np.exp(kappa * (np.cos(z) - 1.0)) / scaled_norm
    return float(out) if out.ndim == 0 else out


def loo_folds(n):
    """Leave-one-out fold assignment: sample i forms fold i."""
    if n < 1:
        raise InvalidArgumentError("need at least one sample")
    return np.arange(n)


def make_folds(n, m, seed):
    """Randomly partition n samples into m nonempty folds.

    Samples are permuted with a seeded generator and dealt round-robin,
    so every fold has floor(n/m) or ceil(n/m) members.
    """
    if m < 1 or m > n:
        raise InvalidArgumentError(f"fold count must be in 1..{n}, got {m}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x0F01]))
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % m
    return fold_of


def validate_folds(fold_of, n):
    """Check a fold map: one fold per sample, indices 0..M-1, all folds nonempty."""
    f = np.asarray(fold_of)
    if f.shape != (n,):
        raise InvalidArgumentError(f"fold assignment must have shape ({n},), got {f.shape}")
    if not np.issubdtype(f.dtype, np.integer):
        raise InvalidArgumentError("fold indices must be integers")
    m = int(f.max()) + 1
    if f.min() < 0:
        raise InvalidArgumentError("fold indices must be nonnegative")
    counts = np.bincount(f, minlength=m)
    if np.any(counts == 0):
        raise InvalidArgumentError("every fold index up to the maximum must be nonempty")
    return f.astype(int), m


@dataclass(frozen=True)
class CircularKde:
    """Kernel density estimate of collection times on the 24-hour circle.

    Parameters
    ----------
    times_hours : array-like
        Training times in hours (reduced modulo 24).
    kappa : float
        Von Mises concentration, > 0.
    kernel : str
        Kernel family tag; only "vonmises" is implemented.
    """

    times_hours: np.ndarray
    kappa: float
    kernel: str = KERNEL_VON_MISES
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times_hours, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise InvalidArgumentError("need a 1-D array with at least one training time")
        if not np.all(np.isfinite(t)):
            raise InvalidArgumentError("training times must be finite")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise InvalidArgumentError(f"concentration must be > 0, got {self.kappa!r}")
        if self.kernel not in _SUPPORTED_KERNELS:
            raise InvalidArgumentError(f"unsupported kernel {self.kernel!r}")
        object.__setattr__(self, "times_hours", t)
        object.__setattr__(self, "angles", hours_to_angle(t))

    @property
    def n(self):
        return self.angles.size

    def density(self, x_hours):
        """Average kernel density at query time(s), per unit angle."""
        zq = hours_to_angle(x_hours)
        diff = np.atleast_1d(zq)[:, None] - self.angles[None, :]
        vals = vm_kernel(diff, self.kappa).mean(axis=1)
        return float(vals[0]) if np.ndim(zq) == 0 else vals

    def density_excluding(self, fold_of, fold_index, x_hours):
        """Density using only training points outside the given fold.

        Normalization is 1 / (N - |fold|).  Excluding an empty fold
        reproduces ``density`` exactly; excluding everything raises
        DegenerateDesignError.
        """
        f = np.asarray(fold_of)
        if f.shape != (self.n,):
            raise InvalidArgumentError(
                f"fold assignment must have shape ({self.n},), got {f.shape}"
            )
        keep = f != fold_index
        n_keep = int(keep.sum())
        if n_keep == 0:
            raise DegenerateDesignError(
                f"excluding fold {fold_index} leaves no training points"
            )
        zq = hours_to_angle(x_hours)
        diff = np.atleast_1d(zq)[:, None] - self.angles[None, keep]
        vals = vm_kernel(diff, self.kappa).sum(axis=1) / n_keep
        return float(vals[0]) if np.ndim(zq) == 0 else vals
