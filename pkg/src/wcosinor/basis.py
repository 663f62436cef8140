"""Trigonometric regression basis over the 24-hour circle.

The order-K model uses the regressor vector

    f(x) = [1, sin(pi x / 12), cos(pi x / 12), ...,
            sin(pi K x / 12), cos(pi K x / 12)]

so a fitted coefficient vector has length 2K + 1: the intercept (MESOR)
followed by one (sine, cosine) pair per harmonic.  Times are hours and
are reduced modulo 24 before evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

PERIOD_HOURS = 24.0

# Orders above this are unusual for 24-hour expression data and must be
# requested explicitly.
MAX_DEFAULT_ORDER = 3


def validate_order(k, allow_high_order=False):
    """Check a harmonic order and return it as a plain int.

    Orders 1..3 are accepted by default; anything larger requires
    ``allow_high_order=True``.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InvalidArgumentError(f"harmonic order must be an integer, got {k!r}")
    k = int(k)
    if k < 1:
        raise InvalidArgumentError(f"harmonic order must be >= 1, got {k}")
    if k > MAX_DEFAULT_ORDER and not allow_high_order:
        raise InvalidArgumentError(
            f"harmonic order {k} exceeds {MAX_DEFAULT_ORDER}; "
            "pass allow_high_order=True to override"
        )
    return k


def n_params(k):
    """Number of regression coefficients for an order-k model (2k + 1)."""
    return 2 * k + 1


def hours_to_angle(x_hours):
    """Map hours to angles in [0, 2*pi): z = pi * (x mod 24) / 12."""
    x = np.asarray(x_hours, dtype=float)
    return np.mod(x, PERIOD_HOURS) * (np.pi / 12.0)


def eval_basis(x_hours, k, allow_high_order=False):
    """Evaluate the order-k regressor vector at a single time.

    Parameters
    ----------
    x_hours : float
        Sample time in hours; reduced modulo 24 internally.
    k : int
        Harmonic order.

    Returns
    -------
    ndarray of shape (2k + 1,)
        ``[1, sin(z), cos(z), sin(2z), cos(2z), ...]`` with
        ``z = pi * x / 12``.
    """
    k = validate_order(k, allow_high_order)
    x = float(x_hours)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"time must be finite, got {x!r}")
    z = (x % PERIOD_HOURS) * (math.pi / 12.0)
    out = np.empty(2 * k + 1)
    out[0] = 1.0
    for j in range(1, k + 1):
        out[2 * j - 1] = math.sin(j * z)
        out[2 * j] = math.cos(j * z)
    return out


def basis_matrix(times_hours, k, allow_high_order=False):
    """Stack regressor vectors for a vector of times into an (N, 2k+1) matrix."""
    k = validate_order(k, allow_high_order)
    t = np.asarray(times_hours, dtype=float)
    if t.ndim != 1:
        raise InvalidArgumentError("times must be a 1-D array")
    if not np.all(np.isfinite(t)):
        raise InvalidArgumentError("times must all be finite")
    z = hours_to_angle(t)
    cols = [np.ones_like(z)]
    for j in range(1, k + 1):
        cols.append(np.sin(j * z))
        cols.append(np.cos(j * z))
    return np.column_stack(cols)


@dataclass
class AmplitudePhase:
    """Polar form of a coefficient vector.

    ``mesor`` is the intercept; harmonic ``j`` (1-based) contributes
    ``amplitudes[j-1] * cos(pi * j * x / 12 + phases[j-1])`` to the curve.
    Phases live in [0, 2*pi), with phase 0 assigned to zero-amplitude
    harmonics by convention.
    """

    mesor: float
    amplitudes: np.ndarray
    phases: np.ndarray

    @property
    def order(self):
        return len(self.amplitudes)


def theta_to_amplitude_phase(theta):
    """Convert a coefficient vector to its amplitude/phase representation.

    Uses the pairing theta[2j-1] = -amp_j * sin(phase_j) and
    theta[2j] = amp_j * cos(phase_j), so the returned phases always
    reconstruct ``theta`` exactly (see ``amplitude_phase_to_theta``).

    Raises
    ------
    InvalidArgumentError
        If ``theta`` does not have odd length >= 3.
    """
    th = np.asarray(theta, dtype=float)
    if th.ndim != 1 or th.size < 3 or th.size % 2 == 0:
        raise InvalidArgumentError(
            f"coefficient vector must have odd length >= 3, got shape {th.shape}"
        )
    k = (th.size - 1) // 2
    amps = np.empty(k)
    phases = np.empty(k)
    for j in range(1, k + 1):
        a, b = th[2 * j - 1], th[2 * j]
        mu = math.hypot(a, b)
        amps[j - 1] = mu
        if mu == 0.0:
            phases[j - 1] = 0.0
        else:
            # atan2(-a, b) solves a = -mu*sin(phi), b = mu*cos(phi)
            phases[j - 1] = math.atan2(-a, b) % (2.0 * math.pi)
    return AmplitudePhase(mesor=float(th[0]), amplitudes=amps, phases=phases)


def amplitude_phase_to_theta(ap):
    """Inverse of ``theta_to_amplitude_phase``."""
    amps = np.asarray(ap.amplitudes, dtype=float)
    phases = np.asarray(ap.phases, dtype=float)
    if amps.shape != phases.shape or amps.ndim != 1 or amps.size < 1:
        raise InvalidArgumentError("amplitudes and phases must be matching 1-D arrays")
    if np.any(amps < 0):
        raise InvalidArgumentError("amplitudes must be nonnegative")
    k = amps.size
    th = np.empty(2 * k + 1)
    th[0] = float(ap.mesor)
    for j in range(1, k + 1):
        th[2 * j - 1] = -amps[j - 1] * math.sin(phases[j - 1])
        th[2 * j] = amps[j - 1] * math.cos(phases[j - 1])
    return th
