"""Monte Carlo study of Wald/F statistic stability under uneven sampling.

A sweep fixes a data-generating setting, varies the base phase shift
over a grid, and for every phase runs many trials.  Each trial draws two
data sets over the same sample count (one on the study's collection
times, one on an equispaced grid) and compares three regressions:
unweighted on the sampled design, unweighted on the equispaced design,
and density-weighted on the sampled design.  Per phase the mean
statistics are recorded; the spread of those phase means (coefficient
of variation) measures how much the sampling design leaks into the
inference.

Reproducibility: all draws use counter-based substreams.
``SeedSequence([seed, 0])`` drives synthetic time-vector generation;
``SeedSequence([seed, 1, phase_index, trial_index])`` drives the trial
at that (0-based) phase/trial coordinate, consuming draws in the
documented ``generate_trial`` order for data set one, then data set two.
Trials are therefore independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from .basis import validate_order
from .design import compute_weights, select_kappa
from .errors import (
    InvalidArgumentError,
    UndefinedStatisticError,
    WcosinorError,
)
from .inference import F_MODE_PAPER, f_test, wald_test
from .kde import CircularKde, loo_folds
from .regression import fit, fit_variance

ARM_UNWEIGHTED = "unweighted"
ARM_EQUISPACED = "equispaced"
ARM_WEIGHTED = "weighted"
ARMS = (ARM_UNWEIGHTED, ARM_EQUISPACED, ARM_WEIGHTED)

STAT_WALD = "wald"
STAT_F = "f"


def default_phase_grid(n_points=20):
    """Phase grid {2*pi*j/n : j = 1..n}; the study default is 20 points."""
    if n_points < 1:
        raise InvalidArgumentError("need at least one phase point")
    return 2.0 * math.pi * np.arange(1, n_points + 1) / n_points


def equispaced_times(n):
    """Evenly spaced times 24*(i-1)/n for i = 1..n."""
    if n < 1:
        raise InvalidArgumentError("need at least one sample")
    return 24.0 * np.arange(n) / n


def sample_truncated_normal(mu, sigma2, lower, upper, rng, size=None):
    """Draw from a normal(mu, sigma2) conditioned on [lower, upper].

    Uses the inverse-CDF construction: map a uniform draw into the CDF
    band of the interval and invert the normal quantile, which stays
    exact no matter how far the interval sits in the tail.  Results are
    clipped to the interval to guard the support against floating-point
    edge cases.
    """
    if not lower < upper:
        raise InvalidArgumentError(f"need lower < upper, got [{lower!r}, {upper!r}]")
    if not sigma2 > 0:
        raise InvalidArgumentError(f"variance must be > 0, got {sigma2!r}")
    sigma = math.sqrt(sigma2)
    p_lo = float(_sp.ndtr((lower - mu) / sigma))
    p_hi = float(_sp.ndtr((upper - mu) / sigma))
    u = rng.random(size)
    band = p_lo + (p_hi - p_lo) * u
    draws = mu + sigma * _sp.ndtri(band)
    return np.clip(draws, lower, upper)


def sample_von_mises(mu, kappa, rng, size=None):
    """Draw angles on [0, 2*pi) from a von Mises law (kappa=0 is uniform)."""
    if kappa < 0:
        raise InvalidArgumentError(f"concentration must be >= 0, got {kappa!r}")
    return np.mod(rng.vonmises(mu, kappa, size), 2.0 * math.pi)


@dataclass(frozen=True)
class TruncatedNormal:
    """Parameter specification: normal(mu, sigma2) truncated to [lower, upper]."""

    mu: float
    sigma2: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidArgumentError("truncation bounds must satisfy lower < upper")
        if not self.sigma2 > 0:
            raise InvalidArgumentError("variance must be > 0")

    def sample(self, rng, size=None):
        return sample_truncated_normal(
            self.mu, self.sigma2, self.lower, self.upper, rng, size
        )


@dataclass(frozen=True)
class SimSetting:
    """Data-generating recipe for one simulated study population.

    ``mesor`` and ``amplitude`` are either fixed floats or
    TruncatedNormal specs redrawn per sample; ``phase_fixed`` pins every
    harmonic's phase (otherwise the sweep's base phase is used).
    ``time_source`` names where collection times come from:
    "equispaced", "vonmises:MU,KAPPA" (angles scaled by 12/pi to hours),
    "mixture:MU1,K1,MU2,K2,W1", or "file:PATH".
    """

    setting_id: int
    mesor: object = 6.0
    amplitude: object = 0.5
    phase_fixed: float | None = None
    time_source: str = "vonmises:0,1"
    n_times: int = 50


_MESOR_VARIED = TruncatedNormal(6.0, 1.0, 4.0, 8.0)
_AMPLITUDE_VARIED = TruncatedNormal(0.5, 0.25, 0.0, 1.0)


def make_setting(setting_id, time_source=None, n_times=50):
    """Build one of the seven study settings.

    1: fixed level, fixed swing        5: varied swing, phase pinned at 0
    2-3: per-sample level, fixed swing 6-7: per-sample level and swing
    4: fixed level, per-sample swing

    Collection times default to a von Mises synthetic stand-in; pass a
    "file:..." source to use recorded study times.
    """
    recipes = {
        1: dict(mesor=6.0, amplitude=0.5),
        2: dict(mesor=_MESOR_VARIED, amplitude=0.5),
        3: dict(mesor=_MESOR_VARIED, amplitude=0.5),
        4: dict(mesor=6.0, amplitude=_AMPLITUDE_VARIED),
        5: dict(mesor=6.0, amplitude=_AMPLITUDE_VARIED, phase_fixed=0.0),
        6: dict(mesor=_MESOR_VARIED, amplitude=_AMPLITUDE_VARIED),
        7: dict(mesor=_MESOR_VARIED, amplitude=_AMPLITUDE_VARIED),
    }
    if setting_id not in recipes:
        raise InvalidArgumentError(f"setting id must be 1..7, got {setting_id!r}")
    kwargs = recipes[setting_id]
    if time_source is not None:
        kwargs["time_source"] = time_source
    return SimSetting(setting_id=setting_id, n_times=n_times, **kwargs)


def resolve_time_source(source, n, rng):
    """Materialize a time vector (hours) from a time-source string."""
    if source == "equispaced":
        return equispaced_times(n)
    if source.startswith("vonmises:"):
        try:
            mu, kappa = (float(v) for v in source.split(":", 1)[1].split(","))
        except ValueError:
            raise InvalidArgumentError(f"bad time source {source!r}") from None
        return sample_von_mises(mu, kappa, rng, n) * (12.0 / math.pi)
    if source.startswith("mixture:"):
        try:
            mu1, k1, mu2, k2, w1 = (
                float(v) for v in source.split(":", 1)[1].split(",")
            )
        except ValueError:
            raise InvalidArgumentError(f"bad time source {source!r}") from None
        if not 0.0 <= w1 <= 1.0:
            raise InvalidArgumentError("mixture weight must lie in [0, 1]")
        z1 = sample_von_mises(mu1, k1, rng, n)
        z2 = sample_von_mises(mu2, k2, rng, n)
        pick = rng.random(n) < w1
        return np.where(pick, z1, z2) * (12.0 / math.pi)
    if source.startswith("file:"):
        from .panel import read_time_csv

        return read_time_csv(source.split(":", 1)[1])
    raise InvalidArgumentError(f"unknown time source {source!r}")


def _draw_param(spec, rng, n):
    """Per-sample parameter draws; fixed specs consume no randomness."""
    if isinstance(spec, TruncatedNormal):
        return spec.sample(rng, n)
    return np.full(n, float(spec))


def generate_trial(setting, phase_base, k, rng, times=None, noise=True):
    """Generate one trial's (times, responses) under a setting.

    Responses follow mesor + sum_k amp_k * cos(pi*k*x/12 + phase) with
    standard normal noise.  Draws consume the generator in a fixed
    order: per-sample mesor (if distributional), per-sample amplitude
    for each harmonic in turn (if distributional), then noise.  Passing
    ``noise=False`` (a test hook) skips the noise draws entirely.

    ``times=None`` resolves the setting's time source with ``rng``;
    passing an explicit vector treats the times as given data.
    """
    k = validate_order(k)
    if times is None:
        times = resolve_time_source(setting.time_source, setting.n_times, rng)
    t = np.asarray(times, dtype=float)
    n = t.size
    phase = setting.phase_fixed if setting.phase_fixed is not None else float(phase_base)
    mesor = _draw_param(setting.mesor, rng, n)
    y = mesor.copy()
    for j in range(1, k + 1):
        amp = _draw_param(setting.amplitude, rng, n)
        y += amp * np.cos(math.pi * j * t / 12.0 + phase)
    if noise:
        y += rng.standard_normal(n)
    return t, y


def coefficient_of_variation(values):
    """Population standard deviation divided by the mean.

    Raises UndefinedStatisticError when the mean is zero.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError("need a nonempty 1-D array")
    mean = float(v.mean())
    if mean == 0.0:
        raise UndefinedStatisticError("coefficient of variation undefined for zero mean")
    return float(v.std()) / mean


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Sweep controls: model order, phase grid, trial count, seed.

    The kappa_* fields bound the concentration search used by the
    weighted arm.
    """

    k: int = 1
    phase_grid: np.ndarray = field(default_factory=default_phase_grid)
    trials: int = 500
    seed: int = 0
    f_mode: str = F_MODE_PAPER
    kappa_lo: float = 1e-3
    kappa_hi: float = 1e3
    kappa_grid_points: int = 60
    kappa_refine_points: int = 40

    def __post_init__(self):
        validate_order(self.k)
        grid = np.asarray(self.phase_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise InvalidArgumentError("phase grid must be a nonempty 1-D array")
        object.__setattr__(self, "phase_grid", grid)
        if self.trials < 1:
            raise InvalidArgumentError("need at least one trial")


@dataclass(eq=False)
class SweepSummary:
    """Aggregated sweep output.

    ``mean_wald_over_n`` and ``mean_f`` map arm name to per-phase mean
    statistics; ``cov`` maps (arm, statistic) to the coefficient of
    variation of those phase means.  ``error_counts`` tallies trials a
    given arm could not score.
    """

    setting_id: int
    phases: np.ndarray
    mean_wald_over_n: dict
    mean_f: dict
    cov: dict
    error_counts: dict
    kappa_opt: float
    kappa_criterion: float
    n_times: int
    config: RunConfig


def run_sweep(setting, config):
    """Run the full phase sweep for one setting.

    The collection-time vector is resolved once (it plays the role of
    recorded study data, so it is held fixed across trials); the
    weighted arm's concentration is selected once for the same reason --
    the leave-one-out search is deterministic in the times, so per-trial
    reselection would reproduce the same value.
    """
    k = validate_order(config.k)
    rng_times = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    times = resolve_time_source(setting.time_source, setting.n_times, rng_times)
    n = times.size
    equi = equispaced_times(n)

    search = select_kappa(
        times,
        k,
        loo_folds(n),
        kappa_lo=config.kappa_lo,
        kappa_hi=config.kappa_hi,
        n_grid=config.kappa_grid_points,
        n_refine=config.kappa_refine_points,
    )
    w_weighted = compute_weights(times, CircularKde(times, search.kappa_opt))
    uniform = np.full(n, 1.0 / n)

    phases = np.asarray(config.phase_grid, dtype=float)
    wald_means = {arm: [] for arm in ARMS}
    f_means = {arm: [] for arm in ARMS}
    errors = {arm: 0 for arm in ARMS}

    for j, phase in enumerate(phases):
        acc_wald = {arm: [] for arm in ARMS}
        acc_f = {arm: [] for arm in ARMS}
        for t_idx in range(config.trials):
            rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, 1, j, t_idx])
            )
            _, y1 = generate_trial(setting, phase, k, rng, times=times)
            _, y2 = generate_trial(setting, phase, k, rng, times=equi)
            jobs = (
                (ARM_UNWEIGHTED, times, y1, None, uniform),
                (ARM_EQUISPACED, equi, y2, None, uniform),
                (ARM_WEIGHTED, times, y1, w_weighted, w_weighted),
            )
            for arm, t_arm, y_arm, fit_w, stat_w in jobs:
                try:
                    arm_fit = fit(t_arm, y_arm, weights=fit_w, k=k)
                    wald = wald_test(arm_fit, fit_variance(arm_fit))
                    ftr = f_test(t_arm, y_arm, stat_w, arm_fit, mode=config.f_mode)
                except WcosinorError:
                    errors[arm] += 1
                    continue
                acc_wald[arm].append(wald.stat / n)
                acc_f[arm].append(ftr.stat)
        for arm in ARMS:
            wald_means[arm].append(float(np.mean(acc_wald[arm])))
            f_means[arm].append(float(np.mean(acc_f[arm])))

    cov = {}
    for arm in ARMS:
        cov[(arm, STAT_WALD)] = coefficient_of_variation(wald_means[arm])
        cov[(arm, STAT_F)] = coefficient_of_variation(f_means[arm])

    return SweepSummary(
        setting_id=setting.setting_id,
        phases=phases,
        mean_wald_over_n={arm: np.array(wald_means[arm]) for arm in ARMS},
        mean_f={arm: np.array(f_means[arm]) for arm in ARMS},
        cov=cov,
        error_counts=errors,
        kappa_opt=search.kappa_opt,
        kappa_criterion=search.criterion_value,
        n_times=n,
        config=config,
    )
