"""Tests for Wald/F statistics, the analytic variance block, and panel
screening."""

import math

import numpy as np
import pytest

from wcosinor.basis import basis_matrix
from wcosinor.errors import DegenerateDesignError, InvalidArgumentError
from wcosinor.inference import (
    bessel_variance_oracle,
    f_test,
    screen_panel,
    wald_test,
)
from wcosinor.panel import TimeSeriesPanel
from wcosinor.regression import TrigFit, fit, fit_variance
from wcosinor.simulate import equispaced_times, sample_von_mises
from wcosinor.special import f_sf

SQRT2 = math.sqrt(2.0)


def make_fit(theta, sigma2=1.0, n=100, k=1, info=None):
    theta = np.asarray(theta, dtype=float)
    if info is None:
        info = np.diag([1.0] + [0.5] * (len(theta) - 1))
    return TrigFit(
        theta=theta,
        sigma2=sigma2,
        info=info,
        weights=np.full(n, 1.0 / n),
        n=n,
        k=k,
    )


def variance_with_gamma_block(inv_block, n_harm=2):
    """Full covariance whose harmonic block is the inverse of ``inv_block``."""
    v = np.zeros((n_harm + 1, n_harm + 1))
    v[0, 0] = 1.0
    v[1:, 1:] = np.linalg.inv(inv_block)
    return v


class TestWald:
    def test_worked_example_triple(self):
        oracle = bessel_variance_oracle()
        var = variance_with_gamma_block(oracle)
        n = 100
        expected = {
            (1.0, 1.0): 0.800,
            (0.0, SQRT2): 0.708,
            (SQRT2, 0.0): 0.892,
        }
        stats = {}
        for gamma, target in expected.items():
            trig = make_fit([4.0, *gamma], n=n)
            res = wald_test(trig, var)
            assert res.stat / n == pytest.approx(target, abs=1e-3)
            assert res.df == 2
            stats[gamma] = res.stat
        assert stats[(SQRT2, 0.0)] > stats[(1.0, 1.0)] > stats[(0.0, SQRT2)]

    def test_zero_signal(self):
        var = np.diag([1.0, 2.0, 2.0])
        res = wald_test(make_fit([4.0, 0.0, 0.0], n=50), var)
        assert res.stat == 0.0
        assert res.p == 1.0

    def test_equispaced_unit_norm_statistic_equals_n(self):
        # diag(1,2,2) covariance: tau = N * ||gamma||^2 / 2 = N at ||gamma||^2 = 2
        var = np.diag([1.0, 2.0, 2.0])
        for gamma in ([1.0, 1.0], [0.0, SQRT2], [SQRT2, 0.0]):
            res = wald_test(make_fit([4.0, *gamma], n=73), var)
            assert res.stat == pytest.approx(73.0, abs=1e-9)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        t = rng.uniform(0, 24, 30)
        y = 5.0 + np.cos(math.pi * t / 12.0) + rng.normal(0, 1, 30)
        base = wald_test(*(lambda f: (f, fit_variance(f)))(fit(t, y, None, 1)))
        scaled = wald_test(*(lambda f: (f, fit_variance(f)))(fit(t, 4.0 * y, None, 1)))
        assert scaled.stat == pytest.approx(base.stat, rel=1e-8)

    def test_p_value_monotone_in_statistic(self):
        var = np.diag([1.0, 2.0, 2.0])
        ps = [
            wald_test(make_fit([0.0, g, 0.0], n=40), var).p
            for g in (0.0, 0.5, 1.0, 2.0)
        ]
        assert all(a >= b for a, b in zip(ps, ps[1:]))

    def test_singular_block_rejected(self):
        var = np.zeros((3, 3))
        var[0, 0] = 1.0
        with pytest.raises(DegenerateDesignError):
            wald_test(make_fit([4.0, 1.0, 1.0]), var)


class TestFTest:
    def test_uniform_weights_reduce_to_plain_averages(self):
        rng = np.random.default_rng(1)
        t = rng.uniform(0, 24, 16)
        y = 6.0 + np.cos(math.pi * t / 12.0) + rng.normal(0, 0.5, 16)
        trig = fit(t, y, None, 1)
        res = f_test(t, y, np.full(16, 1.0 / 16.0), trig)
        # plain-average recomputation with the sample mean
        ybar = y.mean()
        resid = y - basis_matrix(t, 1) @ trig.theta
        num = np.mean((y - ybar) ** 2 - resid ** 2) / 2.0
        den = np.mean((y - ybar) ** 2) / (16 - 3)
        assert res.stat == pytest.approx(num / den, rel=1e-10)
        assert (res.d1, res.d2) == (1, 13)

    def test_constant_response_is_flagged(self):
        t = np.linspace(0, 23, 12)
        y = np.full(12, 2.0)
        trig = fit(t, y, None, 1)
        res = f_test(t, y, np.full(12, 1.0 / 12.0), trig)
        assert res.undefined
        assert res.stat == 0.0
        assert res.p == 1.0

    def test_term_by_term_recomputation(self):
        rng = np.random.default_rng(2)
        t = rng.uniform(0, 24, 12)
        y = 5.0 + 0.8 * np.cos(math.pi * t / 12.0 + 1.0) + rng.normal(0, 1, 12)
        w = rng.uniform(0.2, 1.0, 12)
        w /= w.sum()
        trig = fit(t, y, w, 1)
        res = f_test(t, y, w, trig)
        # spreadsheet-style recomputation, one term at a time
        ybar = sum(wi * yi for wi, yi in zip(w, y))
        fitted = basis_matrix(t, 1) @ trig.theta
        num = sum(
            wi * ((yi - ybar) ** 2 - (yi - fi) ** 2)
            for wi, yi, fi in zip(w, y, fitted)
        ) / 2.0
        den = sum(wi * (yi - ybar) ** 2 for wi, yi in zip(w, y)) / (12 - 3)
        assert res.stat == pytest.approx(num / den, rel=1e-10)
        assert (res.d1, res.d2) == (1, 9)
        assert res.p == pytest.approx(f_sf(res.stat, 1, 9), rel=1e-12)

    def test_classical_mode_uses_residual_denominator(self):
        rng = np.random.default_rng(3)
        t = rng.uniform(0, 24, 14)
        y = 6.0 + np.cos(math.pi * t / 12.0) + rng.normal(0, 0.7, 14)
        w = np.full(14, 1.0 / 14.0)
        trig = fit(t, y, w, 1)
        res = f_test(t, y, w, trig, mode="classical")
        ybar = float(np.sum(w * y))
        resid = y - basis_matrix(t, 1) @ trig.theta
        num = float(np.sum(w * ((y - ybar) ** 2 - resid ** 2))) / 2.0
        den = float(np.sum(w * resid ** 2)) / (14 - 3)
        assert res.stat == pytest.approx(num / den, rel=1e-10)
        assert (res.d1, res.d2) == (2, 11)

    def test_unnormalized_weights_rejected(self):
        t = np.linspace(0, 23, 10)
        trig = fit(t, np.sin(t), None, 1)
        with pytest.raises(InvalidArgumentError):
            f_test(t, np.sin(t), np.full(10, 0.2), trig)

    def test_bad_mode(self):
        t = np.linspace(0, 23, 10)
        trig = fit(t, np.sin(t), None, 1)
        with pytest.raises(InvalidArgumentError):
            f_test(t, np.sin(t), np.full(10, 0.1), trig, mode="anova")


class TestBesselVarianceOracle:
    def test_numeric_values(self):
        oracle = bessel_variance_oracle()
        assert oracle[0, 0] == pytest.approx(0.446, abs=1e-3)
        assert oracle[1, 1] == pytest.approx(0.354, abs=1e-3)

    def test_off_diagonals_are_exactly_zero(self):
        oracle = bessel_variance_oracle()
        assert oracle[0, 1] == 0.0
        assert oracle[1, 0] == 0.0

    def test_monte_carlo_schur_complement(self):
        rng = np.random.default_rng(4)
        hours = sample_von_mises(0.0, 1.0, rng, 200_000) * (12.0 / math.pi)
        b = basis_matrix(hours, 1)
        moment = b.T @ b / b.shape[0]
        block = moment[1:, 1:] - np.outer(moment[0, 1:], moment[0, 1:])
        assert np.abs(block - bessel_variance_oracle()).max() < 6e-3


def make_panel(times, rows, ids=None):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    ids = ids or [f"g{i}" for i in range(rows.shape[0])]
    return TimeSeriesPanel(
        times=np.asarray(times, dtype=float), gene_ids=ids, expr=rows
    )


class TestScreenPanel:
    def test_constant_gene_is_flagged(self):
        t = np.linspace(0, 23, 12)
        panel = make_panel(t, [np.full(12, 4.0)])
        (report,) = screen_panel(panel)
        assert report.wald_stat == 0.0
        assert report.wald_p == 1.0
        assert report.f_p == 1.0
        assert "zero_variance" in report.flags
        assert "undefined_f" in report.flags

    def test_worked_triple_ordering_under_clustered_design(self):
        rng = np.random.default_rng(5)
        t = sample_von_mises(0.0, 1.0, rng, 400) * (12.0 / math.pi)
        b = basis_matrix(t, 1)
        noise = rng.normal(0.0, 1e-3, 400)  # shared so sigma2 cancels in ordering
        rows = [
            b @ np.array([4.0, 1.0, 1.0]) + noise,
            b @ np.array([4.0, 0.0, SQRT2]) + noise,
            b @ np.array([4.0, SQRT2, 0.0]) + noise,
        ]
        r1, r2, r3 = screen_panel(make_panel(t, rows))
        assert r3.wald_stat > r1.wald_stat > r2.wald_stat

    def test_batch_equals_per_gene_computation(self):
        rng = np.random.default_rng(6)
        t = rng.uniform(0, 24, 20)
        rows = rng.normal(6, 1, size=(50, 20))
        reports = screen_panel(make_panel(t, rows), k=1)
        for g, report in enumerate(reports):
            single = fit(t, rows[g], None, 1)
            wald = wald_test(single, fit_variance(single))
            ftr = f_test(t, rows[g], single.weights, single)
            assert report.wald_stat == wald.stat
            assert report.wald_p == wald.p
            assert report.f_stat == ftr.stat
            assert report.f_p == ftr.p

    def test_noiseless_rhythmic_gene_gets_infinite_statistic(self):
        t = equispaced_times(24)
        y = basis_matrix(t, 1) @ np.array([4.0, 1.0, 0.0])
        (report,) = screen_panel(make_panel(t, [y]))
        assert math.isinf(report.wald_stat)
        assert report.wald_p == 0.0
        assert "zero_variance" in report.flags

    def test_report_order_matches_panel(self):
        rng = np.random.default_rng(7)
        t = rng.uniform(0, 24, 10)
        rows = rng.normal(0, 1, size=(4, 10))
        ids = ["d", "b", "c", "a"]
        reports = screen_panel(make_panel(t, rows, ids=ids))
        assert [r.gene_id for r in reports] == ids

    def test_weighted_mode_uses_given_weights(self):
        rng = np.random.default_rng(8)
        t = rng.uniform(0, 24, 15)
        rows = rng.normal(6, 1, size=(3, 15))
        w = rng.uniform(0.2, 1.0, 15)
        w /= w.sum()
        reports = screen_panel(make_panel(t, rows), weights=w)
        single = fit(t, rows[0], w, 1)
        expected = wald_test(single, fit_variance(single))
        assert reports[0].wald_stat == expected.stat
